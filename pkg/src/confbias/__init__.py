"""Exposure-bias laboratory for score-based generative models of point-set conformations."""
from .bias import BiasReport, bias_histogram, estimate_bias
from .errors import (ConfigurationError, DegenerateGeometryError, DomainError,
                     InsufficientDataError, PersistenceError, SamplingError, ShapeError,
                     TrainingError)
from .metrics import (EvalReport, coverage, eval_report, kabsch_align, matching,
                      pairwise_rmsd, rmsd)
from .nn import AdamState, Mlp, adam_step, grad_check, mlp_backward, mlp_forward, mlp_init
from .sampler import SamplerConfig, deterministic_reverse, langevin_sample, langevin_sample_batch
from .schedule import NoiseSchedule, make_schedule, step_size
from .score import (ScoreModel, load_checkpoint, make_score_model, save_checkpoint, score)
from .synth import (AnalyticScore, ConformerSet, GaussianMixture, MoleculeTemplate,
                    TorsionMixture, build_coordinates, ensemble_property_mae, gen_dataset,
                    gmm_score, sample_torsions, toy_property)
from .train import TrainConfig, TrainLog, dsm_loss, perturb, perturb_ip, train

__version__ = "0.1.0"
