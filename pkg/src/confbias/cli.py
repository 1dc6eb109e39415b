"""Command-line runner: one subcommand per pipeline stage.

Every run writes its outputs plus ``manifest.json`` (resolved configuration and
input digests) under ``--out``. Wall-clock timings go to ``timing.json`` so that
all other files are byte-identical across reruns with the same configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bias import bias_histogram, estimate_bias
from .errors import ConfbiasError, ConfigurationError
from .metrics import eval_report, pairwise_rmsd
from .persist import (atomic_write_text, dumps, file_digest, format_csv, read_csv,
                      read_dataset, text_digest, write_dataset)
from .plot import emit_plot
from .sampler import SamplerConfig, langevin_sample_batch
from .schedule import make_schedule
from .score import load_checkpoint, make_score_model, read_checkpoint, save_checkpoint
from .synth import (PROPERTIES, STATISTICS, ConformerSet, MoleculeTemplate,
                    ensemble_property_errors, gen_dataset)
from .train import LAMBDA_GRID, WEIGHTINGS, TrainConfig, train


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# name -> (type, default, help); a default of ``None`` means required unless noted
COMMON = {
    "seed": (int, 0, "global RNG seed"),
}

SCHEDULE = {
    "sigma_max": (float, 0.79, "largest noise level"),
    "sigma_min": (float, 0.02, "smallest noise level"),
    "levels": (int, 6, "number of noise levels L"),
}

SAMPLING = {
    "a": (float, 1e-5, "smallest Langevin step size"),
    "steps_per_level": (int, 50, "Langevin steps per noise level T"),
    "init_scale": (float, None, "prior std (default: sigma_1)"),
}

COMMANDS = {
    "gen-data": {
        "atoms": (int, 6, "atoms per chain"),
        "molecules": (int, 50, "number of molecules (conformer sets)"),
        "conformers": (int, 5, "conformers per molecule"),
        "bond_length": (float, 1.5, "bond length"),
        "bond_angle": (float, 112.0, "bond angle in degrees"),
        "first_index": (int, 0, "index of the first molecule (separates splits)"),
    },
    "train": {
        "data": (str, None, "training dataset (.jsonl)"),
        **SCHEDULE,
        "lambda": (float, 0.0, "input perturbation weight"),
        "lambda_grid": (_bool, False, "train one model per lambda in the grid"),
        "grid": (str, ",".join(str(v) for v in LAMBDA_GRID), "lambda grid values"),
        "select_by": (str, "mat", "grid selection metric: mat, cov or bias"),
        "val_data": (str, "", "validation dataset for grid selection"),
        "steps": (int, 20000, "optimizer steps"),
        "lr": (float, 1e-3, "Adam learning rate"),
        "batch_size": (int, 64, "batch size"),
        "loss_weighting": (str, "sigma-squared", "sigma-squared or unweighted"),
        "hidden": (_int_list, "128,128,128", "hidden layer widths"),
        "center_input": (_bool, True, "centre inputs and project scores to zero mean"),
        "log_every": (int, 500, "loss logging interval"),
        "log_timing": (_bool, False, "fill the seconds column of train_log.csv"),
        **SAMPLING,
        "delta": (float, 0.5, "COV threshold used for grid selection"),
        "bias_samples": (int, 500, "probes per level used for grid selection"),
    },
    "sample": {
        "checkpoint": (str, None, "model checkpoint"),
        "data": (str, None, "reference dataset; generation mirrors its molecules"),
        "factor": (int, 2, "generated conformers per reference conformer"),
        **SAMPLING,
    },
    "measure-bias": {
        "checkpoint": (str, None, "model checkpoint"),
        "data": (str, None, "dataset of clean conformers"),
        "samples_per_level": (int, 1000, "probes per noise level"),
        "det_steps": (int, 1, "drift steps per level in the reverse"),
        "a": (float, None, "smallest step size (default: sigma_L^2)"),
        "mode": (str, "stratified", "stratified or uniform level probing"),
        "com_free_noise": (_bool, False, "remove the per-axis mean of the probe noise"),
        "bins": (int, 40, "histogram bins"),
    },
    "evaluate": {
        "ref": (str, None, "reference dataset"),
        "gen": (str, None, "generated dataset"),
        "delta": (float, 0.5, "COV threshold"),
    },
    "props": {
        "ref": (str, None, "reference dataset"),
        "gen": (str, None, "generated dataset"),
        "property": (str, "rg", "one of " + ", ".join(PROPERTIES)),
        "stats": (_str_list, "mean,min,max", "statistics to compare"),
    },
    "plot": {
        "series": (str, None, "label=path.csv; repeatable"),
        "x_column": (str, "sigma", "CSV column for x"),
        "y_column": (str, "mean_abs_bias", "CSV column for y"),
        "title": (str, "Exposure bias per noise level", "plot title"),
        "xlabel": (str, "sigma", "x-axis label"),
        "ylabel": (str, "mean |e_t|", "y-axis label"),
        "name": (str, "plot.svg", "output file name"),
    },
}

REPEATABLE = {("plot", "series")}
# keys that only locate files and so do not belong in the manifest
LOCATION_KEYS = {"out", "config"}


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    parser = argparse.ArgumentParser(prog="confbias", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, spec in COMMANDS.items():
        p = sub.add_parser(cmd)
        p.add_argument("-o", "--out", default=argparse.SUPPRESS, help="output directory")
        p.add_argument("--config", default=argparse.SUPPRESS,
                       help="flat key = value configuration file")
        for name, (typ, _, help_) in {**COMMON, **spec}.items():
            if (cmd, name) in REPEATABLE:
                p.add_argument(_flag(name), dest=name, action="append",
                               default=argparse.SUPPRESS, help=help_)
            else:
                p.add_argument(_flag(name), dest=name, type=typ, default=argparse.SUPPRESS,
                               help=help_)
    return parser


def read_config_file(path, cmd, parser):
    spec = {**COMMON, **COMMANDS[cmd], "out": (str, None, "")}
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in spec:
            parser.error(f"{path}:{lineno}: unknown key {key!r}")
        typ = spec[key][0]
        try:
            if (cmd, key) in REPEATABLE:
                values[key] = _str_list(val)
            else:
                values[key] = typ(val)
        except ValueError as exc:
            parser.error(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def resolve(argv):
    """Parse ``argv`` into ``(command, config dict)``: flags > config file > defaults."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    cmd = ns.pop("command")
    cfg = {"out": "out"}
    for name, (typ, default, _) in {**COMMON, **COMMANDS[cmd]}.items():
        cfg[name] = typ(default) if isinstance(default, str) and typ is not str else default
    if "config" in ns:
        cfg.update(read_config_file(ns["config"], cmd, parser))
        cfg["config"] = ns["config"]
    cfg.update({k: v for k, v in ns.items() if k != "config"})
    missing = [k for k, (_, d, _) in COMMANDS[cmd].items() if d is None and cfg.get(k) is None
               and k not in ("init_scale", "a")]
    if missing:
        parser.error(f"{cmd}: missing required option(s): "
                     + ", ".join(_flag(k) for k in missing))
    return cmd, cfg


class Run:
    """Collects inputs and writes manifest-stamped outputs for one subcommand."""

    def __init__(self, cmd, cfg):
        self.cmd = cmd
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.inputs = {}
        self.start = time.perf_counter()
        self._digest = None

    def input(self, role, path):
        self.inputs[role] = {"path": str(path), "sha256": file_digest(path)}
        return path

    def manifest(self):
        config = {k: v for k, v in sorted(self.cfg.items()) if k not in LOCATION_KEYS}
        return {"tool": "confbias", "version": __version__, "subcommand": self.cmd,
                "seed": self.cfg["seed"], "config": config, "inputs": self.inputs}

    @property
    def digest(self):
        if self._digest is None:
            self._digest = text_digest(dumps(self.manifest()))
        return self._digest

    def write_csv(self, name, header, rows):
        atomic_write_text(self.out / name, format_csv(header, rows, self.digest))

    def finish(self):
        atomic_write_text(self.out / "manifest.json",
                          json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")
        atomic_write_text(self.out / "timing.json", json.dumps(
            {"wall_seconds": time.perf_counter() - self.start}) + "\n")


def _schedule(cfg):
    return make_schedule(cfg["sigma_max"], cfg["sigma_min"], cfg["levels"])


def _sampler_cfg(cfg):
    return SamplerConfig(a=cfg["a"], T=cfg["steps_per_level"], seed=cfg["seed"],
                         init_scale=cfg["init_scale"])


def cmd_gen_data(run, cfg):
    tmpl = MoleculeTemplate(cfg["atoms"], cfg["bond_length"], cfg["bond_angle"])
    sets = gen_dataset(tmpl, cfg["molecules"], cfg["conformers"], cfg["seed"],
                       start=cfg["first_index"])
    write_dataset(run.out / "dataset.jsonl", sets)


def _generate(model, ref_sets, factor, scfg):
    counts = [factor * len(cs) for cs in ref_sets]
    gen = langevin_sample_batch(model, scfg, sum(counts))
    out, lo = [], 0
    for cs, c in zip(ref_sets, counts):
        out.append(ConformerSet(cs.molecule_id, cs.template, gen[lo:lo + c],
                                {"generated_from": cs.molecule_id, "seed": scfg.seed,
                                 "first_chain": lo}))
        lo += c
    return out


def _paired(ref_sets, gen_sets):
    gen_by_id = {cs.molecule_id: cs for cs in gen_sets}
    pairs = []
    for cs in ref_sets:
        if cs.molecule_id not in gen_by_id:
            raise ConfigurationError(f"molecule {cs.molecule_id!r} missing from generated set")
        pairs.append((gen_by_id[cs.molecule_id], cs))
    return pairs


def cmd_train(run, cfg):
    if cfg["loss_weighting"] not in WEIGHTINGS:
        raise ConfigurationError(f"--loss-weighting must be one of {WEIGHTINGS}")
    data = read_dataset(run.input("data", cfg["data"]))
    n_atoms = data[0].n_atoms
    schedule = _schedule(cfg)

    def fit(lam, out_dir):
        model = make_score_model(n_atoms, schedule, hidden=tuple(cfg["hidden"]),
                                 seed=cfg["seed"], center_input=cfg["center_input"])
        tcfg = TrainConfig(lr=cfg["lr"], batch_size=cfg["batch_size"], steps=cfg["steps"],
                           lambda_ip=lam, seed=cfg["seed"],
                           loss_weighting=cfg["loss_weighting"], log_every=cfg["log_every"])
        model, log = train(data, model, tcfg)
        final = None if not log.records else log.final_loss
        save_checkpoint(model, out_dir / "checkpoint.json", tcfg.to_dict(), final)
        if cfg["log_timing"]:
            rows = [(s, l, round(sec, 3)) for s, l, sec in log.records]
        else:
            rows = [(s, l, "") for s, l, _ in log.records]
        atomic_write_text(out_dir / "train_log.csv",
                          format_csv(("step", "loss", "seconds"), rows, run.digest))
        return model

    if not cfg["lambda_grid"]:
        fit(cfg["lambda"], run.out)
        return

    if cfg["select_by"] not in ("mat", "cov", "bias"):
        raise ConfigurationError("--select-by must be mat, cov or bias")
    if not cfg["val_data"]:
        raise ConfigurationError("--lambda-grid needs --val-data for selection")
    val = read_dataset(run.input("val_data", cfg["val_data"]))
    rows = []
    for lam in (float(v) for v in _str_list(cfg["grid"])):
        sub = run.out / f"lambda_{lam:g}"
        model = fit(lam, sub)
        gens = _generate(model, val, 2, _sampler_cfg(cfg))
        rep = eval_report([pairwise_rmsd(g.conformers, r.conformers)
                           for g, r in _paired(val, gens)], cfg["delta"])
        bias = estimate_bias(model, val, cfg["bias_samples"], seed=cfg["seed"],
                             a=schedule.sigma_min ** 2)
        rows.append((lam, rep.cov_mean, rep.mat_mean, bias.global_mean))
    key = {"cov": lambda r: -r[1], "mat": lambda r: r[2], "bias": lambda r: r[3]}
    best = min(rows, key=key[cfg["select_by"]])[0]
    run.write_csv("grid.csv", ("lambda", "cov_mean", "mat_mean", "global_bias"), rows)
    best_dir = run.out / f"lambda_{best:g}"
    for name in ("checkpoint.json", "train_log.csv"):
        atomic_write_text(run.out / name, (best_dir / name).read_text(encoding="utf-8"))


def cmd_sample(run, cfg):
    model = load_checkpoint(run.input("checkpoint", cfg["checkpoint"]))
    refs = read_dataset(run.input("data", cfg["data"]))
    write_dataset(run.out / "generated.jsonl",
                  _generate(model, refs, cfg["factor"], _sampler_cfg(cfg)))


def cmd_measure_bias(run, cfg):
    model = load_checkpoint(run.input("checkpoint", cfg["checkpoint"]))
    data = read_dataset(run.input("data", cfg["data"]))
    a = cfg["a"] if cfg["a"] is not None else model.schedule.sigma_min ** 2
    report = estimate_bias(model, data, cfg["samples_per_level"], cfg["det_steps"],
                           cfg["seed"], a, cfg["mode"], keep_raw=True,
                           com_free_noise=cfg["com_free_noise"])
    run.write_csv("bias.csv", ("t", "sigma", "mean_abs_bias", "n"), report.rows())
    hist = bias_histogram(report.pooled_signed_errors(), cfg["bins"])
    run.write_csv("histogram.csv", ("bin_left", "bin_right", "count"), hist.rows())
    run.write_csv("histogram_summary.csv", ("mean", "std", "skewness", "degenerate"),
                  [(hist.mean, hist.std, hist.skewness, int(hist.degenerate))])


def cmd_evaluate(run, cfg):
    refs = read_dataset(run.input("ref", cfg["ref"]))
    gens = read_dataset(run.input("gen", cfg["gen"]))
    pairs = _paired(refs, gens)
    rep = eval_report([pairwise_rmsd(g.conformers, r.conformers) for g, r in pairs],
                      cfg["delta"], [r.molecule_id for _, r in pairs])
    run.write_csv("eval.csv", ("molecule_id", "cov", "mat"), rep.rows())


def cmd_props(run, cfg):
    refs = read_dataset(run.input("ref", cfg["ref"]))
    gens = read_dataset(run.input("gen", cfg["gen"]))
    stats = tuple(cfg["stats"])
    if cfg["property"] not in PROPERTIES or not set(stats) <= set(STATISTICS):
        raise ConfigurationError(f"--property must be in {PROPERTIES}, --stats in {STATISTICS}")
    rows, errs = [], []
    for g, r in _paired(refs, gens):
        if r.template is None:
            raise ConfigurationError(f"molecule {r.molecule_id!r} has no template")
        e = ensemble_property_errors(g.conformers, r.conformers, r.template,
                                     cfg["property"], stats)
        errs.append(e)
        rows.append((r.molecule_id, *(e[s] for s in stats)))
    rows.append(("mae", *(float(np.mean([e[s] for e in errs])) for s in stats)))
    run.write_csv("props.csv", ("molecule_id", *stats), rows)


def cmd_plot(run, cfg):
    series = []
    for item in cfg["series"]:
        if "=" not in item:
            raise ConfigurationError(f"--series expects label=path, got {item!r}")
        label, path = item.split("=", 1)
        header, rows = read_csv(run.input(f"series:{label}", path))
        try:
            ix, iy = header.index(cfg["x_column"]), header.index(cfg["y_column"])
        except ValueError:
            raise ConfigurationError(f"{path}: needs columns {cfg['x_column']!r} and "
                                     f"{cfg['y_column']!r}") from None
        series.append((label, [float(r[ix]) for r in rows], [float(r[iy]) for r in rows]))
    emit_plot(series, run.out / cfg["name"], cfg["title"], cfg["xlabel"], cfg["ylabel"])


HANDLERS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sample": cmd_sample,
    "measure-bias": cmd_measure_bias,
    "evaluate": cmd_evaluate,
    "props": cmd_props,
    "plot": cmd_plot,
}


def run(argv):
    """Execute one subcommand. Returns 0 on success, 1 on domain errors, 2 on usage errors."""
    try:
        cmd, cfg = resolve(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        r = Run(cmd, cfg)
        HANDLERS[cmd](r, cfg)
        r.finish()
    except ConfbiasError as exc:
        print(f"confbias {cmd}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
