"""
The full pipeline through the command-line runner
=================================================

Each stage is a ``confbias`` subcommand that writes into its own directory,
together with a ``manifest.json`` that records the resolved configuration and
the digests of its inputs. Running this script twice gives byte-identical files
apart from ``timing.json``.
"""

import sys
from pathlib import Path

from confbias.cli import run

out = Path(sys.argv[1] if len(sys.argv) > 1 else "pipeline_out")


def step(*argv):
    argv = [str(a) for a in argv]
    print("confbias", " ".join(argv))
    code = run(argv)
    if code:
        sys.exit(code)


step("gen-data", "--molecules", 100, "--conformers", 5, "--seed", 1, "-o", out / "train")
step("gen-data", "--molecules", 5, "--conformers", 10, "--seed", 2, "--first-index", 1000,
     "-o", out / "test")
step("train", "--data", out / "train/dataset.jsonl", "--steps", 2000, "--lambda", 0.1,
     "-o", out / "model")
step("sample", "--checkpoint", out / "model/checkpoint.json", "--data", out / "test/dataset.jsonl",
     "--a", 4e-5, "-o", out / "generated")
step("measure-bias", "--checkpoint", out / "model/checkpoint.json",
     "--data", out / "test/dataset.jsonl", "--samples-per-level", 200, "-o", out / "bias")
step("evaluate", "--ref", out / "test/dataset.jsonl", "--gen", out / "generated/generated.jsonl",
     "-o", out / "eval")
step("props", "--ref", out / "test/dataset.jsonl", "--gen", out / "generated/generated.jsonl",
     "--property", "torsion_energy", "-o", out / "props")
step("plot", "--series", f"IP={out / 'bias/bias.csv'}", "-o", out / "plot")

print((out / "eval/eval.csv").read_text())
