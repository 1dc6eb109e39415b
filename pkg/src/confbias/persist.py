"""File formats: atomic writes, JSON-lines datasets, CSV reports, digests."""
from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DomainError, PersistenceError

DATASET_SCHEMA = 1


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_digest(path):
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except FileNotFoundError:
        raise DomainError(f"input file not found: {path}") from None
    return h.hexdigest()


def text_digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def dumps(obj):
    # repr-based float formatting round-trips float64 exactly
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def format_csv(header, rows, manifest_digest=None):
    buf = io.StringIO()
    if manifest_digest is not None:
        buf.write(f"# manifest: {manifest_digest}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def read_csv(path):
    """Read a report CSV, skipping ``#`` comment lines. Returns (header, rows of str)."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise DomainError(f"input file not found: {path}") from None
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise PersistenceError(f"{path}: no CSV header")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


# -- datasets ---------------------------------------------------------------

def conformer_set_record(cs):
    from .synth import template_to_dict

    return {
        "schema_version": DATASET_SCHEMA,
        "molecule_id": cs.molecule_id,
        "template": None if cs.template is None else template_to_dict(cs.template),
        "provenance": cs.provenance,
        "conformers": np.asarray(cs.conformers).tolist(),
    }


def format_dataset(sets):
    return "".join(dumps(conformer_set_record(cs)) + "\n" for cs in sets)


def write_dataset(path, sets):
    atomic_write_text(path, format_dataset(sets))


def read_dataset(path):
    from .synth import ConformerSet, template_from_dict

    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DomainError(f"input file not found: {path}") from None
    sets = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PersistenceError(f"{path}:{lineno}: malformed record ({exc.msg})") from None
        if rec.get("schema_version") != DATASET_SCHEMA:
            raise PersistenceError(f"{path}:{lineno}: unsupported schema_version "
                                   f"{rec.get('schema_version')!r}")
        conf = np.asarray(rec["conformers"], dtype=np.float64)
        if conf.ndim != 3 or conf.shape[2] != 3:
            raise PersistenceError(f"{path}:{lineno}: conformers must be k x n x 3")
        tmpl = rec.get("template")
        sets.append(ConformerSet(
            molecule_id=rec["molecule_id"],
            template=None if tmpl is None else template_from_dict(tmpl),
            conformers=conf,
            provenance=rec.get("provenance") or {},
        ))
    if not sets:
        raise PersistenceError(f"{path}: dataset is empty")
    return sets
