import json

import numpy as np
import pytest

from confbias.errors import DomainError, PersistenceError
from confbias.persist import (atomic_write_text, dumps, file_digest, format_csv, read_csv,
                              read_dataset, write_dataset)
from confbias.synth import ConformerSet, MoleculeTemplate, gen_dataset


def test_csv_round_trip_with_manifest_line(tmp_path):
    text = format_csv(("a", "b"), [(1, 0.1), ("x", 1 / 3)], "abc123")
    assert text.splitlines()[0] == "# manifest: abc123"
    path = tmp_path / "r.csv"
    atomic_write_text(path, text)
    header, rows = read_csv(path)
    assert header == ["a", "b"]
    assert float(rows[1][1]) == 1 / 3  # shortest repr round-trips exactly


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": [0.5, 2]}) == '{"a":[0.5,2],"b":1}'
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write_text(tmp_path / "sub" / "f.txt", "hello\n")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["f.txt"]


def test_digest(tmp_path):
    (tmp_path / "a").write_text("x")
    assert file_digest(tmp_path / "a") == \
        "2d711642b726b04401627ca9fbac32f5c8530fb1903cc4db02258717921a4881"
    with pytest.raises(DomainError):
        file_digest(tmp_path / "missing")


def test_dataset_round_trip(tmp_path):
    sets = gen_dataset(MoleculeTemplate(5), 3, 2, seed=4)
    sets.append(ConformerSet("free", None, np.zeros((1, 5, 3)), {"note": "no template"}))
    path = tmp_path / "d.jsonl"
    write_dataset(path, sets)
    back = read_dataset(path)
    assert [cs.molecule_id for cs in back] == [cs.molecule_id for cs in sets]
    for a, b in zip(sets, back):
        assert np.array_equal(a.conformers, b.conformers)
        assert a.template == b.template and a.provenance == b.provenance


@pytest.mark.parametrize("line", ['{"schema_version": 9}', "{not json", '{"schema_version": 1, '
                                  '"molecule_id": "m", "conformers": [[1, 2, 3]]}'])
def test_bad_dataset_records(tmp_path, line):
    path = tmp_path / "d.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(PersistenceError):
        read_dataset(path)


def test_empty_dataset(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text("\n")
    with pytest.raises(PersistenceError):
        read_dataset(path)
