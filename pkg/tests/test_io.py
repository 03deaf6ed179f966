import json

import numpy as np
import pytest

from conftest import random_semisym
from jisstpca.io import MAGIC, load_data, read_csv_slices, read_jst, write_jst, write_matrix_csv


def test_jst_round_trip(tmp_path, rng):
    t = random_semisym(rng, 5, 7)
    path = tmp_path / "t.jst"
    write_jst(path, t)
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    back = read_jst(path)
    np.testing.assert_array_equal(back.slices, t.slices)
    assert load_data(path) == t


def test_jst_rejects_bad_files(tmp_path, rng):
    bad = tmp_path / "bad.jst"
    bad.write_bytes(b"NOTATENS" + b"\0" * 20)
    with pytest.raises(ValueError):
        read_jst(bad)
    path = tmp_path / "t.jst"
    write_jst(path, random_semisym(rng, 3, 2))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_jst(path)


def test_csv_manifest(tmp_path, rng):
    t = random_semisym(rng, 4, 3)
    names = []
    for k in range(3):
        names.append(f"s{k}.csv")
        np.savetxt(tmp_path / names[-1], t.slices[k], delimiter=",", fmt="%.17g")
    (tmp_path / "m.json").write_text(json.dumps({"dims": [4, 4, 3], "slices": names}))
    np.testing.assert_array_equal(read_csv_slices(tmp_path / "m.json").slices, t.slices)
    (tmp_path / "m2.json").write_text(json.dumps({"dims": [4, 4, 4], "slices": names}))
    with pytest.raises(ValueError):
        read_csv_slices(tmp_path / "m2.json")


def test_matrix_csv(tmp_path, rng):
    M = rng.standard_normal((3, 5))
    write_matrix_csv(tmp_path / "y.csv", M)
    np.testing.assert_array_equal(load_data(tmp_path / "y.csv"), M)
    with pytest.raises(ValueError):
        load_data(tmp_path / "y.txt")
