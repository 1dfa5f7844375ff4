import json

import numpy as np
import pytest

from conftest import rho_p
from xkerr.synthdata import GroundTruth, project_counts
from xkerr.tomo_io import (
    InputFormatError,
    density_report,
    matrix_from_json,
    matrix_json,
    read_coincidences,
    write_coincidence_csv,
    write_coincidence_json,
)


@pytest.fixture
def cs():
    return project_counts(GroundTruth(rho_p(), counts_scale=4000, noise="poisson"), seed=3)


def test_csv_round_trip(tmp_path, cs):
    path = tmp_path / "c.csv"
    write_coincidence_csv(path, cs)
    doc = read_coincidences(path)
    assert np.array_equal(doc["n"], cs.n[:4])
    for nu in range(5, 17):
        assert np.array_equal(doc["fringes"][nu][1], cs.meta["fringes"][nu][1])


def test_json_round_trip(tmp_path, cs):
    path = tmp_path / "c.json"
    write_coincidence_json(path, cs)
    doc = read_coincidences(path)
    assert np.array_equal(doc["n"], cs.n)
    assert np.allclose(doc["interference"], cs.interference)
    assert set(doc["fringes"]) == set(range(5, 17))


def _csv(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    return p


@pytest.mark.parametrize(
    "body, where",
    [
        ("nu,angle,count\n", ":1:"),
        ("nu,phase_or_angle,count\n1,,10\n2,,x\n", ":3:"),
        ("nu,phase_or_angle,count\n1,,10\n17,0.1,3\n", ":3:"),
        ("nu,phase_or_angle,count\n1,0.3,10\n", ":2:"),
        ("nu,phase_or_angle,count\n5,,10\n", ":2:"),
        ("nu,phase_or_angle,count\n1,,10,4\n", ":2:"),
    ],
)
def test_csv_errors_carry_line_numbers(tmp_path, body, where):
    with pytest.raises(InputFormatError, match=where):
        read_coincidences(_csv(tmp_path, body))


def test_csv_missing_rows(tmp_path):
    with pytest.raises(InputFormatError, match="missing rows"):
        read_coincidences(_csv(tmp_path, "nu,phase_or_angle,count\n1,,10\n"))


def test_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n": [1, 2,\n ]}')
    with pytest.raises(InputFormatError, match=r":2:"):
        read_coincidences(p)
    p.write_text(json.dumps({"n": [1, 2, 3]}))
    with pytest.raises(InputFormatError, match="4 or 16"):
        read_coincidences(p)
    p.write_text(json.dumps({"n": [1, 2, 3, 4]}))
    with pytest.raises(InputFormatError, match="fringes"):
        read_coincidences(p)
    p.write_text(json.dumps({"n": [1, 2, 3, 4], "interference": [0.1] * 5}))
    with pytest.raises(InputFormatError, match="12"):
        read_coincidences(p)


def test_missing_file(tmp_path):
    with pytest.raises(InputFormatError, match="no such file"):
        read_coincidences(tmp_path / "nope.csv")


def test_matrix_json_round_trip():
    r = rho_p()
    assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_json(r)))), r)


def test_density_report_layout():
    doc = density_report(np.eye(4) / 4, {"concurrence": 0.0}, provenance={"seed": 1})
    assert doc["basis"] == "|0s0c>,|0s1c>,|1s0c>,|1s1c>"
    assert doc["rho"]["re"][0][0] == 0.25
    assert set(doc) >= {"rho", "metrics", "provenance"}
