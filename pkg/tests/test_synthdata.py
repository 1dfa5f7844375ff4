import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density, rho_p
from xkerr.synthdata import GroundTruth, entangled_state_from_physics, expected_counts, project_counts
from xkerr.tomography import (
    TomographyError,
    concurrence,
    fidelity,
    interference_from_counts,
    linear_inversion,
    maxlik_reconstruct,
    nonlinear_phase,
    normalize_fringes,
    projections,
    reconstruct_coincidences,
)


def test_identity_counts():
    cs = project_counts(GroundTruth(np.eye(4) / 4, counts_scale=4000))
    assert np.allclose(cs.n[:4], 1000)


def test_ground_truth_validation():
    with pytest.raises(TomographyError):
        GroundTruth(np.diag([1.2, -0.2, 0, 0]))
    with pytest.raises(ValueError):
        GroundTruth(np.eye(4) / 4, counts_scale=0)
    with pytest.raises(ValueError):
        GroundTruth(np.eye(4) / 4, noise="gaussian")


def test_physics_state_vacuum():
    gt = entangled_state_from_physics(0.45, 0.0, 0.0)
    assert np.allclose(gt.rho, np.diag([1, 0, 0, 0]))


def test_physics_state_without_phase_is_product():
    assert concurrence(entangled_state_from_physics(0.0, 0.3, 0.4).rho) == pytest.approx(0.0, abs=1e-7)


def test_phase_read_back_through_fringes():
    gt = entangled_state_from_physics(0.45, 0.0505, 0.509)
    cs = project_counts(gt)
    again = normalize_fringes(cs.meta["fringes"], cs.n[:4])
    n = reconstruct_coincidences(again)
    assert np.allclose(n, expected_counts(gt), rtol=1e-10)
    ml = maxlik_reconstruct(n)
    assert nonlinear_phase(ml.rho) == pytest.approx(0.45, abs=0.01)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_linear_round_trip(seed):
    r = random_density(np.random.default_rng(seed))
    cs = project_counts(GroundTruth(r, counts_scale=5000))
    assert np.allclose(linear_inversion(cs.n).rho, r, atol=1e-10)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_maxlik_round_trip(seed):
    r = random_density(np.random.default_rng(seed))
    cs = project_counts(GroundTruth(r, counts_scale=5000))
    assert fidelity(maxlik_reconstruct(cs.n).rho, r) >= 0.9999


def test_fringe_records_match_interference():
    gt = GroundTruth(rho_p(), counts_scale=4000)
    cs = project_counts(gt)
    again = normalize_fringes(cs.meta["fringes"], cs.n[:4])
    assert np.allclose(again.interference, cs.interference, atol=1e-12)


def test_reduced_contrast_fringes():
    gt = GroundTruth(rho_p(), counts_scale=4000, contrast_ref=0.7)
    cs = project_counts(gt)
    again = normalize_fringes(cs.meta["fringes"], cs.n[:4], contrast_ref=0.7)
    assert np.allclose(again.interference, cs.interference, atol=1e-12)


def test_poisson_deterministic():
    gt = GroundTruth(rho_p(), counts_scale=4000, noise="poisson")
    a, b = project_counts(gt, seed=9), project_counts(gt, seed=9)
    assert a.n.tobytes() == b.n.tobytes()
    for nu in range(5, 17):
        assert a.meta["fringes"][nu][1].tobytes() == b.meta["fringes"][nu][1].tobytes()
    assert not np.array_equal(a.n, project_counts(gt, seed=10).n)


def test_poisson_mean_over_seeds():
    gt = GroundTruth(rho_p(), counts_scale=400, noise="poisson")
    draws = np.array([project_counts(gt, seed=s).n for s in range(10_000)])
    mu = expected_counts(gt)
    err = np.sqrt(np.maximum(mu, 1e-12) / len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - mu) < 3 * err + 1e-9)


def test_out_of_range_interference_skips_fringes(caplog):
    # some valid states map to |I| > 1 under the geometric-mean normalization
    rng = np.random.default_rng(0)
    for _ in range(1000):
        rho = random_density(rng, rank=2)
        if np.abs(interference_from_counts(projections(rho))).max() > 1.01:
            break
    else:
        pytest.fail("no state with |I| > 1 found")
    cs = project_counts(GroundTruth(rho))
    assert "fringes" not in cs.meta and cs.interference is None
    assert "fringe records omitted" in caplog.text
    assert np.allclose(cs.n, 4000 * projections(rho))
