from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate
from scipy.stats import norm

from llcrobust.covest import (
    DegenerateDataError,
    c_step,
    estimate_covariance,
    gamma_objective,
    gde,
    mahalanobis_sq,
    mcd,
    mcd_consistency_factor,
    mcd_h,
    mcd_max_breakdown,
    scm,
)
from llcrobust.covest.generics import is_valid_scatter, log_det, mean_and_scatter
from llcrobust.interface.llc_structs import GdeConfig, McdConfig
from llcrobust.llc_enums import LLC_BACKEND

OUTLIER_LINE = np.array([0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 1000.0])


def _contaminated(seed: int, n: int = 100, d: int = 3, frac: float = 0.1) -> np.ndarray:
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n, d))
    m = int(frac * n)
    data[:m] = rng.normal(10.0, 1.0, size=(m, d))
    return data


# SCM

def test_scm_of_identical_rows_is_zero():
    est = scm(np.tile([1.0, -2.0, 3.0], (5, 1)))
    assert_array_equal(est.cov, np.zeros((3, 3)))


def test_scm_two_points():
    est = scm(np.array([[0.0, 0.0], [2.0, 2.0]]))
    assert_allclose(est.mean, [1.0, 1.0])
    assert_allclose(est.cov, [[2.0, 2.0], [2.0, 2.0]])
    assert est.method is LLC_BACKEND.SCM


def test_scm_large_sample_is_consistent():
    data = np.random.default_rng(0).standard_normal((100_000, 3))
    assert np.linalg.norm(scm(data).cov - np.eye(3)) < 0.05


def test_scm_is_affine_equivariant():
    rng = np.random.default_rng(1)
    data = rng.standard_normal((40, 3))
    A = rng.standard_normal((3, 3))
    b = rng.standard_normal(3)
    assert_allclose(scm(data @ A.T + b).cov, A @ scm(data).cov @ A.T, rtol=1e-10, atol=1e-12)


def test_mahalanobis_sq_identity():
    data = np.array([[3.0, 4.0], [0.0, 0.0]])
    assert_allclose(mahalanobis_sq(data, np.zeros(2), np.eye(2)), [25.0, 0.0])


def test_mahalanobis_sq_rejects_singular_scatter():
    with pytest.raises(DegenerateDataError):
        mahalanobis_sq(np.zeros((2, 2)), np.zeros(2), np.zeros((2, 2)))


# MCD

def test_mcd_h_rule():
    assert mcd_h(100, 5, 0.5) == 53
    assert mcd_h(100, 5, 0.75) == 75
    assert mcd_h(37, 2, 1.0) == 37


def test_mcd_max_breakdown():
    assert mcd_max_breakdown(100, 5) == pytest.approx(0.47)


def test_consistency_factor_is_one_for_full_set():
    assert mcd_consistency_factor(50, 50, 3) == 1.0
    assert mcd_consistency_factor(26, 50, 3) > 1.0


def test_mcd_full_subset_equals_scm():
    data = np.random.default_rng(2).standard_normal((30, 3))
    est = mcd(data, McdConfig(alpha=1.0))
    assert_array_equal(est.cov, scm(data).cov)
    assert_array_equal(est.mean, scm(data).mean)


def test_mcd_excludes_remote_point():
    est = mcd(OUTLIER_LINE)
    assert est.meta["exhaustive"]
    assert est.meta["h"] == 5
    assert 7 not in est.meta["subset"]
    assert abs(est.mean[0]) < 1.0


def test_c_step_drops_remote_point():
    subset = np.array([3, 4, 5, 6, 7])
    for _ in range(8):
        subset = c_step(OUTLIER_LINE, subset)
        if 7 not in subset:
            break
    assert 7 not in subset
    assert subset.size == 5


def test_c_step_fixed_point_at_optimum():
    data = np.random.default_rng(3).standard_normal((12, 2))
    est = mcd(data)
    best = np.array(est.meta["subset"])
    stepped = c_step(data, best)
    assert log_det(mean_and_scatter(data[stepped])[1]) == pytest.approx(est.meta["log_det"], abs=1e-9)


def test_c_step_determinants_do_not_increase():
    rng = np.random.default_rng(4)
    data = rng.standard_normal((40, 3))
    data[:6] += 8.0
    subset = np.sort(rng.choice(40, size=22, replace=False))
    values = [log_det(mean_and_scatter(data[subset])[1])]
    for _ in range(10):
        subset = c_step(data, subset)
        values.append(log_det(mean_and_scatter(data[subset])[1]))
    assert all(b <= a + 1e-10 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_fast_mcd_matches_exhaustive_optimum(seed):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((14, 2))
    data[:3] = rng.normal(8.0, 0.5, size=(3, 2))
    exact = mcd(data)
    fast = mcd(data, McdConfig(exhaustive_limit=0, n_starts=500, keep_best=200), np.random.default_rng(seed))
    assert exact.meta["exhaustive"] and not fast.meta["exhaustive"]
    assert np.exp(fast.meta["log_det"]) <= (1.0 + 1e-9) * np.exp(exact.meta["log_det"])


def test_mcd_reweighting_uses_more_points():
    data = _contaminated(8, n=120, d=2, frac=0.1)
    est = mcd(data, McdConfig(reweight=True), np.random.default_rng(0))
    assert len(est.meta["reweighted"]) > est.meta["h"]
    assert not set(range(12)) & set(est.meta["reweighted"])


def test_mcd_needs_more_points_than_dimensions():
    with pytest.raises(DegenerateDataError):
        mcd(np.random.default_rng(9).standard_normal((3, 3)))


# GDE

def test_gde_small_gamma_recovers_likelihood_estimate():
    data = np.random.default_rng(10).multivariate_normal([1.0, -1.0], [[1.0, 0.3], [0.3, 2.0]], size=5000)
    est = gde(data, GdeConfig(gamma=1e-6))
    ref = scm(data)
    assert est.meta["converged"]
    assert np.max(np.abs(est.mean - ref.mean)) < 1e-3
    assert np.max(np.abs(est.cov - ref.cov)) < 1e-3


def test_gde_stops_on_largest_entry_change():
    data = np.random.default_rng(12).standard_normal((200, 3))
    # any first step moves some entry by less than 1e6
    est = gde(data, GdeConfig(gamma=0.3, tol=1e6))
    assert est.meta["converged"]
    assert est.meta["n_iter"] == 1

    est = gde(data, GdeConfig(gamma=0.3, tol=0.0, max_iter=3))
    assert not est.meta["converged"]
    assert est.meta["n_iter"] == 3


def test_gde_resists_remote_cluster_in_one_dimension():
    rng = np.random.default_rng(11)
    data = np.concatenate([rng.standard_normal(95), np.full(5, 50.0)])
    est = gde(data, GdeConfig(gamma=0.3))
    assert abs(est.mean[0]) < 0.5
    assert scm(data).mean[0] > 2.0
    assert est.meta["weights"][-5:].max() < 1e-6


@pytest.mark.parametrize("seed", range(50))
def test_gde_objective_is_non_increasing(seed):
    est = gde(_contaminated(100 + seed), GdeConfig(gamma=0.3), np.random.default_rng(seed))
    trace = est.meta["objective_trace"]
    assert len(trace) >= 2
    assert all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(trace, trace[1:]))


def test_gamma_objective_scalar_case():
    value = gamma_objective(np.array([0.0]), [0.0], [[1.0]], gamma=1.0)
    expected = -np.log(norm.pdf(0.0)) + 0.5 * np.log(2 ** -0.5 * (2 * np.pi) ** -0.5)
    assert value == pytest.approx(expected, abs=1e-12)


def test_gamma_objective_matches_quadrature():
    gamma, mu, var = 0.3, 0.3, 1.7
    data = np.random.default_rng(12).normal(0.0, 1.5, size=40)
    sd = np.sqrt(var)
    integral, _ = integrate.quad(lambda x: norm.pdf(x, mu, sd) ** (1 + gamma), -np.inf, np.inf)
    expected = (
        -np.log(np.mean(norm.pdf(data, mu, sd) ** gamma)) / gamma
        + np.log(integral) / (1 + gamma)
    )
    assert gamma_objective(data, [mu], [[var]], gamma) == pytest.approx(expected, abs=1e-6)


def test_points_at_the_mode_lower_the_objective():
    data = np.random.default_rng(13).standard_normal((30, 2))
    mean, cov = np.zeros(2), np.eye(2)
    padded = np.vstack([data, np.zeros((5, 2))])
    assert gamma_objective(padded, mean, cov, 0.3) < gamma_objective(data, mean, cov, 0.3)


# shared properties

@pytest.mark.parametrize("backend", list(LLC_BACKEND))
def test_back_ends_return_valid_scatter(backend):
    est = estimate_covariance(_contaminated(14, n=80, d=4), backend, rng=np.random.default_rng(0))
    assert est.method is backend
    assert is_valid_scatter(est.cov)


def test_remote_cluster_moves_only_the_sample_covariance():
    rng = np.random.default_rng(15)
    clean = 0.5 * rng.standard_normal((200, 5))
    dirty = clean.copy()
    dirty[:40] = 10.0 / np.sqrt(5.0) + 0.5 * rng.standard_normal((40, 5))

    def shift(backend):
        a = estimate_covariance(clean, backend, rng=np.random.default_rng(1))
        b = estimate_covariance(dirty, backend, rng=np.random.default_rng(1))
        return np.linalg.norm(a.cov - b.cov)

    assert shift(LLC_BACKEND.SCM) > 5.0
    assert shift(LLC_BACKEND.MCD) < 0.5
    assert shift(LLC_BACKEND.GDE) < 0.5
