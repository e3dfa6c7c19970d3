import math

import numpy as np
import pytest

from quasicondensate import SamplerConvergenceError, SpatialGrid, sample_sine_gordon
from quasicondensate.sinegordon import ChainCouplings, action, integrated_autocorr_time, run_chains

M_RB = 1.443e-25


def _transfer_matrix(c, n_sites, n_grid=720):
    """Site marginals of the open chain on the circle, by numerical quadrature.

    The phase only enters the cosine through phi mod 2 pi, so the gradient
    kernel is wrapped onto the circle (image sum).
    """
    x = (np.arange(n_grid) + 0.5) * 2 * np.pi / n_grid
    d = x[:, None] - x[None, :]
    K = sum(np.exp(-c.a * (d + 2 * np.pi * k) ** 2) for k in range(-6, 7))
    w = np.exp(c.b * np.cos(x))
    left = [w.copy()]
    for _ in range(n_sites - 1):
        v = w * (K @ left[-1])
        left.append(v / v.sum())
    right = [w.copy()]
    for _ in range(n_sites - 1):
        v = w * (K @ right[-1])
        right.append(v / v.sum())
    marg = []
    for i in range(n_sites):
        p = left[i] * right[n_sites - 1 - i] / w
        marg.append(p / p.sum())
    return x, np.array(marg)


def _mc_cos(c, n_sites, n_chains, seed, sweeps=3000):
    rng = np.random.default_rng(seed)
    phi, stats, _ = run_chains(c, n_sites, n_chains, rng, sweeps)
    site_avg = np.cos(phi).mean(axis=1)
    return site_avg.mean(), site_avg.std(ddof=1) / math.sqrt(n_chains)


@pytest.mark.parametrize("b", [0.2, 0.6, 1.5])
def test_mean_cos_matches_transfer_matrix(b):
    c = ChainCouplings(a=0.5, b=b)
    x, marg = _transfer_matrix(c, 16)
    exact = float(np.mean(marg @ np.cos(x)))
    mean, se = _mc_cos(c, 16, 2000, seed=int(b * 10))
    assert abs(mean - exact) < 4 * se + 2e-3


def test_mean_cos_monotone_in_coupling():
    vals = []
    for b in (0.1, 0.3, 0.9, 2.7):
        x, marg = _transfer_matrix(ChainCouplings(0.5, b), 16)
        vals.append(float(np.mean(marg @ np.cos(x))))
    assert np.all(np.diff(vals) > 0)
    mc = [_mc_cos(ChainCouplings(0.5, b), 16, 1000, seed=7)[0] for b in (0.1, 2.7)]
    assert mc[1] > mc[0]


def test_four_site_distribution_total_variation():
    c = ChainCouplings(a=0.4, b=0.8)
    x, marg = _transfer_matrix(c, 4, n_grid=720)
    rng = np.random.default_rng(3)
    _, _, snaps = run_chains(c, 4, 400, rng, sweeps=2400, thin=5)
    samples = np.mod(np.concatenate(snaps)[:, 1], 2 * np.pi)
    edges = np.linspace(0, 2 * np.pi, 13)
    hist = np.histogram(samples, edges)[0] / samples.size
    exact = np.add.reduceat(marg[1], np.arange(0, 720, 60))
    tv = 0.5 * np.sum(np.abs(hist - exact))
    assert tv < 0.02


def test_zero_coupling_metropolis_is_random_walk():
    T, n1d = 50e-9, 60e6
    g = SpatialGrid(60e-6, 60)
    ens = sample_sine_gordon(g, T, n1d, 0.0, M_RB, 512, seed=2, sweeps=3000, method="metropolis")
    exact = sample_sine_gordon(g, T, n1d, 0.0, M_RB, 4000, seed=2)
    lam_T = 2 * (1.054571817e-34) ** 2 * n1d / (M_RB * 1.380649e-23 * T)
    D = 4 / lam_T
    for f in (ens, exact):
        v = np.var(f.phi[:, 45] - f.phi[:, 15])
        assert v == pytest.approx(D * 30 * g.dz, rel=0.15)
    assert exact.meta["sampler"] == "sine_gordon_exact"


def test_action_is_energy_over_kT():
    c = ChainCouplings(a=2.0, b=0.5)
    phi = np.array([[0.0, 1.0, 3.0]])
    assert action(phi, c)[0] == pytest.approx(2.0 * (1 + 4) - 0.5 * (1 + math.cos(1) + math.cos(3)))


def test_convergence_error_on_small_budget():
    g = SpatialGrid(60e-6, 60)
    with pytest.raises(SamplerConvergenceError):
        sample_sine_gordon(g, 50e-9, 60e6, 5.0, M_RB, 8, seed=1, sweeps=60)


def test_grid_must_resolve_coupling_length():
    g = SpatialGrid(100e-6, 16)
    with pytest.raises(ValueError):
        sample_sine_gordon(g, 50e-9, 60e6, 50.0, M_RB, 8, seed=1)
    with pytest.raises(ValueError):
        sample_sine_gordon(g, 50e-9, 60e6, -1.0, M_RB, 8, seed=1)


def test_block_seeding_is_deterministic():
    g = SpatialGrid(40e-6, 40)
    a = sample_sine_gordon(g, 50e-9, 60e6, 5.0, M_RB, 70, seed=4, sweeps=1500)
    b = sample_sine_gordon(g, 50e-9, 60e6, 5.0, M_RB, 70, seed=4, sweeps=1500, threads=2)
    assert np.array_equal(a.phi, b.phi)


def test_autocorr_time_of_ar1():
    rng = np.random.default_rng(0)
    rho, n = 0.8, 200000
    x = np.empty(n)
    x[0] = 0
    e = rng.standard_normal(n)
    for i in range(1, n):
        x[i] = rho * x[i - 1] + e[i]
    assert integrated_autocorr_time(x) == pytest.approx((1 + rho) / (1 - rho), rel=0.1)
