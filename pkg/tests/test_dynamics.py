"""Diffusion integration: drift, stationarity, coupling contraction."""

import math

import numpy as np
import pytest

from loggas.dynamics import (DouParams, PathState, couple, couple_batch, drift,
                             equilibrium_sampler, equispaced_sampler,
                             fit_decay_rate, simulate, simulate_batch, step,
                             wasserstein_decay_experiment)
from loggas.ensemble import Configuration, GasModel, sample_spectra
from loggas.errors import DomainError
from loggas.rng import RngStream


def test_params_validation():
    m = GasModel(4, 2.0)
    with pytest.raises(DomainError):
        DouParams(m, dt=0.1, t_end=1.0)  # violates dt <= 0.1/rho
    with pytest.raises(DomainError):
        DouParams(m, dt=1e-3, t_end=1.0, scheme="leapfrog")
    p = DouParams(m, dt=1e-3, t_end=2.0)
    assert p.n_steps == 2000 and p.burn_in == 2.5


def test_drift_hand_value():
    # x=(1,-1), n=2, beta=2, rho=2: first coordinate drift -2 + 2*(1/2) = -1
    m = GasModel(2, 2.0, rho=2.0)
    d = drift(m, Configuration([1.0, -1.0]))
    assert np.allclose(d, [-1.0, 1.0], atol=1e-14)


def test_zero_noise_linear_flow():
    # noise and interaction disabled: X_t = x0 * exp(-t) up to O(dt)
    m = GasModel(3, 1.0, rho=1.0)
    p = DouParams(m, dt=1e-3, t_end=1.0)
    st = PathState(0.0, Configuration([2.0, 0.5, -1.0]))
    for _ in range(p.n_steps):
        st = step(p, st, None, noise=np.zeros(3), include_interaction=False)
    exact = np.array([2.0, 0.5, -1.0]) * math.exp(-1.0)
    assert np.max(np.abs(st.x.points - exact)) < 1e-3


def test_step_order_preserved_and_push_accounting():
    m = GasModel(4, 0.5)  # weak repulsion makes crossings likely
    p = DouParams(m, dt=0.02, t_end=1.0)
    rng = RngStream(3, 0)
    st = PathState(0.0, Configuration([0.02, 0.01, 0.0, -0.01]))
    crossed = False
    for _ in range(50):
        st = step(p, st, rng)
        pts = st.x.points
        assert np.all(pts[:-1] >= pts[1:])
        crossed = crossed or st.accumulated_boundary_pushes > 0
    assert crossed  # tightly packed start under weak repulsion must reorder


def test_single_path_matches_batch_kernel():
    m = GasModel(4, 2.0)
    p = DouParams(m, dt=1e-3, t_end=0.1)
    x0 = Configuration([1.5, 0.5, -0.5, -1.5])
    states = simulate(p, x0, RngStream(99, 0), record_every=20)
    batch = simulate_batch(p, x0.points[None, :], 99, stream0=0,
                           record_every=20)
    assert np.array_equal(states[-1].x.points, batch.paths[0, -1])
    assert states[-1].accumulated_boundary_pushes == batch.pushes[0]


def test_ou_stationary_variance():
    # n=1 reduces to a linear restoring diffusion with variance 1/rho
    m = GasModel(1, 1.0, rho=2.0)
    p = DouParams(m, dt=1e-3, t_end=50.0)
    batch = simulate_batch(p, np.zeros((32, 1)), 7, record_every=50)
    keep = batch.times >= p.burn_in
    var = float(batch.paths[:, keep, 0].var())
    assert abs(var - 0.5) < 0.05 * 0.5 / 0.5 * 0.5  # 5% of 1/rho


def test_stationary_moments_match_exact_sampler():
    # long-run E|X|^2 vs the exact tridiagonal sampler, n=4 beta=2 rho=4;
    # substepping tames the occasional repulsion-drift overshoot that
    # plain Euler turns into a heavy moment bias at this step size
    m = GasModel(4, 2.0)
    p = DouParams(m, dt=2e-3, t_end=30.0, scheme="euler_substep",
                  substep_cap=20)
    x0 = sample_spectra(m, 64, 11)
    batch = simulate_batch(p, x0, 12, record_every=100)
    keep = batch.times >= p.burn_in
    sq = (batch.paths[:, keep, :] ** 2).sum(axis=2)
    target = 1.0 + 3.0 * 2.0 / 2.0  # = 4
    assert abs(sq.mean() - target) < 0.05 * target
    trace_var = float(batch.paths[:, keep, :].sum(axis=2).var())
    assert abs(trace_var - 1.0) < 0.1


def _event_counts(n, beta, dts, seed):
    m = GasModel(n, beta)
    x0 = sample_spectra(m, 256 if n == 8 else 64, seed)
    counts = []
    for dt in dts:
        p = DouParams(m, dt=dt, t_end=4.0)
        batch = simulate_batch(p, x0, seed + 1, record_every=10**9)
        counts.append(int(batch.events.sum()))
    return counts


def test_no_collision_diagnostic():
    # above the critical repulsion the boundary-intervention count
    # vanishes as dt shrinks.  The decay per dt-halving scales like
    # 2^((beta-1)/2) (small-gap mass ~ gap^beta over a sqrt(dt) window):
    # strict halving per level at beta=4, slower but strictly decreasing
    # at beta=2, and a plateau at the critical beta=1 (the exact process
    # never collides, but the discrete crossing rate does not vanish).
    counts = _event_counts(8, 4.0, (8e-3, 4e-3, 2e-3), 21)
    assert counts[0] > 0
    assert counts[1] <= counts[0] / 2.0
    assert counts[2] <= counts[1] / 2.0
    counts = _event_counts(4, 2.0, (8e-3, 4e-3, 2e-3), 21)
    assert counts[0] > counts[1] > counts[2] > 0
    assert counts[2] <= counts[0] / 2.0


def test_min_gap_stays_positive_along_paths():
    for beta in (1.0, 2.0):
        m = GasModel(6, beta)
        p = DouParams(m, dt=1e-3, t_end=2.0)
        x0 = sample_spectra(m, 8, 23)
        batch = simulate_batch(p, x0, 24, record_every=10)
        gaps = batch.paths[:, :, :-1] - batch.paths[:, :, 1:]
        assert float(gaps.min()) > 0.0


def test_coupling_same_start_identically_zero():
    m = GasModel(4, 2.0)
    p = DouParams(m, dt=1e-3, t_end=0.5)
    x0 = Configuration([1.0, 0.3, -0.3, -1.0])
    _, dists = couple(p, x0, x0, RngStream(5, 0))
    assert np.all(dists == 0.0)


def test_pathwise_contraction_bound():
    # per-path |X_t - Y_t| <= exp(-rho t)|X_0 - Y_0| (1 + discretization)
    m = GasModel(4, 2.0)
    p = DouParams(m, dt=1e-3, t_end=2.0, scheme="euler_substep")
    x0 = np.array([[1.5, 0.5, -0.5, -1.5]])
    y0 = np.array([[0.8, 0.4, -0.4, -0.8]])
    times, dists = couple_batch(p, x0, y0, 31, record_every=100)
    envelope = dists[0, 0] * np.exp(-m.rho * times) * (1.0 + 0.05)
    assert np.all(dists[0] <= envelope)


def test_coupled_substep_never_expands_distance():
    m = GasModel(4, 2.0)
    p = DouParams(m, dt=1e-3, t_end=1.0, scheme="euler_substep")
    x0 = sample_spectra(m, 50, 61)
    y0 = sample_spectra(m, 50, 62, stream0=10**6)
    _, dists = couple_batch(p, x0, y0, 63, record_every=1)
    assert np.all(np.diff(dists, axis=1) <= 1e-15)


def test_decay_experiment_rate_and_t0():
    # per-path slopes are the robust statistic: a rare discrete-step
    # overshoot can dominate the mean curve without touching the
    # per-path 99% quantile
    m = GasModel(4, 2.0)
    p = DouParams(m, dt=1e-3, t_end=1.0)
    exp = wasserstein_decay_experiment(
        p, equilibrium_sampler(m), equispaced_sampler(-1.0, 1.0, 4),
        reps=200, seed=41)
    assert np.mean(exp.per_path_rates >= 0.95 * m.rho) >= 0.99
    assert np.median(exp.per_path_rates) >= 0.95 * m.rho
    # t=0 value is the empirical p-distance of the initial pairing
    assert exp.bound[0] > 0.0
    # same sampler for both laws: bound identically zero
    exp0 = wasserstein_decay_experiment(
        p, equispaced_sampler(-1.0, 1.0, 4), equispaced_sampler(-1.0, 1.0, 4),
        reps=10, seed=43)
    assert np.all(exp0.bound == 0.0)


def test_substep_scheme_runs_and_flags():
    m = GasModel(4, 0.5)
    p = DouParams(m, dt=5e-3, t_end=0.5, scheme="euler_substep",
                  substep_cap=3)
    x0 = np.array([[0.02, 0.01, 0.0, -0.01]] * 4)
    batch = simulate_batch(p, x0, 51, record_every=10)
    for k in range(batch.paths.shape[1]):
        pts = batch.paths[0, k]
        assert np.all(pts[:-1] >= pts[1:])
    assert batch.events.sum() > 0  # tight start must trigger handling


def test_fit_decay_rate_on_exact_exponential():
    t = np.linspace(0.0, 2.0, 50)
    vals = 3.0 * np.exp(-1.7 * t)
    assert abs(fit_decay_rate(t, vals) - 1.7) < 1e-10


def test_terminal_trace_marginal_is_standard_normal():
    # after burn-in the coordinate sum of many independent paths is
    # N(0,1); KS threshold 0.02 at 1e4 paths
    from loggas.analysis import EmpiricalMeasure, ks_distance, normal_cdf

    m = GasModel(4, 2.0)
    p = DouParams(m, dt=2e-3, t_end=3.0, scheme="euler_substep")
    x0 = np.tile(np.linspace(1.0, -1.0, 4), (10_000, 1))
    batch = simulate_batch(p, x0, 71, record_every=10**9)
    traces = batch.paths[:, -1, :].sum(axis=1)
    assert ks_distance(EmpiricalMeasure(traces), normal_cdf) < 0.02
