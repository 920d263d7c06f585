"""Finite-N simulator.

Correctness anchors: with single-choice routing (d=1) the servers are
exactly independent M/G/1/B queues at every N, so the time-averaged tail
must match closed forms (M/M/1/B) and the ODE fixed point without any
finite-N bias.  Everything else checks determinism, pooling and the
comparison contract.
"""

import numpy as np
import pytest

import coxfield as cf
from coxfield.sim import StationaryEstimate


EXP = cf.CoxianDistribution((1.0,), (0.0,))


def mm1b_tail(rho, B):
    # P(Q >= l) for M/M/1/B, l = 1..B
    ls = np.arange(1, B + 1)
    return rho**ls * (1 - rho ** (B + 1 - ls)) / (1 - rho ** (B + 1))


def test_mm1_anchor():
    model = cf.PolicyModel(kind="jsq", lam=0.5, service=EXP, B=20, d=1)
    config = cf.SimConfig(
        model=model, N=100, horizon=600.0, seed=11, warmup=100.0, replications=8
    )
    est = cf.replicate(config)
    exact = mm1b_tail(0.5, 20)[:, None]
    gap = np.abs(est.h_bar - exact)
    assert gap.max() < 5e-3
    # per-entry CI coverage where the level is actually visited
    lively = gap[:12] > 3.0 * est.half_width[:12] + 1e-9
    assert lively.sum() <= 2
    assert est.drop_fraction < 1e-4


def test_single_choice_matches_ode_fixed_point(balanced_service):
    # d=1: servers are iid M/Cox/1/B queues, the mean-field pi is exact
    model = cf.PolicyModel(kind="jsq", lam=0.6, service=balanced_service, B=10, d=1)
    pi = cf.fixed_point(model).pi
    config = cf.SimConfig(
        model=model, N=200, horizon=400.0, seed=3, warmup=100.0, replications=6
    )
    comp = cf.compare_to_fixed_point(cf.replicate(config), pi)
    assert comp.distance < 0.01
    assert comp.excess_entries <= 2
    assert comp.total_entries == 20


def test_estimate_lies_in_state_space(balanced_service):
    model = cf.PolicyModel(
        kind="batchjsq", lam=0.3, service=balanced_service, B=6, d=3, K=2
    )
    config = cf.SimConfig(model=model, N=60, horizon=120.0, seed=5, warmup=20.0)
    est = cf.simulate(config)
    assert cf.in_state_space(est.h_bar, tol=1e-12)


def test_determinism_and_seed_sensitivity(balanced_service):
    model = cf.PolicyModel(kind="pullpush", lam=0.5, r=1.0, service=balanced_service, B=5)
    config = cf.SimConfig(model=model, N=30, horizon=80.0, seed=9, warmup=10.0)
    a = cf.simulate(config)
    b = cf.simulate(config)
    assert np.array_equal(a.h_bar, b.h_bar)
    c = cf.simulate(cf.SimConfig(model=model, N=30, horizon=80.0, seed=10, warmup=10.0))
    assert not np.array_equal(a.h_bar, c.h_bar)


def test_replicate_pools_and_matches_simulate(balanced_service):
    model = cf.PolicyModel(kind="jsq", lam=0.7, service=balanced_service, B=6, d=2)
    config = cf.SimConfig(
        model=model, N=40, horizon=90.0, seed=2, warmup=15.0, replications=3
    )
    est = cf.replicate(config)
    assert est.per_replication.shape == (3, 6, 2)
    assert np.array_equal(est.h_bar, est.per_replication.mean(axis=0))
    assert np.all(est.half_width[:4] > 0)  # deep tail may go unvisited
    # replication r reruns simulate with seed+r
    solo = cf.simulate(cf.SimConfig(model=model, N=40, horizon=90.0, seed=4, warmup=15.0))
    assert np.array_equal(est.per_replication[2], solo.h_bar)
    single = cf.replicate(cf.SimConfig(model=model, N=40, horizon=90.0, seed=2, warmup=15.0))
    assert single.replications == 1
    assert np.all(single.half_width == 0.0)


def test_worker_pool_matches_serial(balanced_service, monkeypatch):
    model = cf.PolicyModel(kind="jsq", lam=0.6, service=balanced_service, B=5, d=2)
    config = cf.SimConfig(
        model=model, N=25, horizon=60.0, seed=6, warmup=10.0, replications=2
    )
    monkeypatch.setenv("COXFIELD_THREADS", "1")
    serial = cf.replicate(config)
    monkeypatch.setenv("COXFIELD_THREADS", "2")
    pooled = cf.replicate(config)
    assert np.array_equal(serial.h_bar, pooled.h_bar)
    assert np.array_equal(serial.half_width, pooled.half_width)


def test_one_server_cluster_runs(balanced_service):
    # probes have no peer to pull from when N=1
    model = cf.PolicyModel(kind="pullpush", lam=0.5, r=2.0, service=balanced_service, B=4)
    est = cf.simulate(cf.SimConfig(model=model, N=1, horizon=200.0, seed=1, warmup=20.0))
    assert cf.in_state_space(est.h_bar, tol=1e-12)
    assert 0.0 < est.h_bar[0, 0] < 1.0


def test_overloaded_model_runs_and_drops(balanced_service):
    with pytest.warns(UserWarning, match="unstable"):
        model = cf.PolicyModel(kind="jsq", lam=1.2, service=balanced_service, B=3, d=2)
    est = cf.simulate(cf.SimConfig(model=model, N=20, horizon=30.0, seed=0, warmup=5.0))
    assert est.drop_fraction > 0.0
    assert cf.in_state_space(est.h_bar, tol=1e-12)


def test_warmup_resolution(balanced_service):
    def cfg(model, **kw):
        return cf.SimConfig(model=model, N=10, horizon=1000.0, **kw)

    jsq = cf.PolicyModel(kind="jsq", lam=0.9, service=balanced_service, B=4, d=2)
    assert cfg(jsq).resolved_warmup == pytest.approx(200.0)
    assert cfg(jsq, warmup=3.0).resolved_warmup == 3.0
    batch = cf.PolicyModel(
        kind="batchjsq", lam=0.4, service=balanced_service, B=4, d=3, K=2
    )
    assert cfg(batch).resolved_warmup == pytest.approx(100.0)
    light = cf.PolicyModel(kind="jsq", lam=0.2, service=balanced_service, B=4, d=2)
    assert cfg(light).resolved_warmup == 100.0


def test_config_validation(balanced_service):
    model = cf.PolicyModel(kind="jsq", lam=0.5, service=balanced_service, B=4, d=2)
    with pytest.raises(ValueError, match="N >= 1"):
        cf.SimConfig(model=model, N=0, horizon=10.0)
    with pytest.raises(ValueError, match="replications"):
        cf.SimConfig(model=model, N=5, horizon=10.0, replications=0)
    with pytest.raises(ValueError, match="horizon"):
        cf.SimConfig(model=model, N=5, horizon=10.0, warmup=10.0)
    unbounded = cf.PolicyModel(kind="jsq", lam=0.5, service=balanced_service, d=2)
    with pytest.raises(ValueError, match="buffer"):
        cf.SimConfig(model=unbounded, N=5, horizon=10.0)


def test_comparison_contract():
    pi = np.array([[0.5, 0.2], [0.1, 5e-11]])
    h_bar = pi.copy()
    h_bar[1, 1] = 0.0  # never visited in simulation
    hw = np.full((2, 2), 2e-3)
    hw[1, 1] = 0.0

    def est(h):
        return StationaryEstimate(
            h_bar=h, half_width=hw, n_servers=10, replications=2,
            per_replication=np.stack([h, h]), drop_fraction=0.0,
        )

    comp = cf.compare_to_fixed_point(est(h_bar), pi)
    # the dead-tail gap sits below the solver allowance
    assert comp.excess_entries == 0
    assert comp.distance == pytest.approx(5e-11)
    shifted = h_bar.copy()
    shifted[0, 0] += 0.01
    comp = cf.compare_to_fixed_point(est(shifted), pi)
    assert comp.excess_entries == 1
    assert comp.distance == pytest.approx(0.01)
    assert comp.half_width_max == pytest.approx(2e-3)
    with pytest.raises(ValueError, match="shape"):
        cf.compare_to_fixed_point(est(h_bar), np.zeros((3, 2)))
