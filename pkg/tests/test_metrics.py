from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from difaltgdmin import optimizer
from difaltgdmin.metrics import (
    CommModel,
    RoundCounter,
    comm_time_centralized,
    comm_time_decentralized,
    internode_gaps,
    price_rounds,
    subspace_distances,
    task_errors,
    transfer_seconds,
)
from difaltgdmin.network import bfs_distances
from difaltgdmin.numerics import qr_positive, subspace_distance

from problems import init_for, small_problem

seeds = st.integers(min_value=0, max_value=2**32 - 1)
DEFAULT = CommModel()


def test_comm_model_validation():
    with pytest.raises(ValueError):
        CommModel(latency=-1.0)
    with pytest.raises(ValueError):
        CommModel(bandwidth=0.0)


def test_decentralized_reference_value():
    assert comm_time_decentralized(DEFAULT, 300, 4, 10) == 0.02064


def test_decentralized_isolated_node():
    assert comm_time_decentralized(DEFAULT, 300, 4, 0) == 0.02


def test_centralized_reference_value():
    assert comm_time_centralized(DEFAULT, 300, 4, 300) == 0.0392


def test_centralized_single_node_equals_one_neighbour():
    assert comm_time_centralized(DEFAULT, 50, 3, 1) == comm_time_decentralized(DEFAULT, 50, 3, 1)


@settings(max_examples=100, deadline=None)
@given(d=st.integers(1, 2000), r=st.integers(1, 10), k=st.integers(0, 1000),
       latency=st.sampled_from([0.0, 20e-3, 1e-3, 0.5]), bandwidth=st.sampled_from([150e6, 1e9, 12345.0]))
def test_closed_form_exact(d, r, k, latency, bandwidth):
    model = CommModel(latency, bandwidth)
    exact = Fraction(repr(latency)) + Fraction(8 * d * r * k) / Fraction(repr(bandwidth))
    assert comm_time_decentralized(model, d, r, k) == float(exact)
    # doubling the payload doubles the bandwidth term bit for bit
    assert transfer_seconds(model, 2 * d * r * k) == 2 * transfer_seconds(model, d * r * k)
    lin = comm_time_centralized(model, d, r, 2 * (k + 1)) - latency
    assert lin == pytest.approx(2 * (comm_time_centralized(model, d, r, k + 1) - latency), rel=1e-14)


def test_price_rounds():
    counter = RoundCounter(agree_rounds=3, scalar_rounds=2, broadcast_rounds=1, central_rounds=4)
    got = price_rounds(counter, DEFAULT, 300, 4, 10, 300)
    want = 2 * comm_time_decentralized(DEFAULT, 1, 1, 10) + 4 * 0.02064 + 4 * 0.0392
    assert got == pytest.approx(want, rel=1e-15)
    assert price_rounds(RoundCounter(), DEFAULT, 3, 1, 1, 1) == 0.0


def test_round_counter_arithmetic():
    a = RoundCounter(agree_rounds=4, scalar_messages=3)
    b = a.snapshot()
    a.agree_rounds += 2
    diff = a.since(b)
    assert diff.agree_rounds == 2 and diff.scalar_messages == 0
    assert a.total_rounds == 6


# --- errors and gaps -----------------------------------------------------------

def _planted(seed=0, d=6, t_tasks=5, r=2):
    rng = np.random.default_rng(seed)
    u, _ = qr_positive(rng.standard_normal((d, r)))
    b = rng.standard_normal((r, t_tasks))
    return u, b


def test_task_errors_exact_recovery():
    u, b = _planted()
    parts = [np.array([0, 1]), np.array([2, 3, 4])]
    errs = task_errors([u, u], [b[:, :2], b[:, 2:]], parts, u @ b)
    np.testing.assert_allclose(errs, 0.0, atol=1e-15)


def test_task_errors_isometry():
    u, b = _planted()
    c = 0.3
    shifted = b.copy()
    shifted[0] += c
    errs = task_errors([u], [shifted], [np.arange(5)], u @ b)
    np.testing.assert_allclose(errs, c / np.linalg.norm(u @ b, axis=0), rtol=1e-12)


def test_task_errors_zero_column():
    u, b = _planted()
    b[:, 1] = 0
    errs = task_errors([u], [b], [np.arange(5)], u @ b)
    assert errs[1] == 0.0
    bad = b.copy()
    bad[0, 1] = 1.0
    assert np.isinf(task_errors([u], [bad], [np.arange(5)], u @ b)[1])


def test_gaps_equal_states():
    u, _ = _planted()
    assert internode_gaps([u, u, u], u) == (0.0, 0.0)


def test_gaps_by_hand():
    e1, e2 = np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])
    rho, psi = internode_gaps([e1, e2], e1)
    assert rho == pytest.approx(np.sqrt(2))
    assert psi == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, nodes=st.integers(1, 6))
def test_psi_never_exceeds_rho(seed, nodes):
    rng = np.random.default_rng(seed)
    us = [qr_positive(rng.standard_normal((7, 2)))[0] for _ in range(nodes)]
    u_star = qr_positive(rng.standard_normal((7, 2)))[0]
    rho, psi = internode_gaps(us, u_star)
    assert psi <= rho + 1e-12
    np.testing.assert_allclose(subspace_distances(np.stack(us), u_star),
                               [subspace_distance(u_star, u) for u in us], atol=1e-12)


# --- trace accounting ---------------------------------------------------------------

@pytest.fixture(scope="module")
def dif_trace():
    dims, gt, ds, topo, w = small_problem(l_nodes=5, seed=2)
    init = init_for(ds, topo, w, dims, gt, t_pm=3, t_con=4)
    ctx = optimizer.Context(ds=ds, topo=topo, weights=w, gt=gt)
    trace = optimizer.run(ctx, init, optimizer.OptimizerParams(t_gd=6, t_con_gd=2))
    return trace, topo, dims


def test_round_totals_structure(dif_trace):
    trace, topo, _ = dif_trace
    tot = trace.totals
    assert tot.agree_rounds == 4 * 3 + 2 * 6
    assert tot.scalar_rounds == 4
    assert tot.broadcast_rounds == 3 * topo.ecc_node1
    assert tot.central_rounds == 0
    assert sum(rep.rounds.total_rounds for rep in trace.reports) == tot.total_rounds
    dist = np.asarray(bfs_distances(topo.adjacency))
    flood = sum(int(topo.degrees[dist == k].sum()) for k in range(topo.ecc_node1))
    assert tot.matrix_messages == 2 * topo.n_edges * (4 * 3 + 2 * 6) + 3 * flood
    assert tot.scalar_messages == 2 * topo.n_edges * 4


def test_comm_totals_reconcile(dif_trace):
    trace, topo, dims = dif_trace
    total = price_rounds(trace.totals, DEFAULT, dims.d, dims.r, topo.max_degree, dims.l_nodes)
    assert trace.comm_s_total == pytest.approx(total, rel=1e-9)
    assert np.all(np.diff(trace.cumulative("comm_s")) >= 0)
    assert np.all(np.diff(trace.cumulative("compute_s")) >= 0)


def test_reports_in_range(dif_trace):
    trace, _, _ = dif_trace
    for rep in trace.reports:
        assert np.all((rep.sd >= 0) & (rep.sd <= 1))
        assert rep.psi_hat <= rep.rho_hat + 1e-12
