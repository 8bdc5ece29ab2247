import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_multigraph
from linkcomm.em import EmConfig, color_degrees, e_step, initial_color_degrees, run_em, theta_from_k
from linkcomm.fast import FastEM, PruneConfig, fast_sweep, freeze_edges, run_fast_em, sweep
from linkcomm.graph import from_edges


def naive_step(g, k):
    """One E+M step of the reference EM, expressed on colour degrees."""
    q = e_step(g, theta_from_k(k), strict=False).q
    return color_degrees(g, q)


@pytest.mark.parametrize("K", [1, 2, 3, 5, 12])
def test_sweep_equals_naive_step(K):
    rng = np.random.default_rng(K)
    g = random_multigraph(30, 0.2, rng)
    k = initial_color_degrees(g, K, rng)
    k1, kappa1 = sweep(g, k)
    np.testing.assert_allclose(k1, naive_step(g, k), rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(kappa1, k1.sum(axis=0), rtol=1e-12)


def test_dense_and_sparse_paths_agree():
    rng = np.random.default_rng(7)
    g = random_multigraph(40, 0.15, rng)
    k0 = initial_color_degrees(g, 6, rng)
    cfg = PruneConfig(delta=0.01)
    a = FastEM(g, k0, cfg, small_k=100)
    b = FastEM(g, k0, cfg, small_k=0)
    assert a.dense and not b.dense
    for _ in range(30):
        a.step()
        b.step()
    np.testing.assert_allclose(a.k, b.k, rtol=1e-12, atol=1e-12)


def test_freezing_does_not_change_iterates():
    rng = np.random.default_rng(8)
    g = random_multigraph(40, 0.15, rng)
    k0 = initial_color_degrees(g, 3, rng)
    a = FastEM(g, k0, PruneConfig(delta=0.05, freeze=True))
    b = FastEM(g, k0, PruneConfig(delta=0.05, freeze=False))
    for _ in range(60):
        a.step()
        b.step()
    np.testing.assert_allclose(a.k, b.k, rtol=1e-10, atol=1e-12)
    assert a.live_edges <= b.live_edges == g.num_pairs


def test_pruned_entries_stay_zero():
    rng = np.random.default_rng(9)
    g = random_multigraph(40, 0.15, rng)
    state = FastEM(g, initial_color_degrees(g, 4, rng), PruneConfig(delta=0.05))
    dead = state.k == 0
    for _ in range(40):
        state.step()
        assert np.all(state.k[dead] == 0)
        assert np.all((state.k == 0) | (state.k >= 0.05))
        dead = state.k == 0


def test_unpruned_mass_is_conserved():
    rng = np.random.default_rng(10)
    g = random_multigraph(30, 0.2, rng)
    res = run_fast_em(g, 3, EmConfig(), seed=1, prune=PruneConfig(delta=0.0))
    np.testing.assert_allclose(res.k.sum(axis=1), g.degrees, rtol=1e-10)


def test_pruned_mass_never_exceeds_degree():
    rng = np.random.default_rng(11)
    g = random_multigraph(30, 0.2, rng)
    res = run_fast_em(g, 3, EmConfig(), seed=1, prune=PruneConfig(delta=0.2))
    assert np.all(res.k.sum(axis=1) <= g.degrees + 1e-9)


def test_freeze_edges_mask():
    g = from_edges([(0, 1), (1, 2), (2, 3)])
    k = np.array([[1.0, 0], [2.0, 0], [0.5, 1.5], [0, 1.0]])
    assert freeze_edges(g, k).tolist() == [True, False, False]


def test_zero_rate_edge_keeps_own_colours():
    # ends share no live colour: each keeps its own proportions, nothing revives
    g = from_edges([(0, 1), (0, 2), (1, 3)])
    k = np.array([[2.0, 0.0], [0.0, 2.0], [1.0, 0.0], [0.0, 1.0]])
    state = FastEM(g, k, PruneConfig(delta=0.0, freeze=False))
    state.step()
    assert state.degenerate == 1
    np.testing.assert_allclose(state.k, k)


def test_converges_to_naive_optimum(karate):
    naive = run_em(karate, 2, seed=5)
    fast = run_fast_em(karate, 2, seed=5, prune=PruneConfig(delta=0.0))
    assert fast.converged
    assert fast.log_likelihood == pytest.approx(naive.log_likelihood, rel=1e-8)


def test_audit_trace_recorded(karate):
    res = run_fast_em(karate, 2, seed=0, prune=PruneConfig(delta=0.0), audit_every=5)
    assert len(res.trace) >= 2
    assert res.trace[-1] == res.log_likelihood


def test_fast_sweep_threads_and_seeds(karate):
    a = fast_sweep(karate, 2, EmConfig(threads=1), seed=3, prune=PruneConfig(0.0), restarts=6)
    b = fast_sweep(karate, 2, EmConfig(threads=3), seed=3, prune=PruneConfig(0.0), restarts=6)
    assert a.log_likelihoods == b.log_likelihoods


def test_negative_delta_rejected():
    with pytest.raises(ValueError):
        PruneConfig(delta=-1.0)


@given(st.integers(0, 2**31), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_trajectory_matches_naive(seed, K):
    rng = np.random.default_rng(seed)
    g = random_multigraph(int(rng.integers(3, 30)), 0.25, rng)
    if g.m == 0:
        return
    k = initial_color_degrees(g, K, rng)
    state = FastEM(g, k, PruneConfig(delta=0.0, freeze=False))
    ref = k.copy()
    for _ in range(20):
        state.step()
        ref = naive_step(g, ref)
        np.testing.assert_allclose(theta_from_k(state.k), theta_from_k(ref), rtol=1e-10, atol=1e-12)
