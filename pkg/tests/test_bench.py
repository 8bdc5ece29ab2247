
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from linkcomm.bench import (AXES, GroundTruth, SyntheticSpec, fit_cover, format_table, fraction_correct,
                            generate_two_community, grid_spec, jaccard_overlap, nmi_cover_variant, nmi_partition,
                            parse_table, read_lfr, run_benchmark_sweep, score, two_community_theta)
from linkcomm.membership import Cover
from linkcomm.nonoverlap import Partition


def sets_of(labels):
    return [frozenset({int(x)}) for x in labels]


def test_synthetic_parameters_validated():
    with pytest.raises(ValueError):
        SyntheticSpec(n=10, x=5, y=5, z=1)
    with pytest.raises(ValueError):
        SyntheticSpec(n=10, x=0, y=10, z=0)
    with pytest.raises(ValueError):
        SyntheticSpec(n=10, x=5, y=5, z=0, k=0)


def test_theta_gives_expected_degree():
    spec = SyntheticSpec(n=100, x=30, y=50, z=20, k=7.0)
    theta = two_community_theta(spec)
    np.testing.assert_allclose(theta @ theta.sum(axis=0), 7.0)
    # overlap vertices split their degree evenly
    ov = theta[80:] * theta.sum(axis=0)
    np.testing.assert_allclose(ov[:, 0], ov[:, 1])


def test_mean_degree_over_draws():
    means = [generate_two_community(SyntheticSpec(1000, 450, 450, 100, 10.0, seed=s))[0].degrees.mean()
             for s in range(100)]
    assert abs(np.mean(means) - 10.0) < 0.2


def test_colour_degrees_are_poisson():
    spec = SyntheticSpec(20000, 10000, 10000, 0, 6.0, seed=0)
    g, _ = generate_two_community(spec)
    deg = g.degrees[:10000]
    counts = np.bincount(deg, minlength=40)[:40]
    expect = stats.poisson.pmf(np.arange(40), 6.0) * len(deg)
    keep = expect > 5
    obs = np.append(counts[keep], len(deg) - counts[keep].sum())
    exp = np.append(expect[keep], len(deg) - expect[keep].sum())
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_near_empty_graph():
    g, _ = generate_two_community(SyntheticSpec(1000, 450, 450, 100, 0.01, seed=1))
    assert g.m < 20


def test_fraction_correct_examples():
    truth = [{0}] * 50 + [{1}] * 50
    swapped = [{1}] * 50 + [{0}] * 50
    assert fraction_correct(truth, truth) == 1.0
    assert fraction_correct(truth, swapped) == 1.0
    one_off = list(swapped)
    one_off[0] = {0, 1}
    assert fraction_correct(truth, one_off) == pytest.approx(0.99)


def test_fraction_correct_counts_overlap_and_empty():
    truth = [{0}, {1}, {0, 1}, {0}]
    assert fraction_correct(truth, [{0}, {1}, {0, 1}, set()]) == 0.75


def test_fraction_correct_k_mismatch_warns():
    with pytest.warns(RuntimeWarning):
        v = fraction_correct([{0}, {1}, {2}], [{0}, {1}, {1}])
    assert v == pytest.approx(2 / 3)


def test_fraction_correct_large_K_uses_assignment():
    rng = np.random.default_rng(0)
    truth = rng.integers(0, 12, size=300)
    perm = rng.permutation(12)
    found = perm[truth]
    found[:10] = (found[:10] + 1) % 12
    assert fraction_correct(sets_of(truth), sets_of(found)) == pytest.approx(290 / 300)


def test_jaccard_examples():
    def cover(over, n=6):
        return [{0, 1} if i in over else {0} for i in range(n)]

    assert jaccard_overlap(cover({1, 2}), cover({1, 2})) == 1
    assert jaccard_overlap(cover({1}), cover({2})) == 0
    assert jaccard_overlap(cover({1, 2, 3}), cover({2, 3, 4})) == 0.5
    assert jaccard_overlap(cover(set()), cover(set())) == 1


def test_nmi_examples():
    a = [0, 0, 1, 1, 2]
    assert nmi_partition(a, [5, 5, 3, 3, 9]) == pytest.approx(1.0)
    assert nmi_partition([0] * 6, [0, 0, 0, 1, 1, 1]) == 0.0
    assert nmi_partition([0] * 6, [3] * 6) == 1.0
    rng = np.random.default_rng(0)
    assert nmi_partition(rng.integers(0, 2, 10**5), rng.integers(0, 2, 10**5)) < 0.01


def test_nmi_accepts_partition_objects():
    p = Partition(np.array([0, 0, 1, 1]), 2)
    assert nmi_partition(p, p) == 1.0
    with pytest.raises(ValueError):
        nmi_partition(Partition(np.array([0, -1]), 2), [0, 0])


def test_variant_nmi_identical_and_permuted():
    a = [{0}, {0, 1}, {1}, {1, 2}, {2}, {2}]
    b = [{7 if c == 0 else 3 if c == 1 else 5 for c in s} for s in a]
    assert nmi_cover_variant(a, a) == pytest.approx(1.0)
    assert nmi_cover_variant(a, b) == pytest.approx(1.0)


def test_variant_nmi_empty_cover_warns():
    with pytest.warns(RuntimeWarning):
        assert nmi_cover_variant([set()] * 4, [{0}] * 4) == 0.0


def test_variant_nmi_hand_instance():
    a = [{0}, {0}, {0, 1}, {1}, {1}, {1}]
    b = [{0}, {0}, {0}, {1}, {1}, {0, 1}]
    assert nmi_cover_variant(a, b) == pytest.approx(oracles.nmi_cover(a, b), abs=1e-10)


@pytest.mark.filterwarnings("ignore:aligning")
def test_metrics_against_oracles_on_random_covers():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(3, 9))
        a = [set(np.flatnonzero(rng.random(3) < 0.5).tolist()) or {0} for _ in range(n)]
        b = [set(np.flatnonzero(rng.random(3) < 0.5).tolist()) or {1} for _ in range(n)]
        want = oracles.nmi_cover(a, b)
        if not np.isnan(want):
            assert nmi_cover_variant(a, b) == pytest.approx(want, abs=1e-10)
        assert fraction_correct(a, b) == pytest.approx(oracles.fraction_correct(a, b))


def test_score_fields():
    truth = GroundTruth([{0}, {0}, {1}, {1}])
    s = score(truth, Cover.from_sets([{1}, {1}, {0}, {0}]))
    assert (s.fraction_correct, s.jaccard, s.nmi, s.variant_nmi) == (1.0, 1.0, 1.0, pytest.approx(1.0))
    s = score(GroundTruth([{0}, {0, 1}]), [{0}, {0, 1}])
    assert np.isnan(s.nmi)


@given(st.lists(st.sets(st.integers(0, 3), max_size=3), min_size=2, max_size=12), st.permutations(range(4)))
@settings(max_examples=100, deadline=None)
def test_metrics_in_range_and_invariant(cover, perm):
    truth = [s or {0} for s in cover]
    moved = [{perm[c] for c in s} for s in truth]
    for f in (fraction_correct, jaccard_overlap, nmi_cover_variant):
        v = f(truth, moved)
        assert 0.0 <= v <= 1.0
    assert fraction_correct(truth, moved) == 1.0
    assert jaccard_overlap(truth, moved) == 1.0
    assert nmi_cover_variant(truth, moved) == pytest.approx(1.0)


def test_grid_spec_axes():
    assert grid_spec("degree", 12, n=1000, z=100).k == 12
    s = grid_spec("balance", 300, n=1000, z=100, k=5)
    assert (s.x, s.y, s.z) == (300, 600, 100)
    s = grid_spec("overlap", 200, n=1000, k=5)
    assert (s.x, s.y, s.z) == (400, 400, 200)
    with pytest.raises(ValueError):
        grid_spec("nope", 1)


def test_sweep_table_shape_and_easy_rows():
    rows = run_benchmark_sweep("degree", [20.0, 30.0], reps=1, restarts=3, seed=0, n=600, z=0)
    assert len(rows) == 2
    assert all(r.fraction_correct == 1.0 and r.jaccard == 1.0 for r in rows)
    back = parse_table(format_table(rows, "degree"))
    assert [r.value for r in back] == [20.0, 30.0]
    with pytest.raises(ValueError):
        run_benchmark_sweep("nope", [1.0])
    assert AXES == ("degree", "balance", "overlap")


def test_read_lfr(tmp_path):
    net = tmp_path / "network.dat"
    com = tmp_path / "community.dat"
    net.write_text("1 2\n2 1\n2 3\n3 2\n3 4\n4 3\n")
    com.write_text("# mu=0.1\n1 1\n2 1\n3 2\n4 2\n")
    g, truth = read_lfr(net, com)
    assert g.m == 3
    assert truth.sets == [frozenset({1}), frozenset({1}), frozenset({2}), frozenset({2})]
    assert truth.meta["mu"] == 0.1


def test_fit_cover_on_generated_graph():
    g, truth = generate_two_community(SyntheticSpec(2000, 950, 950, 100, 20.0, seed=3))
    cover = fit_cover(g, 2, 5, seed=4)
    assert fraction_correct(truth, cover) > 0.95
