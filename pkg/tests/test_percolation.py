import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from percut import HORIZON, path_graph, star_graph
from percut.cutsets import verified_cutset
from percut.errors import CapExceededError, PreconditionError
from percut.percolation import (
    PercConfig,
    boundary_census_exact,
    boundary_census_mc,
    boundary_hit_probability,
    cluster_report,
    config_connects,
    config_from_mask,
    connection_event,
    event_popcount_profile,
    exact_prob,
    finite_cluster_event,
    fkg_spot_check,
    mc_prob,
    peierls_bound,
    profile_probability,
    sample_config,
    strong_percolation_experiment,
    theta,
)

from corpus import CORPUS, table_for


# ---- configurations and clusters ----


def test_config_from_mask_bit_order():
    c = config_from_mask(path_graph(5), 0b0101)
    assert c.open_bits == (True, False, True, False)
    assert c.n_open == 2
    assert c.is_open(0) and not c.is_open(1)


def test_sample_config_shape():
    rng = np.random.default_rng(0)
    c = sample_config(path_graph(5), 0.5, rng)
    assert len(c.open_bits) == 4


def test_cluster_report_p5_all_open():
    p5 = path_graph(5)
    report = cluster_report(p5, config_from_mask(p5, 0b1111), 2)
    assert not report.finite


def test_cluster_report_p5_island():
    p5 = path_graph(5)
    report = cluster_report(p5, config_from_mask(p5, 0b0110), 2)
    assert report.finite
    assert report.cluster == frozenset({1, 2, 3})
    assert report.exposed == (0, 3)


def test_cluster_report_isolated_source():
    p5 = path_graph(5)
    report = cluster_report(p5, config_from_mask(p5, 0b1001), 2)
    assert report.finite
    assert report.cluster == frozenset({2})
    assert report.exposed == (1, 2)


def test_config_connects():
    p5 = path_graph(5)
    c = config_from_mask(p5, 0b0011)
    assert config_connects(p5, c, 2, 0)
    assert not config_connects(p5, c, 2, 4)
    assert config_connects(p5, c, 2, HORIZON)


# ---- exact probabilities ----


def test_theta_p5_half():
    assert theta(path_graph(5), 0.5, 2).value == pytest.approx(7 / 16, abs=1e-12)


def test_theta_p5_point_seven():
    assert theta(path_graph(5), 0.7, 2).value == pytest.approx(0.7399, abs=1e-12)


def test_theta_horizon_vertex_is_one():
    assert theta(path_graph(5), 0.3, 0).value == 1.0


def test_finite_cluster_star3():
    g = CORPUS["star3"]
    ev = finite_cluster_event(g, 0)
    assert exact_prob(g, 0.5, ev).value == pytest.approx(1 / 8, abs=1e-15)


def test_profile_probability_single_edge_event():
    # "Edge 0 open" has probability p for every p; the profile route
    # must reproduce that exactly.
    p5 = path_graph(5)
    profile = event_popcount_profile(p5, lambda c: c.is_open(0))
    for p in (0.1, 0.5, 0.9):
        assert profile_probability(profile, p) == pytest.approx(p, abs=1e-12)


def test_event_popcount_profile_cap():
    g = CORPUS["rand16"]
    if g.n_edges > 20:
        with pytest.raises(CapExceededError):
            event_popcount_profile(g, lambda c: True)


def test_complementary_profiles_sum_to_one():
    p5 = path_graph(5)
    ev = connection_event(p5, 2, HORIZON)
    a = event_popcount_profile(p5, ev)
    b = event_popcount_profile(p5, lambda c: not ev(c))
    for p in (0.2, 0.5, 0.8):
        total = profile_probability(a, p) + profile_probability(b, p)
        assert total == pytest.approx(1.0, abs=1e-12)


# ---- monte carlo ----


def test_mc_prob_reproducible_and_calibrated():
    p5 = path_graph(5)
    ev = connection_event(p5, 2, HORIZON)
    got = mc_prob(p5, 0.5, ev, 20_000, seed=101)
    again = mc_prob(p5, 0.5, ev, 20_000, seed=101)
    assert got == again
    assert got.method == "monte_carlo"
    assert got.trials == 20_000
    assert got.ci_low <= 7 / 16 <= got.ci_high


def test_mc_prob_rejects_bad_args():
    p5 = path_graph(5)
    with pytest.raises(PreconditionError):
        mc_prob(p5, 1.5, lambda c: True, 10, seed=0)
    with pytest.raises(PreconditionError):
        mc_prob(p5, 0.5, lambda c: True, 0, seed=0)


def test_theta_mc_needs_seed():
    with pytest.raises(PreconditionError):
        theta(path_graph(5), 0.5, 2, exact=False)


# ---- peierls ----


def test_peierls_p5_half_is_one():
    table = table_for("path5", 2)
    assert peierls_bound(table, 0.5) == pytest.approx(1.0, abs=1e-15)


def test_peierls_star3_tight():
    g = CORPUS["star3"]
    table = table_for("star3", 0)
    bound = peierls_bound(table, 0.5)
    exact = exact_prob(g, 0.5, finite_cluster_event(g, 0)).value
    assert bound == pytest.approx(1 / 8, abs=1e-12)
    assert exact == pytest.approx(bound, abs=1e-12)


def test_peierls_dominates_on_sample():
    for name in ("path7", "cycle6", "diamond", "pendant_path"):
        g = CORPUS[name]
        for v in g.interior:
            table = table_for(name, v)
            for p in (0.3, 0.6, 0.9):
                exact = exact_prob(g, p, finite_cluster_event(g, v)).value
                assert exact <= peierls_bound(table, p, v) + 1e-12


def test_peierls_multi_vertex_table_needs_vertex():
    merged = table_for("path5", 1).merged_with(table_for("path5", 2))
    with pytest.raises(PreconditionError):
        peierls_bound(merged, 0.5)
    assert peierls_bound(merged, 0.5, 2) == pytest.approx(1.0)


# ---- boundary censuses ----


def test_boundary_hit_p5():
    p5 = path_graph(5)
    c = verified_cutset(p5, (1, 2), 2)
    assert boundary_hit_probability(p5, 0.5, c).value == pytest.approx(0.25, abs=1e-12)


def test_census_p5_totals():
    p5 = path_graph(5)
    profiles, infinite = boundary_census_exact(p5, 2)
    assert set(profiles) == {(1, 2), (0, 3), (0, 2), (1, 3)}
    for p in (0.3, 0.5, 0.8):
        finite_total = sum(profile_probability(pr, p) for pr in profiles.values())
        assert finite_total + profile_probability(infinite, p) == pytest.approx(
            1.0, abs=1e-12
        )
    assert profile_probability(profiles[(1, 2)], 0.5) == pytest.approx(0.25, abs=1e-12)


def test_census_every_boundary_is_minimal():
    for name in ("path5", "star5", "theta6", "k4_pair", "grid3x3"):
        g = CORPUS[name]
        for v in g.interior:
            profiles, _ = boundary_census_exact(g, v)
            recorded = {c.edge_ids for c in table_for(name, v).all_cutsets()}
            assert set(profiles) <= recorded


def test_census_mc_agrees_with_exact():
    p5 = path_graph(5)
    counts, infinite = boundary_census_mc(p5, 2, 0.5, 20_000, seed=33)
    assert sum(counts.values()) + infinite == 20_000
    assert counts[(1, 2)] / 20_000 == pytest.approx(0.25, abs=0.02)
    assert infinite / 20_000 == pytest.approx(7 / 16, abs=0.02)


# ---- positive association ----


def test_fkg_spot_check_p5():
    p5 = path_graph(5)
    checks = fkg_spot_check(
        p5,
        0.5,
        [((1, HORIZON), (3, HORIZON)), ((2, 0), (2, 4)), ((1, 3), (2, HORIZON))],
    )
    assert len(checks) == 3
    for check in checks:
        assert check.joint >= check.product - 1e-12


# ---- strong percolation experiment ----


def test_strong_percolation_p5():
    report = strong_percolation_experiment(path_graph(5), 0.5, c_fit=0.1)
    assert report.rows
    assert report.all_satisfied
    singleton = next(r for r in report.rows if r.vertices == (2,))
    assert singleton.weight == 2
    assert singleton.psi == 2
    assert singleton.miss_probability == pytest.approx(9 / 16, abs=1e-12)
    assert singleton.minus_log == pytest.approx(math.log(16 / 9), abs=1e-12)


def test_strong_percolation_detects_overfit_constant():
    report = strong_percolation_experiment(path_graph(5), 0.5, c_fit=5.0)
    assert not report.all_satisfied


def test_strong_percolation_needs_horizon():
    from percut.graph_core import cycle_graph

    with pytest.raises(PreconditionError):
        strong_percolation_experiment(cycle_graph(4), 0.5, 0.1)


# ---- properties ----


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 7), st.floats(0.05, 0.95), st.floats(0.0, 0.9))
def test_theta_monotone_in_p(n, p, bump):
    g = path_graph(n)
    v = n // 2
    lo = theta(g, p, v).value
    hi = theta(g, min(1.0, p + bump), v).value
    assert hi >= lo - 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.floats(0.1, 0.9))
def test_star_finite_probability_closed_form(leaves, p):
    g = star_graph(leaves)
    exact = exact_prob(g, p, finite_cluster_event(g, 0)).value
    assert exact == pytest.approx((1 - p) ** leaves, abs=1e-12)
