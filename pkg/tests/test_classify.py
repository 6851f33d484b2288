import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nmdyn import _kernels
from nmdyn.born import solve_cubic
from nmdyn.classify import (
    BOUNDARY,
    DETUNING_BOUND,
    GAMMA_BOUND,
    INCONSISTENT,
    REGION_NAMES,
    _pairwise_to_region,
    axis_values,
    closeness_map,
    compare_direct,
    default_axes,
    discrepancy_report,
    grid_rates,
    poly_F,
    poly_F_sign,
    predicate_region,
    predicate_relations,
    region_map,
    routh_hurwitz_shifted,
    sufficient_conditions,
    triple_point,
)
from nmdyn.model import ReservoirSpec


def test_poly_F_examples():
    assert poly_F(1, 0, 8) == 0
    assert poly_F(4, 0, 4) == -16
    assert poly_F(2, 0, 36) == 214016


@given(st.floats(0.01, 50))
def test_F1_factorises_on_resonance(v):
    assert poly_F(1, 0, v) == pytest.approx(128 * v**2 * (v - 8) ** 2, rel=1e-12, abs=1e-9)


def test_poly_F_rejects_unknown_index():
    with pytest.raises(ValueError):
        poly_F(5, 0, 1)


@given(st.integers(1, 4), st.floats(0, 10), st.floats(0.01, 64))
def test_vectorised_sign_matches_exact(k, u, v):
    assert poly_F_sign(k, np.array([u]), np.array([v]))[0] == np.sign(poly_F(k, u, v))


def test_routh_hurwitz_examples():
    assert routh_hurwitz_shifted(3, 3, 1, -0.5)
    assert not routh_hurwitz_shifted(3, 3, 1, -1.0)
    assert not routh_hurwitz_shifted(3, 3, 1, -1.5)


def test_routh_hurwitz_against_roots():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 10_000:
        a = rng.normal(scale=3, size=3)
        x = rng.normal()
        roots = np.roots([1, *a])
        if np.min(np.abs(roots.real - x)) <= 1e-8:
            continue
        assert routh_hurwitz_shifted(*a, x) == bool(np.all(roots.real < x))
        checked += 1


@pytest.mark.parametrize(
    "dE, gamma, region, rates",
    [
        (0.0, 1.0, "III", (0.5, 0.25, 4.0)),
        (0.0, 6.0, "IV", (3 - math.sqrt(5), 1.0, 2 / 3)),
        (2.0, 1.0, "V", None),
    ],
)
def test_compare_direct_examples(dE, gamma, region, rates):
    c = compare_direct(dE, ReservoirSpec(1.0, gamma))
    assert c.region == region
    if rates is not None:
        np.testing.assert_allclose((c.eta_exact, c.eta_born, c.eta_gksl), rates, rtol=1e-12)


def test_compare_direct_off_resonant_values():
    c = compare_direct(2.0, ReservoirSpec(1.0, 1.0))
    assert c.eta_gksl == pytest.approx(4 / 17, rel=1e-12)
    # independent root finding on l^3 + l^2 + 6.25 l + 1 and l^2 - (2i - 1/2) l + 1
    born = np.min(np.abs(np.roots([1, 1, 6.25, 1]).real))
    exact = -2 * np.max(np.roots([1, 0.5 - 2j, 1]).real)
    assert c.eta_born == pytest.approx(born, rel=1e-12)
    assert c.eta_exact == pytest.approx(exact, rel=1e-12)
    assert c.eta_born == pytest.approx(0.163581, abs=1e-6) and c.eta_exact == pytest.approx(0.143696, abs=1e-6)


@given(st.floats(-3, 3), st.floats(0.05, 8), st.floats(0.1, 10))
def test_ordering_is_scale_free(d, v, s):
    a = compare_direct(d, ReservoirSpec(1.0, v))
    b = compare_direct(s * d, ReservoirSpec(s, s * v))
    if BOUNDARY not in (a.region, b.region):
        assert a.region == b.region
    np.testing.assert_allclose([b.eta_exact, b.eta_born, b.eta_gksl], s * np.array([a.eta_exact, a.eta_born, a.eta_gksl]), rtol=1e-8)


def test_resonant_coherence_crossover():
    root8 = math.sqrt(8)
    c = compare_direct(0.0, ReservoirSpec(1.0, root8))
    assert abs(c.eta0_exact - c.eta0_gksl) < 1e-9 * c.eta0_exact
    for v in np.linspace(0.1, 12, 120):
        if abs(v - root8) < 1e-6:
            continue
        c = compare_direct(0.0, ReservoirSpec(1.0, v))
        assert np.sign(c.eta0_exact - c.eta0_gksl) == np.sign(v - root8)


def test_pairwise_labels():
    assert _pairwise_to_region(1, 1, -1) == "I"
    assert _pairwise_to_region(1, 1, 1) == "II"
    assert _pairwise_to_region(1, -1, -1) == "III"
    assert _pairwise_to_region(-1, 1, 1) == "IV"
    assert _pairwise_to_region(-1, -1, -1) == "V"
    assert _pairwise_to_region(-1, -1, 1) == "VI"
    assert _pairwise_to_region(0, 1, 1) == BOUNDARY
    # exact > born, born > gksl, gksl > exact is cyclic
    assert _pairwise_to_region(1, -1, 1) == INCONSISTENT


def test_predicate_relations_follow_printed_conditions():
    # (0, 1): F2 < 0 gives exact > born; v < 8 gives exact < gksl; F3 < 0 gives born > gksl
    assert predicate_relations(0.0, 1.0) == (1, -1, 1)
    assert predicate_region(0.0, 1.0) == INCONSISTENT


def test_axes():
    np.testing.assert_allclose(axis_values(0, 8, 4, open_left=True), [2, 4, 6, 8])
    np.testing.assert_allclose(axis_values(-1, 1, 3), [-1, 0, 1])
    with pytest.raises(ValueError):
        axis_values(0, 1, 1)
    de, gm = default_axes()
    assert de.size == 121 and gm.size == 200 and gm[0] > 0 and gm[-1] == 8


def test_grid_rates_match_scalar_routines():
    de = np.linspace(-3, 3, 9)
    gm = np.linspace(0.1, 8, 7)
    ex, bo, gk = grid_rates(de, gm)
    for i, d in enumerate(de):
        for j, v in enumerate(gm):
            c = compare_direct(d, ReservoirSpec(1.0, v))
            np.testing.assert_allclose([ex[i, j], bo[i, j], gk[i, j]], [c.eta_exact, c.eta_born, c.eta_gksl], rtol=1e-10)


@given(st.floats(-4, 4), st.floats(1e-3, 20), st.floats(0.1, 5))
def test_kernel_born_rate_matches_cubic_solver(d, v, g):
    from nmdyn.born import char_poly

    res = ReservoirSpec(g, v * g)
    roots = solve_cubic(char_poly(d * g, d * g, res))
    D = np.array([[d * g]])
    _, bo_np, _ = _kernels.population_rates_grid_numpy(D, np.array([[v * g]]), np.array([[g]]))
    _, bo_nb, _ = _kernels._rates_grid_numba_wrapper(D, np.array([[v * g]]), np.array([[g]]))
    ref = np.min(np.abs(roots.real))
    assert bo_np[0, 0] == pytest.approx(ref, rel=1e-9, abs=1e-13)
    assert bo_nb[0, 0] == pytest.approx(ref, rel=1e-9, abs=1e-13)


def test_grid_rates_parallel_is_deterministic():
    de, gm = np.linspace(-3, 3, 31), np.linspace(0.1, 8, 17)
    serial = grid_rates(de, gm, jobs=1)
    threaded = grid_rates(de, gm, jobs=4)
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a, b)


def test_region_map_cells_row_major():
    rmap = region_map(np.array([-1.0, 0.0, 1.0]), np.array([1.0, 6.0]))
    cells = rmap.cells()
    assert [(c.de_over_g, c.gamma_over_g) for c in cells] == [
        (-1.0, 1.0), (-1.0, 6.0), (0.0, 1.0), (0.0, 6.0), (1.0, 1.0), (1.0, 6.0)
    ]
    assert rmap.label_at(0, 1) == "III" and rmap.label_at(0, 6) == "IV"
    assert all(c.agree == (c.direct_order == c.predicate_order) for c in cells)


def test_region_map_rejects_tiny_grid():
    with pytest.raises(ValueError):
        region_map(np.array([0.0]), np.array([1.0, 2.0]))


def test_boundary_cell_labelled():
    # gamma = sqrt(8) g at resonance ties exact and gksl coherence but not populations;
    # populations tie at the triple point instead
    (d, v), _ = triple_point()
    rmap = region_map(np.array([d, d + 0.5]), np.array([v, v + 1]))
    assert rmap.direct[0, 0] == BOUNDARY
    assert rmap.counts()[BOUNDARY] >= 1


def test_discrepancy_report_counts():
    rmap = region_map(np.linspace(-3, 3, 13), np.linspace(0.5, 8, 16))
    rep = discrepancy_report(rmap)
    assert rep["cells"] == 13 * 16
    assert rep["disagree"] == sum(rep["mismatches"].values())
    assert sum(rep["direct_counts"].values()) == rep["cells"]


def test_closeness_properties():
    de, gm = np.linspace(-3, 3, 25), np.linspace(0.1, 8, 30)
    for pair in ("exact-vs-born", "exact-vs-gksl"):
        assert closeness_map(de, gm, 0.15, pair).any()
        assert not closeness_map(de, gm, 0.0, pair).any()
    with pytest.raises(ValueError):
        closeness_map(de, gm, 0.15, "born-vs-gksl")


def test_closeness_holds_on_equality_curve():
    (d, v), _ = triple_point()
    for pair in ("exact-vs-born", "exact-vs-gksl"):
        assert closeness_map(np.array([d, 3.0]), np.array([v, 8.0]), 1e-6, pair)[0, 0]


def test_triple_point():
    (d, v), (d2, v2) = triple_point()
    assert abs(d - 0.55) <= 0.02 and abs(v - 3.55) <= 0.02
    assert d2 == -d and v2 == v
    c = compare_direct(d, ReservoirSpec(1.0, v))
    rates = [c.eta_exact, c.eta_born, c.eta_gksl]
    for a in rates:
        for b in rates:
            assert abs(a - b) <= 1e-8 * max(rates)


def test_triple_point_scales_with_g():
    (d, v), _ = triple_point(g=2.5)
    (d1, v1), _ = triple_point()
    assert d == pytest.approx(d1, rel=1e-8) and v == pytest.approx(v1, rel=1e-8)


def test_bounds():
    assert GAMMA_BOUND == pytest.approx(4.6188, abs=1e-4)
    inner = (-4 + (44 - 3 * math.sqrt(177)) ** (1 / 3) + (44 + 3 * math.sqrt(177)) ** (1 / 3)) / 3
    assert DETUNING_BOUND == pytest.approx(math.sqrt(inner), rel=1e-15)


@pytest.mark.parametrize(
    "dE, gamma, verdict",
    [(0.0, 5.0, "exact < born"), (0.0, 2.0, "exact > born"), (1.0, 4.0, "exact < born")],
)
def test_sufficient_condition_examples(dE, gamma, verdict):
    res = ReservoirSpec(1.0, gamma)
    assert sufficient_conditions(dE, res) == verdict
    c = compare_direct(dE, res)
    assert (c.eta_exact < c.eta_born) == (verdict == "exact < born")


def test_sufficient_conditions_never_contradict_direct():
    de = np.linspace(-3, 3, 121)
    gm = np.linspace(0.02, 8, 200)
    ex, bo, _ = grid_rates(de, gm)
    for i, d in enumerate(de):
        for j, v in enumerate(gm):
            verdict = sufficient_conditions(d, ReservoirSpec(1.0, v))
            if verdict == "exact < born":
                assert ex[i, j] < bo[i, j]
            elif verdict == "exact > born":
                assert ex[i, j] > bo[i, j]


def test_default_map_has_every_region():
    rmap = region_map()
    counts = rmap.counts()
    assert all(counts.get(name, 0) > 0 for name in REGION_NAMES)
