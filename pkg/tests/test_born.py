import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian, random_state
from nmdyn.born import (
    BornWarning,
    CubicCoefficients,
    block_matrix,
    block_propagator,
    born_rates,
    born_sigma,
    char_poly,
    companion_roots,
    evolve_born,
    match_roots,
    solve_cubic,
)
from nmdyn.exact import evolve_exact, exact_amplitudes, exact_rates
from nmdyn.model import GlobalBasis, InitialState, ReservoirSpec, SystemSpec, diagonalize

det = st.floats(-10, 10, allow_nan=False)
pos = st.floats(0.01, 10, allow_nan=False)


def one_level(dE):
    return GlobalBasis(np.array([dE]), np.eye(1, dtype=complex), np.array([dE]))


def coeffs(c):
    return [complex(c.a1), complex(c.a2), complex(c.a3)]


def test_char_poly_examples():
    assert coeffs(char_poly(0, 0, ReservoirSpec(1, 2))) == [2, 3, 2]
    assert coeffs(char_poly(0, 0, ReservoirSpec(1, 6))) == [6, 11, 6]
    assert char_poly(0.4, -1.0, ReservoirSpec(0, 2)).a3 == 0


@given(dEa=det, dEb=det, g=st.floats(0, 5), gamma=pos)
def test_char_poly_is_characteristic_polynomial_of_block(dEa, dEb, g, gamma):
    res = ReservoirSpec(g, gamma)
    p = np.poly(block_matrix(dEa, dEb, res))
    c = char_poly(dEa, dEb, res)
    scale = 1 + gamma**3 + g**3 + abs(dEa) ** 3 + abs(dEb) ** 3
    np.testing.assert_allclose(p[1:], coeffs(c), atol=1e-12 * scale)


@given(dE=det, g=pos, gamma=pos)
def test_diagonal_cubic_is_real_and_positive(dE, g, gamma):
    c = char_poly(dE, dE, ReservoirSpec(g, gamma))
    assert c.is_real()
    a1, a2, a3 = (complex(x).real for x in coeffs(c))
    assert a1 == pytest.approx(gamma) and a2 == pytest.approx(gamma**2 / 4 + 2 * g**2 + dE**2)
    assert a3 == pytest.approx(g**2 * gamma)
    assert a1 > 0 and a2 > 0 and a3 > 0 and a1 * a2 > a3


@given(dEa=det, dEb=det, g=pos, gamma=pos)
def test_swapped_pair_has_conjugate_roots(dEa, dEb, g, gamma):
    res = ReservoirSpec(g, gamma)
    r_ab = solve_cubic(char_poly(dEa, dEb, res))
    r_ba = solve_cubic(char_poly(dEb, dEa, res))
    assert match_roots(r_ab, np.conj(r_ba)) <= 1e-9 * (1 + np.abs(r_ab).max())


def test_solve_cubic_examples():
    r = solve_cubic(CubicCoefficients(6, 11, 6))
    np.testing.assert_allclose(r, [-3, -2, -1], atol=1e-12)
    r = solve_cubic(CubicCoefficients(2, 3, 2))
    expected = [-1, complex(-0.5, -math.sqrt(7) / 2), complex(-0.5, math.sqrt(7) / 2)]
    assert match_roots(r, expected) < 1e-12
    np.testing.assert_array_equal(solve_cubic(CubicCoefficients(0, 0, 0)), [0, 0, 0])


def test_solve_cubic_sorted_by_real_part():
    r = solve_cubic(CubicCoefficients(6, 11, 6))
    assert list(r.real) == sorted(r.real)


@given(
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=3, max_size=3)
)
def test_solve_cubic_residual_and_companion(a):
    c = CubicCoefficients(*a)
    r = solve_cubic(c)
    assert np.all(np.abs(c(r)) <= 1e-9 * (1 + np.abs(r)) ** 3)


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_polynomial_with_known_roots(rs):
    r = np.array(rs, dtype=complex)
    p = np.poly(r)
    got = solve_cubic(CubicCoefficients(*p[1:]))
    sep = min(abs(r[i] - r[j]) for i in range(3) for j in range(i + 1, 3))
    # near a triple root the roots are only determined to about eps^(1/3)
    tol = max(1.0, np.abs(r).max()) * (1e-9 + 1e-4 * (sep < 1e-3))
    assert match_roots(got, r) <= tol


def test_born_rates_examples():
    assert born_rates(one_level(0.0), ReservoirSpec(1, 2)).eta_alpha[0] == pytest.approx(0.5, rel=1e-12)
    assert born_rates(one_level(0.0), ReservoirSpec(1, 6)).eta_alpha[0] == pytest.approx(1.0, rel=1e-12)
    assert born_rates(one_level(0.3), ReservoirSpec(0, 6)).eta_alpha[0] == 0


@given(seed=st.integers(0, 2**31), n=st.integers(1, 4))
def test_born_rate_table(seed, n):
    rng = np.random.default_rng(seed)
    spec = SystemSpec(random_hermitian(rng, n))
    res = ReservoirSpec(rng.uniform(0.1, 3), rng.uniform(0.1, 5), rng.normal())
    b = diagonalize(spec, res)
    with warnings.catch_warnings():
        warnings.simplefilter("error", BornWarning)
        r = born_rates(b, res)
    np.testing.assert_array_equal(r.eta_alphabeta, r.eta_alphabeta.T)
    np.testing.assert_array_equal(np.diag(r.eta_alphabeta), r.eta_alpha)
    np.testing.assert_array_equal(r.eta_alpha0, exact_rates(b, res).eta_alpha0)
    assert np.all(r.eta_alphabeta >= 0)


@given(dE=det, g=pos, gamma=pos)
def test_diagonal_roots_are_stable(dE, g, gamma):
    r = solve_cubic(char_poly(dE, dE, ReservoirSpec(g, gamma)))
    assert np.all(r.real < 0)


def test_block_propagator_first_component_starts_at_one():
    P = block_propagator(0.3, -0.2, ReservoirSpec(1, 1), [0.0, 1.0])
    np.testing.assert_allclose(P[0], [1, 0, 0], atol=1e-14)


def test_block_propagator_degenerate_falls_back_with_warning():
    # gamma = 4 g at resonance gives a repeated eigenvalue of the 3x3 block? use g = 0 instead:
    # then both auxiliary eigenvalues equal -gamma/2 when the detunings vanish
    with pytest.warns(BornWarning):
        P = block_propagator(0.0, 0.0, ReservoirSpec(0.0, 2.0), [0.0, 1.0, 2.0])
    np.testing.assert_allclose(P[:, 0], [1, 1, 1], atol=1e-14)


def test_initial_projector_and_hermiticity(rng):
    spec = SystemSpec(random_hermitian(rng, 3))
    res = ReservoirSpec(0.8, 1.2, 0.1)
    b = diagonalize(spec, res)
    s = random_state(rng, 3)
    times = np.linspace(0, 6, 13)
    states = evolve_born(s, b, res, times)
    full = np.concatenate([[s.psi0], b.to_global(s.psi)])
    np.testing.assert_allclose(states[0].matrix, np.outer(full, full.conj()), atol=1e-14)
    for st_ in states:
        np.testing.assert_allclose(st_.matrix, st_.matrix.conj().T, atol=1e-14)
        assert abs(np.trace(st_.matrix) - 1) < 1e-12


def test_psi_block_identical_to_exact(rng):
    spec = SystemSpec(random_hermitian(rng, 2))
    res = ReservoirSpec(1.0, 0.7, -0.3)
    b = diagonalize(spec, res)
    s = random_state(rng, 2)
    times = np.linspace(0, 5, 11)
    for e, bo in zip(evolve_exact(s, b, res, times), evolve_born(s, b, res, times)):
        np.testing.assert_allclose(bo.coherences, e.coherences, atol=1e-12)


def test_long_time_limit():
    res = ReservoirSpec(1.0, 2.0)
    b = one_level(0.5)
    eta = born_rates(b, res).eta_alpha[0]
    s = InitialState(0.6, np.array([0.8]))
    st_ = evolve_born(s, b, res, [80.0 / eta])[0]
    assert abs(st_.sigma[0, 0]) < 1e-5
    assert st_.rho00 == pytest.approx(1.0, abs=1e-5)


def test_sigma_matches_companion_route(rng):
    # the 3x3 eigen-route against the same block exponentiated by scipy
    from scipy.linalg import expm

    spec = SystemSpec(random_hermitian(rng, 2))
    res = ReservoirSpec(0.9, 1.1, 0.0)
    b = diagonalize(spec, res)
    s = random_state(rng, 2)
    t = 1.7
    sig = born_sigma(s, b, res, [t])[0]
    psi = b.to_global(s.psi)
    dE = b.detunings
    for a in range(2):
        for c in range(2):
            v = expm(block_matrix(dE[a], dE[c], res) * t)[:, 0] * psi[a] * np.conj(psi[c])
            assert sig[a, c] == pytest.approx(v[0], abs=1e-12)


def test_companion_roots_agree_with_numpy():
    c = CubicCoefficients(1 + 2j, -0.5, 3j)
    assert match_roots(companion_roots(c), np.roots([1, c.a1, c.a2, c.a3])) < 1e-12


def test_born_population_decays_slower_than_gksl_at_resonance():
    # a consistency check on the ordering at (0, 1): gksl > exact > born
    from nmdyn.redfield import gksl_rates

    b = one_level(0.0)
    res = ReservoirSpec(1.0, 1.0)
    assert gksl_rates(b, res).eta_alpha[0] > exact_rates(b, res).eta_alpha[0] > born_rates(b, res).eta_alpha[0]
