"""Nakajima-Zwanzig equation in the Born approximation.

The excited block sigma_ab = <a|sigma|b> is carried together with two
auxiliary amplitudes (X_ab, -conj(X_ba)) by a constant 3x3 linear system per
ordered pair (a, b).  Its characteristic polynomial is the cubic
f_ab(l) = l^3 + a1 l^2 + a2 l + a3 whose slowest root sets the Born rates.
The ground-excited coherences obey the same equation as in the exact
treatment, so they are propagated by :func:`nmdyn.exact.exact_amplitudes`.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .exact import (
    RateTable,
    ReducedState,
    _check_grid,
    assemble_state,
    exact_amplitudes,
    exact_rates,
)
from .model import GlobalBasis, InitialState, ReservoirSpec

DEGENERATE_RTOL = 1e-9
POSITIVE_ROOT_TOL = 1e-10


class BornWarning(RuntimeWarning):
    """Diagnostic for degenerate blocks or unstable cubic roots."""


@dataclass(frozen=True)
class CubicCoefficients:
    """Monic cubic l^3 + a1 l^2 + a2 l + a3."""

    a1: complex
    a2: complex
    a3: complex

    def __call__(self, lam):
        return ((lam + self.a1) * lam + self.a2) * lam + self.a3

    def derivative(self, lam):
        return (3 * lam + 2 * self.a1) * lam + self.a2

    def is_real(self, tol=0.0) -> bool:
        return all(abs(complex(a).imag) <= tol for a in (self.a1, self.a2, self.a3))


def block_matrix(dEa: float, dEb: float, reservoir: ReservoirSpec) -> np.ndarray:
    """Generator acting on (sigma_ab, X_ab, -conj(X_ba))."""
    g, hg = reservoir.g, 0.5 * reservoir.gamma
    return np.array(
        [
            [0.0, -1j * g, -1j * g],
            [-1j * g, -hg + 1j * dEa, 0.0],
            [-1j * g, 0.0, -hg - 1j * dEb],
        ],
        dtype=complex,
    )


def char_poly(dEa: float, dEb: float, reservoir: ReservoirSpec) -> CubicCoefficients:
    g2, gamma = reservoir.g**2, reservoir.gamma
    skew = 1j * (dEb - dEa)
    return CubicCoefficients(
        a1=gamma + skew,
        a2=0.25 * gamma**2 + 0.5 * gamma * skew + 2 * g2 + dEa * dEb,
        a3=g2 * (gamma + skew),
    )


# --- cubic roots ----------------------------------------------------------------


def _cardano(a1, a2, a3):
    """Roots of a monic cubic with complex coefficients via the depressed form."""
    p = a2 - a1 * a1 / 3
    q = 2 * a1**3 / 27 - a1 * a2 / 3 + a3
    shift = a1 / 3
    if p == 0:
        base = [(-q) ** (1 / 3) if q != 0 else 0j]
        w = cmath.exp(2j * math.pi / 3)
        return [base[0] * w**k - shift for k in range(3)]
    disc = cmath.sqrt((q / 2) ** 2 + (p / 3) ** 3)
    # pick the sign that avoids cancellation
    s = -q / 2 + disc if abs(-q / 2 + disc) >= abs(-q / 2 - disc) else -q / 2 - disc
    u = s ** (1 / 3)
    w = cmath.exp(2j * math.pi / 3)
    roots = []
    for k in range(3):
        uk = u * w**k
        roots.append(uk - p / (3 * uk) - shift)
    return roots


def _polish(c: CubicCoefficients, lam: complex, sweeps: int = 3) -> complex:
    f = c(lam)
    for _ in range(sweeps):
        d = c.derivative(lam)
        if d == 0 or f == 0:
            break
        trial = lam - f / d
        f_trial = c(trial)
        # near a multiple root f' vanishes and a full step can overshoot badly
        if abs(f_trial) >= abs(f):
            break
        lam, f = trial, f_trial
    return lam


def companion_roots(c: CubicCoefficients) -> np.ndarray:
    """Eigenvalues of the companion matrix of ``c``."""
    comp = np.array(
        [[-c.a1, -c.a2, -c.a3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        dtype=complex,
    )
    return np.linalg.eigvals(comp)


def match_roots(x, y) -> float:
    """Largest distance between two root triples under the best pairing."""
    from itertools import permutations

    x = np.asarray(x)
    y = np.asarray(y)
    return min(max(abs(x[i] - y[j]) for i, j in zip(range(3), perm)) for perm in permutations(range(3)))


def solve_cubic(c: CubicCoefficients) -> np.ndarray:
    """Three complex roots of the monic cubic ``c``, sorted by real part.

    Closed form (Cardano) followed by Newton polishing.  Each root must leave
    a residual |f(l)| <= 1e-9 (1 + |l|)^3.
    """
    a1, a2, a3 = complex(c.a1), complex(c.a2), complex(c.a3)
    if a3 == 0:
        # l = 0 is exact; the rest is a quadratic
        disc = cmath.sqrt(a1 * a1 - 4 * a2)
        q = -0.5 * (a1 + disc) if (a1.conjugate() * disc).real >= 0 else -0.5 * (a1 - disc)
        rest = [q, a2 / q] if q != 0 else [0j, -a1]
        roots = [0j] + rest
    else:
        roots = [_polish(c, r) for r in _cardano(a1, a2, a3)]
    roots = np.array(roots, dtype=complex)
    resid = np.abs(c(roots))
    bound = 1e-9 * (1.0 + np.abs(roots)) ** 3
    if np.any(resid > bound):
        raise ArithmeticError(f"cubic roots fail the residual check: {resid} > {bound}")
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


# --- rates ----------------------------------------------------------------------


def _min_abs_re(roots, label) -> float:
    if np.any(roots.real > POSITIVE_ROOT_TOL):
        warnings.warn(f"{label}: root with positive real part {roots}", BornWarning, stacklevel=3)
    return float(np.min(np.abs(roots.real)))


def born_rates(basis: GlobalBasis, reservoir: ReservoirSpec) -> RateTable:
    """Born rates: eta_ab = min |Re l| over roots of f_ab.

    The excited-ground rate is the exact one, since the ground-excited
    coherences follow the same equation in both treatments.
    """
    dE = basis.detunings
    n = basis.n
    eta_ab = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            roots = solve_cubic(char_poly(dE[a], dE[b], reservoir))
            eta_ab[a, b] = eta_ab[b, a] = _min_abs_re(roots, f"f_{a}{b}")
    return RateTable(
        method="born",
        eta_alpha=np.diag(eta_ab).copy(),
        eta_alpha0=exact_rates(basis, reservoir).eta_alpha0.copy(),
        eta_alphabeta=eta_ab,
    )


# --- evolution ------------------------------------------------------------------


def block_propagator(dEa: float, dEb: float, reservoir: ReservoirSpec, times) -> np.ndarray:
    """First column of exp(M_ab t), shape (len(times), 3).

    Eigendecomposition of the 3x3 block; if two eigenvalues are closer than
    1e-9 of the spectral scale the Pade exponential is used instead.
    """
    t = np.asarray(times, dtype=float)
    M = block_matrix(dEa, dEb, reservoir)
    lam, V = np.linalg.eig(M)
    scale = max(np.abs(lam).max(), 1e-300)
    gaps = [abs(lam[i] - lam[j]) for i in range(3) for j in range(i + 1, 3)]
    if min(gaps) < DEGENERATE_RTOL * scale:
        warnings.warn(
            f"near-degenerate Born block (dEa={dEa}, dEb={dEb}); using Pade exponential",
            BornWarning,
            stacklevel=2,
        )
        return np.array([expm(M * tk)[:, 0] for tk in t])
    coeff = np.linalg.solve(V, np.array([1.0, 0.0, 0.0], dtype=complex))
    return (np.exp(np.outer(t, lam)) * coeff) @ V.T


def born_sigma(state: InitialState, basis: GlobalBasis, reservoir: ReservoirSpec, times) -> np.ndarray:
    """Excited block sigma(t) in the global basis, shape (T, N, N)."""
    t = _check_grid(times)
    psi = basis.to_global(state.psi)
    dE = basis.detunings
    n = basis.n
    sigma = np.empty((t.size, n, n), dtype=complex)
    for a in range(n):
        for b in range(a, n):
            s0 = psi[a] * np.conj(psi[b])
            col = block_propagator(dE[a], dE[b], reservoir, t)[:, 0] * s0
            sigma[:, a, b] = col
            if b != a:
                sigma[:, b, a] = col.conj()
            else:
                sigma[:, a, a] = col.real
    return sigma


def evolve_born(state: InitialState, basis: GlobalBasis, reservoir: ReservoirSpec, times) -> list[ReducedState]:
    """Born rho_SI(t) in the global basis.  Hermitian, unit trace, not necessarily positive."""
    t = _check_grid(times)
    psi = exact_amplitudes(state, basis, reservoir, t)
    sigma = born_sigma(state, basis, reservoir, t)
    return [assemble_state(state.psi0, p, s, tk) for tk, p, s in zip(t, psi, sigma)]
