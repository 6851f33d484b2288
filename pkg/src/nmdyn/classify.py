"""Ordering of exact, Born and GKSL population rates over the (dE/g, gamma/g) plane.

Two independent labelings are produced per cell.  The direct one compares
the numerically computed rates and is authoritative.  The predicate one
evaluates the closed-form sign conditions (polynomials F1..F4 in
u = dE^2/g^2, v = gamma^2/g^2) exactly as printed; it is cross-tabulated
against the direct labels rather than trusted.

Region key (population rates, strict):

    I    exact > gksl  > born
    II   exact > born  > gksl
    III  gksl  > exact > born
    IV   born  > exact > gksl
    V    gksl  > born  > exact
    VI   born  > gksl  > exact
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .born import born_rates, char_poly, solve_cubic
from .exact import block_eigenvalues, exact_rates
from .model import GlobalBasis, ReservoirSpec
from .redfield import gksl_rates

TIE_RTOL = 1e-9
BOUNDARY = "boundary"
INCONSISTENT = "inconsistent"

REGIONS = {
    ("exact", "gksl", "born"): "I",
    ("exact", "born", "gksl"): "II",
    ("gksl", "exact", "born"): "III",
    ("born", "exact", "gksl"): "IV",
    ("gksl", "born", "exact"): "V",
    ("born", "gksl", "exact"): "VI",
}
REGION_NAMES = ("I", "II", "III", "IV", "V", "VI")

# value of the nested radical bounding |dE|/g in the sufficient condition
DETUNING_BOUND = math.sqrt(
    (-4.0 + (44.0 - 3.0 * math.sqrt(177.0)) ** (1.0 / 3.0) + (44.0 + 3.0 * math.sqrt(177.0)) ** (1.0 / 3.0)) / 3.0
)
GAMMA_BOUND = math.sqrt(64.0 / 3.0)


class ConvergenceError(ArithmeticError):
    """Raised by the triple-point solver when Newton iteration stalls."""


# --- the printed polynomials ------------------------------------------------------

# (coefficient, power of u, power of v)
_F_TERMS = {
    1: (
        (-24576, 3, 1), (-10240, 2, 2), (32768, 2, 1), (-512, 1, 3),
        (128, 0, 4), (-2048, 0, 3), (8192, 0, 2),
    ),
    2: (
        (2304, 5, 0), (6400, 4, 1), (30720, 4, 0), (2912, 3, 2), (40448, 3, 1),
        (143104, 3, 0), (400, 2, 3), (-10112, 2, 2), (35264, 2, 1), (256000, 2, 0),
        (9, 1, 4), (-480, 1, 3), (9232, 1, 2), (-67584, 1, 1), (64512, 1, 0),
        (36, 0, 3), (-1920, 0, 2), (33984, 0, 1), (-200704, 0, 0),
    ),
    3: (
        (256, 4, 0), (256, 3, 1), (-256, 3, 0), (96, 2, 2), (-704, 2, 1),
        (-1024, 2, 0), (16, 1, 3), (-304, 1, 2), (1536, 1, 1), (1, 0, 4),
        (-36, 0, 3), (448, 0, 2), (-2048, 0, 1),
    ),
    4: ((-16, 2, 0), (-8, 0, 1), (1, 0, 2)),
}


def poly_F(k: int, u: float, v: float) -> float:
    """F_k(u, v) evaluated in exact rational arithmetic, rounded once."""
    if k not in _F_TERMS:
        raise ValueError(f"k must be one of 1, 2, 3, 4; got {k!r}")
    fu, fv = Fraction(u), Fraction(v)
    return float(sum(c * fu**pu * fv**pv for c, pu, pv in _F_TERMS[k]))


def poly_F_sign(k: int, u, v) -> np.ndarray:
    """Sign of F_k on arrays; cells where float round-off could flip it are redone exactly."""
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    total = np.zeros(u.shape)
    size = np.zeros(u.shape)
    for c, pu, pv in _F_TERMS[k]:
        term = c * u**pu * v**pv
        total += term
        size += np.abs(term)
    sign = np.sign(total)
    doubtful = np.abs(total) <= 1e-12 * size
    for idx in zip(*np.nonzero(doubtful)):
        sign[idx] = np.sign(poly_F(k, float(u[idx]), float(v[idx])))
    return sign


def routh_hurwitz_shifted(a1: float, a2: float, a3: float, x: float) -> bool:
    """True iff every root of l^3 + a1 l^2 + a2 l + a3 has Re l < x."""
    b1 = a1 + 3 * x
    b2 = a2 + 2 * a1 * x + 3 * x * x
    b3 = a3 + a2 * x + a1 * x * x + x**3
    return b1 > 0 and b1 * b2 > b3 and b3 > 0


# --- direct comparison ------------------------------------------------------------


def _strict_order(rates: dict, tol: float = TIE_RTOL) -> Optional[tuple]:
    names = sorted(rates, key=lambda k: -rates[k])
    scale = max(abs(x) for x in rates.values())
    for a, b in zip(names, names[1:]):
        if rates[a] - rates[b] <= tol * scale:
            return None
    return tuple(names)


def region_of(order: Optional[tuple]) -> str:
    return BOUNDARY if order is None else REGIONS[order]


@dataclass(frozen=True)
class Comparison:
    eta_exact: float
    eta_born: float
    eta_gksl: float
    eta0_exact: float
    eta0_gksl: float
    population_order: Optional[tuple]
    coherence_order: Optional[tuple]

    @property
    def region(self) -> str:
        return region_of(self.population_order)


def _single_level(dE: float, reservoir: ReservoirSpec) -> GlobalBasis:
    e = np.array([dE + reservoir.eps])
    return GlobalBasis(e, np.eye(1, dtype=complex), np.array([float(dE)]))


def compare_direct(dE: float, reservoir: ReservoirSpec) -> Comparison:
    """Rank the three population rates (and the two excited-ground rates) at one detuning."""
    basis = _single_level(dE, reservoir)
    ex = exact_rates(basis, reservoir)
    bo = born_rates(basis, reservoir)
    gk = gksl_rates(basis, reservoir)
    pop = {"exact": ex.eta_alpha[0], "born": bo.eta_alpha[0], "gksl": gk.eta_alpha[0]}
    coh = {"exact": ex.eta_alpha0[0], "gksl": gk.eta_alpha0[0]}
    return Comparison(
        eta_exact=float(pop["exact"]),
        eta_born=float(pop["born"]),
        eta_gksl=float(pop["gksl"]),
        eta0_exact=float(coh["exact"]),
        eta0_gksl=float(coh["gksl"]),
        population_order=_strict_order(pop),
        coherence_order=_strict_order(coh),
    )


# --- printed predicates -----------------------------------------------------------


def _pairwise_to_region(ex_vs_b, ex_vs_gk, b_vs_gk) -> str:
    """Each argument is -1 (first < second), 0 (tie) or +1 (first > second)."""
    if 0 in (ex_vs_b, ex_vs_gk, b_vs_gk):
        return BOUNDARY
    wins = {"exact": 0, "born": 0, "gksl": 0}
    wins["exact" if ex_vs_b > 0 else "born"] += 1
    wins["exact" if ex_vs_gk > 0 else "gksl"] += 1
    wins["born" if b_vs_gk > 0 else "gksl"] += 1
    order = tuple(sorted(wins, key=lambda k: -wins[k]))
    if sorted(wins.values()) != [0, 1, 2]:
        return INCONSISTENT
    return REGIONS[order]


def predicate_relations(u: float, v: float) -> tuple[int, int, int]:
    """Signs of (exact - born, exact - gksl, born - gksl) from the F1..F4 conditions."""
    f1 = np.sign(poly_F(1, u, v))
    f2 = np.sign(poly_F(2, u, v))
    f3 = np.sign(poly_F(3, u, v))
    f4 = np.sign(poly_F(4, u, v))
    ex_b = -int(f2)
    if f1 > 0 or v < 8:
        ex_gk = -1
    elif f1 < 0 and v > 8:
        ex_gk = 1
    else:
        ex_gk = 0
    if f3 > 0 and f4 > 0:
        b_gk = -1
    elif f3 < 0 or f4 < 0:
        b_gk = 1
    else:
        b_gk = 0
    return ex_b, ex_gk, b_gk


def predicate_region(u: float, v: float) -> str:
    return _pairwise_to_region(*predicate_relations(u, v))


# --- grids --------------------------------------------------------------------------


def axis_values(lo: float, hi: float, count: int, open_left: bool = False) -> np.ndarray:
    """Closed axis [lo, hi] with ``count`` points, or half-open (lo, hi]."""
    if count < 2:
        raise ValueError("an axis needs at least 2 points")
    if open_left:
        return lo + (hi - lo) * np.arange(1, count + 1) / count
    return np.linspace(lo, hi, count)


DEFAULT_SHAPE = (121, 200)
DEFAULT_DE_RANGE = (-3.0, 3.0)
DEFAULT_GAMMA_RANGE = (0.0, 8.0)


def default_axes(shape=DEFAULT_SHAPE, de_range=DEFAULT_DE_RANGE, gamma_range=DEFAULT_GAMMA_RANGE):
    return (
        axis_values(de_range[0], de_range[1], shape[0]),
        axis_values(gamma_range[0], gamma_range[1], shape[1], open_left=True),
    )


def grid_rates(de_over_g, gamma_over_g, g: float = 1.0, jobs: int = 1):
    """(exact, born, gksl) population rates on the outer-product grid, each shape (len(de), len(gamma))."""
    de = np.asarray(de_over_g, float) * g
    gm = np.asarray(gamma_over_g, float) * g
    D, Gm = np.meshgrid(de, gm, indexing="ij")
    gg = np.full_like(D, float(g))
    if jobs <= 1 or D.shape[0] < 2:
        return _kernels.population_rates_grid(D, Gm, gg)
    chunks = np.array_split(np.arange(D.shape[0]), min(jobs, D.shape[0]))
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(lambda rows: _kernels.population_rates_grid(D[rows], Gm[rows], gg[rows]), chunks))
    return tuple(np.concatenate([p[k] for p in parts], axis=0) for k in range(3))


def _label_grid(ex, bo, gk, tol=TIE_RTOL) -> np.ndarray:
    stack = np.stack([ex, bo, gk], axis=-1)
    names = ("exact", "born", "gksl")
    order = np.argsort(-stack, axis=-1, kind="stable")
    srt = np.take_along_axis(stack, order, axis=-1)
    scale = np.abs(stack).max(axis=-1)
    tie = ((srt[..., 0] - srt[..., 1]) <= tol * scale) | ((srt[..., 1] - srt[..., 2]) <= tol * scale)
    labels = np.empty(ex.shape, dtype=object)
    for idx in np.ndindex(ex.shape):
        if tie[idx]:
            labels[idx] = BOUNDARY
        else:
            labels[idx] = REGIONS[tuple(names[k] for k in order[idx])]
    return labels


@dataclass(frozen=True)
class RegionCell:
    de_over_g: float
    gamma_over_g: float
    eta_exact: float
    eta_born: float
    eta_gksl: float
    direct_order: str
    predicate_order: str

    @property
    def agree(self) -> bool:
        return self.direct_order == self.predicate_order


@dataclass(frozen=True)
class RegionMap:
    de_over_g: np.ndarray
    gamma_over_g: np.ndarray
    eta_exact: np.ndarray
    eta_born: np.ndarray
    eta_gksl: np.ndarray
    direct: np.ndarray
    predicate: np.ndarray

    @property
    def shape(self):
        return self.direct.shape

    def cells(self) -> list[RegionCell]:
        """Row-major list of cells (detuning outer, width inner)."""
        out = []
        for i, d in enumerate(self.de_over_g):
            for j, v in enumerate(self.gamma_over_g):
                out.append(
                    RegionCell(
                        float(d), float(v),
                        float(self.eta_exact[i, j]), float(self.eta_born[i, j]), float(self.eta_gksl[i, j]),
                        self.direct[i, j], self.predicate[i, j],
                    )
                )
        return out

    def label_at(self, de_over_g: float, gamma_over_g: float) -> str:
        i = int(np.argmin(np.abs(self.de_over_g - de_over_g)))
        j = int(np.argmin(np.abs(self.gamma_over_g - gamma_over_g)))
        return self.direct[i, j]

    def counts(self, which: str = "direct") -> dict:
        labels = self.direct if which == "direct" else self.predicate
        values, counts = np.unique(labels.astype(str), return_counts=True)
        return dict(zip(values.tolist(), counts.tolist()))


def region_map(
    de_over_g: Sequence[float] = None,
    gamma_over_g: Sequence[float] = None,
    g: float = 1.0,
    jobs: int = 1,
) -> RegionMap:
    if de_over_g is None or gamma_over_g is None:
        d0, g0 = default_axes()
        de_over_g = d0 if de_over_g is None else de_over_g
        gamma_over_g = g0 if gamma_over_g is None else gamma_over_g
    de = np.asarray(de_over_g, float)
    gm = np.asarray(gamma_over_g, float)
    if de.size < 2 or gm.size < 2:
        raise ValueError("resolution must be at least 2 per axis")
    ex, bo, gk = grid_rates(de, gm, g=g, jobs=jobs)
    direct = _label_grid(ex, bo, gk)
    predicate = np.empty(direct.shape, dtype=object)
    U = (de**2)[:, None] * np.ones_like(gm)[None, :]
    V = np.ones_like(de)[:, None] * (gm**2)[None, :]
    s1, s2, s3, s4 = (poly_F_sign(k, U, V) for k in (1, 2, 3, 4))
    for idx in np.ndindex(direct.shape):
        v = V[idx]
        ex_gk = -1 if (s1[idx] > 0 or v < 8) else (1 if (s1[idx] < 0 and v > 8) else 0)
        b_gk = -1 if (s3[idx] > 0 and s4[idx] > 0) else (1 if (s3[idx] < 0 or s4[idx] < 0) else 0)
        predicate[idx] = _pairwise_to_region(-int(s2[idx]), ex_gk, b_gk)
    return RegionMap(de, gm, ex, bo, gk, direct, predicate)


def discrepancy_report(rmap: RegionMap) -> dict:
    """Cross-tabulation of predicate labels against direct labels."""
    direct = rmap.direct.astype(str)
    pred = rmap.predicate.astype(str)
    disagree = direct != pred
    table = {}
    for d, p in zip(direct[disagree], pred[disagree]):
        key = f"{d}->{p}"
        table[key] = table.get(key, 0) + 1
    return {
        "cells": int(direct.size),
        "disagree": int(disagree.sum()),
        "boundary_cells": int((direct == BOUNDARY).sum()),
        "direct_counts": rmap.counts("direct"),
        "predicate_counts": rmap.counts("predicate"),
        "mismatches": dict(sorted(table.items())),
    }


def closeness_map(
    de_over_g=None,
    gamma_over_g=None,
    tolerance: float = 0.15,
    pair: str = "exact-vs-born",
    g: float = 1.0,
    jobs: int = 1,
) -> np.ndarray:
    """Cells where |eta_exact - eta_other| < tolerance * eta_exact."""
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    if pair not in ("exact-vs-born", "exact-vs-gksl"):
        raise ValueError(f"unknown pair {pair!r}")
    if de_over_g is None or gamma_over_g is None:
        d0, g0 = default_axes()
        de_over_g = d0 if de_over_g is None else de_over_g
        gamma_over_g = g0 if gamma_over_g is None else gamma_over_g
    ex, bo, gk = grid_rates(de_over_g, gamma_over_g, g=g, jobs=jobs)
    other = bo if pair == "exact-vs-born" else gk
    return np.abs(ex - other) < tolerance * ex


# --- triple point ---------------------------------------------------------------------


def _population_rates(d: float, v: float, g: float = 1.0):
    """(exact, born, gksl) at dE = d g, gamma = v g, through the scalar routines."""
    res = ReservoirSpec(g, v * g, 0.0)
    lam_plus, _ = block_eigenvalues(d * g, res)
    roots = solve_cubic(char_poly(d * g, d * g, res))
    born = float(np.min(np.abs(roots.real)))
    gksl = v * g * g**2 / ((0.5 * v * g) ** 2 + (d * g) ** 2)
    return -2.0 * lam_plus.real, born, gksl


def triple_point(g: float = 1.0, seed=(0.55, 3.55), tol: float = 1e-13, max_iter: int = 60):
    """Both points where exact, Born and GKSL population rates coincide.

    Returns ``((dE/g, gamma/g), (-dE/g, gamma/g))`` with the positive detuning
    first.  Damped Newton on (exact - born, exact - gksl) with a forward
    difference Jacobian.
    """

    def resid(x):
        ex, bo, gk = _population_rates(x[0], x[1], g)
        return np.array([ex - bo, ex - gk]) / ex

    x = np.array(seed, dtype=float)
    r = resid(x)
    h = 1e-6
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        jac = np.empty((2, 2))
        for k in range(2):
            xp = x.copy()
            xp[k] += h
            jac[:, k] = (resid(xp) - r) / h
        step = np.linalg.solve(jac, -r)
        lam = 1.0
        while lam > 1e-4:
            trial = x + lam * step
            if trial[1] > 0:
                rt = resid(trial)
                if np.max(np.abs(rt)) < np.max(np.abs(r)):
                    break
            lam *= 0.5
        else:
            raise ConvergenceError(f"line search failed near {x.tolist()} (residual {r.tolist()})")
        x, r = trial, rt
    else:
        raise ConvergenceError(f"no convergence after {max_iter} steps; last iterate {x.tolist()}")
    d, v = abs(float(x[0])), float(x[1])
    return (d, v), (-d, v)


# --- simple sufficient conditions -----------------------------------------------------


def sufficient_conditions(dE: float, reservoir: ReservoirSpec) -> str:
    """Quick verdict on exact vs Born population rates, or 'inconclusive'."""
    g, gamma = reservoir.g, reservoir.gamma
    if gamma > GAMMA_BOUND * g or abs(dE) > DETUNING_BOUND * g:
        return "exact < born"
    rad = 2 * g * g - 4 * dE * dE
    if rad >= 0 and gamma <= 3 * math.sqrt(rad):
        return "exact > born"
    return "inconclusive"
