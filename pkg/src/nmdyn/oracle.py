"""Brute-force references that do not use the pseudomode construction.

* A discretized Friedrichs model: every excited level couples to its own
  bath of K modes sampled uniformly on [eps - W, eps + W] with
  |g_k|^2 = J(w_k) dw / (2 pi).  The one-excitation Schroedinger equation is
  stepped with an exactly unitary 4th-order splitting.
* Trapezoid-rule quadrature of the memory-kernel equations for the
  excited amplitudes and for the Born excited block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import GlobalBasis, InitialState, ReservoirSpec, SystemSpec, correlation, spectral_density

MAX_BATH_SIZE = 1_000_000
DEFAULT_MODES = 2000
DEFAULT_HALF_WIDTH = 40.0  # in units of gamma


class BudgetError(ValueError):
    """Requested oracle run exceeds the desk-scale budget."""


@dataclass(frozen=True)
class DiscretizedReservoir:
    modes: np.ndarray
    couplings: np.ndarray
    half_width: float

    @property
    def size(self) -> int:
        return self.modes.size

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.size

    @property
    def recurrence_time(self) -> float:
        """2 pi / dw, after which the finite bath returns amplitude."""
        return 2.0 * math.pi / self.spacing


def discretize(reservoir: ReservoirSpec, modes: int = DEFAULT_MODES, half_width: float = None) -> DiscretizedReservoir:
    """Midpoint sampling of J on [eps - W, eps + W]; W defaults to 40 gamma."""
    if modes < 1:
        raise ValueError("need at least one bath mode")
    W = DEFAULT_HALF_WIDTH * reservoir.gamma if half_width is None else float(half_width)
    dw = 2.0 * W / modes
    omega = reservoir.eps - W + dw * (np.arange(modes) + 0.5)
    g_k = np.sqrt(spectral_density(reservoir, omega) * dw / (2.0 * math.pi))
    return DiscretizedReservoir(omega, g_k, W)


@dataclass(frozen=True)
class FriedrichsRun:
    times: np.ndarray
    system: np.ndarray  # (T, N) local-basis amplitudes, Schroedinger picture
    total_norm: np.ndarray  # (T,) squared norm of system + bath


def evolve_friedrichs(
    state: InitialState,
    spec: SystemSpec,
    disc: DiscretizedReservoir,
    times,
    dt: float = None,
) -> FriedrichsRun:
    """Integrate the one-excitation sector from psi(0) (+) 0.

    ``dt`` is the target step; each output interval is split evenly.  It
    defaults to 1/(20 W), fine enough to resolve the fastest bath phase.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t[0] < 0:
        raise ValueError("times must be non-negative")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly ascending")
    n = spec.n
    if n * disc.size > MAX_BATH_SIZE:
        raise BudgetError(f"N*K = {n * disc.size} exceeds the budget of {MAX_BATH_SIZE}")
    if dt is None:
        dt = 1.0 / (20.0 * disc.half_width)
    E, V = np.linalg.eigh(spec.h_s)
    G = float(np.linalg.norm(disc.couplings))
    chat = disc.couplings / G if G > 0 else np.zeros_like(disc.couplings)
    gaps = np.diff(np.concatenate([[0.0], t]))
    counts = np.maximum(1, np.ceil(gaps / dt - 1e-9)).astype(np.int64)
    steps = gaps / counts
    out, norms = _kernels.friedrichs_march(state.psi, E, V, disc.modes, chat, G, counts, steps)
    # drop the internal t = 0 entry
    return FriedrichsRun(t, out[1:], norms[1:])


def _grid(t_max, dt):
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(t_max / dt))
    if n < 1:
        raise ValueError("t_max must cover at least one step")
    return np.arange(n + 1) * dt


def _propagators(basis: GlobalBasis, t, sign):
    """exp(sign * i H_S t) for every t, local basis, shape (T, N, N)."""
    U = basis.unitary
    ph = np.exp(sign * 1j * np.outer(t, basis.energies))
    return np.einsum("ia,ta,ja->tij", U, ph, U.conj())


def volterra_psi(state: InitialState, basis: GlobalBasis, reservoir: ReservoirSpec, t_max: float, dt: float):
    """Excited amplitudes psi(t) in the local basis, Schroedinger picture.

    The memory equation is marched for psi_I(t) = exp(i H_S t) psi(t),
    d psi_I/dt = -int_0^t G(t-s) exp(i H_S (t-s)) psi_I(s) ds,
    and rotated back.  Returns (times, psi) with psi of shape (T, N).
    """
    t = _grid(t_max, dt)
    KL = correlation(reservoir, t)[:, None, None] * _propagators(basis, t, +1)
    KR = np.zeros((t.size, 1, 1), dtype=complex)
    Y = _kernels.volterra_march(KL, KR, np.asarray(state.psi, complex)[:, None], dt)
    psi = np.einsum("tij,tj->ti", _propagators(basis, t, -1), Y[:, :, 0])
    return t, psi


def volterra_sigma(state: InitialState, basis: GlobalBasis, reservoir: ReservoirSpec, t_max: float, dt: float):
    """Born excited block sigma(t) (interaction picture, local basis).

    d sigma/dt = -int G(t-s) e^{i H_S (t-s)} sigma(s) ds - int G*(t-s) sigma(s) e^{-i H_S (t-s)} ds.
    Returns (times, sigma) with sigma of shape (T, N, N).
    """
    t = _grid(t_max, dt)
    G = correlation(reservoir, t)
    KL = G[:, None, None] * _propagators(basis, t, +1)
    KR = np.conj(G)[:, None, None] * _propagators(basis, t, -1)
    psi = np.asarray(state.psi, complex)
    Y = _kernels.volterra_march(KL, KR, np.outer(psi, psi.conj()), dt)
    return t, Y


def oracle_report(
    state: InitialState,
    spec: SystemSpec,
    reservoir: ReservoirSpec,
    modes: int = DEFAULT_MODES,
    half_width: float = None,
    t_max: float = None,
    samples: int = 101,
    tolerance: float = 1e-2,
) -> dict:
    """Compare the discretized Friedrichs model with the pseudomode amplitudes.

    ``t_max`` defaults to 5/gamma and is refused beyond half the bath
    recurrence time.
    """
    from .exact import exact_amplitudes
    from .model import diagonalize

    disc = discretize(reservoir, modes, half_width)
    if t_max is None:
        t_max = 5.0 / reservoir.gamma
    if t_max > 0.5 * disc.recurrence_time:
        raise BudgetError(
            f"t_max = {t_max} exceeds half the bath recurrence time {disc.recurrence_time:.4g}"
        )
    times = np.linspace(0.0, t_max, samples)
    run = evolve_friedrichs(state, spec, disc, times)
    basis = diagonalize(spec, reservoir)
    psi_I = exact_amplitudes(state, basis, reservoir, times)
    ref = np.array([basis.to_local(np.exp(-1j * basis.energies * tk) * p) for tk, p in zip(times, psi_I)])
    err = float(np.max(np.linalg.norm(run.system - ref, axis=1)))
    norm0 = float(np.vdot(state.psi, state.psi).real)
    norm_drift = float(np.max(np.abs(run.total_norm - norm0)))
    return {
        "K": int(disc.size),
        "W": float(disc.half_width),
        "t_max": float(t_max),
        "sup_error": err,
        "norm_drift": norm_drift,
        "recurrence_time": float(disc.recurrence_time),
        "pass": bool(err <= tolerance and norm_drift <= 1e-10),
    }
