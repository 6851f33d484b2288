"""Time-local Redfield dynamics and its Markovian (GKSL) limit.

In the global basis the generator is diagonal,
Y_a(t) = Y_a(inf) (1 - exp(-(gamma/2 - i dE_a) t)) with
Y_a(inf) = J(E_a) (gamma/2 + i dE_a) / gamma, and every amplitude decays
independently: d psi_a/dt = -Y_a(t) psi_a.  The excited block stays the
rank-one projector |psi><psi|.
"""

from __future__ import annotations

import numpy as np

from .exact import RateTable, ReducedState, _check_grid, assemble_state
from .model import GlobalBasis, InitialState, ReservoirSpec, spectral_density


def y_infinity(basis: GlobalBasis, reservoir: ReservoirSpec) -> np.ndarray:
    J = spectral_density(reservoir, basis.energies)
    return J * (0.5 * reservoir.gamma + 1j * basis.detunings) / reservoir.gamma


def _relaxation(basis, reservoir):
    # gamma/2 - i dE, never zero for gamma > 0
    return 0.5 * reservoir.gamma - 1j * basis.detunings


def y_of_t(basis: GlobalBasis, reservoir: ReservoirSpec, t) -> np.ndarray:
    """Y_a(t); broadcast over ``t`` gives shape (T, N)."""
    t = np.asarray(t, dtype=float)
    k = _relaxation(basis, reservoir)
    return y_infinity(basis, reservoir) * (1.0 - np.exp(-np.multiply.outer(t, k)))


def redfield_rates(basis: GlobalBasis, reservoir: ReservoirSpec, t: float) -> RateTable:
    if t < 0:
        raise ValueError("t must be non-negative")
    J = spectral_density(reservoir, basis.energies)
    dE = basis.detunings
    hg = 0.5 * reservoir.gamma
    decay = np.exp(-hg * t)
    eta0 = J / reservoir.gamma * (hg * (1.0 - decay * np.cos(dE * t)) + dE * decay * np.sin(dE * t))
    return RateTable(
        method="redfield",
        eta_alpha=2.0 * eta0,
        eta_alpha0=eta0,
        eta_alphabeta=eta0[:, None] + eta0[None, :],
        t=float(t),
    )


def gksl_rates(basis: GlobalBasis, reservoir: ReservoirSpec) -> RateTable:
    eta0 = 0.5 * spectral_density(reservoir, basis.energies)
    eta0 = np.atleast_1d(eta0).astype(float)
    return RateTable(
        method="gksl",
        eta_alpha=2.0 * eta0,
        eta_alpha0=eta0,
        eta_alphabeta=eta0[:, None] + eta0[None, :],
    )


def redfield_amplitudes(
    state: InitialState,
    basis: GlobalBasis,
    reservoir: ReservoirSpec,
    times,
    markovian: bool = False,
) -> np.ndarray:
    """Interaction-picture global amplitudes, shape (T, N)."""
    t = _check_grid(times)
    psi = basis.to_global(state.psi)
    yinf = y_infinity(basis, reservoir)
    if markovian:
        exponent = np.multiply.outer(t, yinf)
    else:
        k = _relaxation(basis, reservoir)
        kt = np.multiply.outer(t, k)
        # t - (1 - e^{-k t}) / k, via expm1 to keep accuracy at small t
        exponent = yinf * (t[:, None] + np.expm1(-kt) / k)
    return psi * np.exp(-exponent)


def evolve_redfield(
    state: InitialState,
    basis: GlobalBasis,
    reservoir: ReservoirSpec,
    times,
    markovian: bool = False,
) -> list[ReducedState]:
    t = _check_grid(times)
    psi = redfield_amplitudes(state, basis, reservoir, t, markovian=markovian)
    return [assemble_state(state.psi0, p, np.outer(p, p.conj()), tk) for tk, p in zip(t, psi)]
