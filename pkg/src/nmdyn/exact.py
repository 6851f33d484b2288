"""Exact reduced dynamics through the pseudomode construction.

Every global mode alpha carries a 2x2 block acting on (psi_alpha, phi_alpha),
the system amplitude and its pseudomode partner, in the interaction picture::

    d/dt [psi, phi] = [[0, -i g], [-i g, i dE - gamma/2]] [psi, phi]

with ``dE = E_alpha - eps``.  Its eigenvalues fix the exact decay and
decoherence rates, and the block exponential gives the full reduced state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .model import GlobalBasis, InitialState, ReservoirSpec, SystemSpec

TIE_RTOL = 1e-14


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """2N x 2N non-Hermitian generators in the local basis.

    ``matrix`` is the Schroedinger-picture H_eff, ``interaction_matrix`` the
    interaction-picture H_I,eff.
    """

    matrix: np.ndarray
    interaction_matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def dissipator(self) -> np.ndarray:
        """(H_eff - H_eff^dagger) / (-2i); equals (gamma/2) (0 + I_N)."""
        H = self.matrix
        return (H - H.conj().T) / (-2j)


@dataclass(frozen=True)
class RateTable:
    """Population (eta_alpha) and decoherence (eta_alpha0, eta_alphabeta) rates."""

    method: str
    eta_alpha: np.ndarray
    eta_alpha0: np.ndarray
    eta_alphabeta: np.ndarray
    t: Optional[float] = None

    @property
    def n(self) -> int:
        return self.eta_alpha.shape[0]


@dataclass(frozen=True)
class ReducedState:
    """(N+1)x(N+1) density matrix; index 0 is the ground state."""

    matrix: np.ndarray
    t: float
    basis: str = "global"
    picture: str = "interaction"

    @property
    def rho00(self) -> float:
        return float(self.matrix[0, 0].real)

    @property
    def coherences(self) -> np.ndarray:
        """Excited-ground column rho[alpha, 0]."""
        return self.matrix[1:, 0]

    @property
    def sigma(self) -> np.ndarray:
        return self.matrix[1:, 1:]


def build_effective(spec: SystemSpec, basis: GlobalBasis, reservoir: ReservoirSpec) -> EffectiveHamiltonian:
    n = spec.n
    g, eps, gamma = reservoir.g, reservoir.eps, reservoir.gamma
    eye = np.eye(n)
    H = spec.h_s
    damped = (eps - 0.5j * gamma) * eye
    heff = np.block([[H, g * eye], [g * eye, damped]])
    hint = np.block([[np.zeros((n, n)), g * eye], [g * eye, -H + damped]])
    return EffectiveHamiltonian(heff.astype(complex), hint.astype(complex))


def block_eigenvalues(detuning: float, reservoir: ReservoirSpec) -> tuple[complex, complex]:
    """Roots (lam_plus, lam_minus) of l^2 - (i dE - gamma/2) l + g^2.

    ``lam_plus`` is the slow root (larger real part; larger imaginary part on
    a tie).
    """
    g2 = reservoir.g**2
    b = complex(-0.5 * reservoir.gamma, detuning)
    disc = np.sqrt(b * b - 4.0 * g2)
    q = 0.5 * (b + disc) if (b.conjugate() * disc).real >= 0 else 0.5 * (b - disc)
    if q == 0:
        r1, r2 = 0j, 0j
    else:
        r1, r2 = complex(q), complex(g2 / q)
    scale = max(abs(r1), abs(r2), 1e-300)
    if abs(r1.real - r2.real) <= TIE_RTOL * scale:
        return (r1, r2) if r1.imag >= r2.imag else (r2, r1)
    return (r1, r2) if r1.real > r2.real else (r2, r1)


def re_lambda_closed(detuning: float, reservoir: ReservoirSpec) -> tuple[float, float]:
    """Real parts of the two block eigenvalues from the nested-radical formula.

    Uses ``-4 g^2`` inside the outer root, which is the sign consistent with
    the 2x2 block.
    """
    g, hg, dE = reservoir.g, 0.5 * reservoir.gamma, detuning
    inner = np.sqrt(((hg + 2 * g) ** 2 + dE**2) * ((hg - 2 * g) ** 2 + dE**2))
    a = hg**2 - 4 * g**2 - dE**2
    if a >= 0:
        outer2 = a + inner
    else:
        # inner^2 - a^2 = 4 dE^2 hg^2, which avoids the cancellation in a + inner
        outer2 = 4 * dE**2 * hg**2 / (inner - a)
    outer = np.sqrt(outer2)
    half = np.sqrt(2.0) / 4.0 * outer
    return -0.5 * hg + half, -0.5 * hg - half


def _rates_from_slow_roots(method, re_plus, t=None) -> RateTable:
    eta0 = np.maximum(-np.asarray(re_plus, float), 0.0)
    return RateTable(
        method=method,
        eta_alpha=2.0 * eta0,
        eta_alpha0=eta0,
        eta_alphabeta=eta0[:, None] + eta0[None, :],
        t=t,
    )


def exact_rates(basis: GlobalBasis, reservoir: ReservoirSpec) -> RateTable:
    re_plus = np.empty(basis.n)
    for a, dE in enumerate(basis.detunings):
        lam_plus, _ = block_eigenvalues(dE, reservoir)
        closed, _ = re_lambda_closed(dE, reservoir)
        if abs(lam_plus.real - closed) > 1e-10 * max(1.0, reservoir.gamma, reservoir.g):
            raise ArithmeticError(
                f"slow root real part {lam_plus.real!r} disagrees with closed form {closed!r}"
            )
        re_plus[a] = lam_plus.real
    return _rates_from_slow_roots("exact", re_plus)


# --- propagation -------------------------------------------------------------


def _sinhc(z):
    """sinh(z)/z, with the series used near zero."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, 1.0 + z2 / 6.0 + z2 * z2 / 120.0, np.sinh(safe) / safe)


def block_propagator(detuning: float, reservoir: ReservoirSpec, times) -> np.ndarray:
    """exp(M t) for the 2x2 block M, shape (len(times), 2, 2).

    With m = trace/2 and M - m I squaring to delta^2 I,
    exp(M t) = e^{m t} [cosh(delta t) I + t sinhc(delta t) (M - m I)].
    For delta = 0 this is the Jordan form e^{m t}(I + (M - m I) t).
    """
    t = np.asarray(times, dtype=float)
    g = reservoir.g
    c = complex(-0.5 * reservoir.gamma, detuning)
    M = np.array([[0.0, -1j * g], [-1j * g, c]])
    m = 0.5 * c
    delta = np.sqrt(m * m - g * g + 0j)
    N0 = M - m * np.eye(2)
    z = delta * t
    out = np.cosh(z)[:, None, None] * np.eye(2) + (t * _sinhc(z))[:, None, None] * N0
    return np.exp(m * t)[:, None, None] * out


def _check_grid(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-D grid")
    if t[0] < 0:
        raise ValueError("times must be non-negative")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly ascending")
    return t


def exact_amplitudes(state: InitialState, basis: GlobalBasis, reservoir: ReservoirSpec, times, with_pseudomode=False):
    """Interaction-picture global amplitudes psi_alpha(t), shape (T, N).

    With ``with_pseudomode`` the pseudomode amplitudes phi_alpha(t) are
    returned as a second array.
    """
    t = _check_grid(times)
    psi_g = basis.to_global(state.psi)
    psi = np.empty((t.size, basis.n), dtype=complex)
    phi = np.empty_like(psi)
    for a, dE in enumerate(basis.detunings):
        P = block_propagator(dE, reservoir, t)
        psi[:, a] = P[:, 0, 0] * psi_g[a]
        phi[:, a] = P[:, 1, 0] * psi_g[a]
    return (psi, phi) if with_pseudomode else psi


def assemble_state(psi0: complex, psi_I, sigma, t: float) -> ReducedState:
    """rho = rho00 |0><0| + conj(psi0) |psi><0| + psi0 |0><psi| + 0 (+) sigma.

    rho00 = 1 - tr sigma.
    """
    psi_I = np.asarray(psi_I, dtype=complex)
    n = psi_I.size
    rho = np.zeros((n + 1, n + 1), dtype=complex)
    rho[1:, 1:] = sigma
    rho[1:, 0] = np.conj(psi0) * psi_I
    rho[0, 1:] = psi0 * psi_I.conj()
    rho[0, 0] = 1.0 - np.trace(sigma).real
    return ReducedState(rho, float(t))


def evolve_exact(state: InitialState, basis: GlobalBasis, reservoir: ReservoirSpec, times) -> list[ReducedState]:
    """Exact rho_SI(t) in the global basis for every time in ``times``."""
    t = _check_grid(times)
    psi = exact_amplitudes(state, basis, reservoir, t)
    return [assemble_state(state.psi0, p, np.outer(p, p.conj()), tk) for tk, p in zip(t, psi)]


def to_schroedinger_local(rs: ReducedState, basis: GlobalBasis) -> ReducedState:
    """Rotate an interaction-picture global-basis state to the lab frame, local basis."""
    if rs.picture != "interaction" or rs.basis != "global":
        raise ValueError("expected an interaction-picture state in the global basis")
    n = basis.n
    W = np.eye(n + 1, dtype=complex)
    W[1:, 1:] = basis.unitary * np.exp(-1j * basis.energies * rs.t)
    return ReducedState(W @ rs.matrix @ W.conj().T, rs.t, basis="local", picture="schroedinger")


# --- (2N+1)-dimensional GKSL dilation -----------------------------------------


def _dilated_state(psi0, psi_tilde):
    dim = psi_tilde.size + 1
    rho = np.zeros((dim, dim), dtype=complex)
    rho[1:, 1:] = np.outer(psi_tilde, psi_tilde.conj())
    rho[1:, 0] = np.conj(psi0) * psi_tilde
    rho[0, 1:] = psi0 * psi_tilde.conj()
    rho[0, 0] = 1.0 - np.vdot(psi_tilde, psi_tilde).real
    return rho


def dilation_check(
    state: InitialState,
    basis: GlobalBasis,
    reservoir: ReservoirSpec,
    t: float,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> float:
    """Frobenius distance between the pseudomode state and an integrated GKSL run.

    The (2N+1)-level state is built from the closed-form Schroedinger-picture
    solution (psi, phi) in the local basis.  The reference integrates
    d rho/dt = -i[H, rho] + sum_l D[L_l] rho with H = 0 (+) Herm(H_eff) and
    L_l = sqrt(gamma) |0><l~| from the t = 0 state.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    n = basis.n
    spec = SystemSpec(basis.hamiltonian())
    heff = build_effective(spec, basis, reservoir).matrix

    def closed(tk):
        psi_I, phi_I = exact_amplitudes(state, basis, reservoir, [tk], with_pseudomode=True)
        rot = np.exp(-1j * basis.energies * tk)
        psi = basis.to_local(rot * psi_I[0])
        phi = basis.to_local(rot * phi_I[0])
        return _dilated_state(state.psi0, np.concatenate([psi, phi]))

    rho0 = closed(0.0)
    if t == 0:
        return 0.0
    dim = 2 * n + 1
    H = np.zeros((dim, dim), dtype=complex)
    H[1:, 1:] = 0.5 * (heff + heff.conj().T)
    rate = reservoir.gamma
    pm = slice(1 + n, 1 + 2 * n)

    def rhs(_, y):
        rho = y.view(complex).reshape(dim, dim)
        d = -1j * (H @ rho - rho @ H)
        # sum_l L rho L^dag with L_l = sqrt(gamma)|0><l~|
        d[0, 0] += rate * np.trace(rho[pm, pm])
        d[pm, :] -= 0.5 * rate * rho[pm, :]
        d[:, pm] -= 0.5 * rate * rho[:, pm]
        return d.reshape(-1).view(float)

    sol = solve_ivp(
        rhs,
        (0.0, float(t)),
        rho0.reshape(-1).view(float).copy(),
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise ArithmeticError(f"GKSL integration failed: {sol.message}")
    rho_t = sol.y[:, -1].view(complex).reshape(dim, dim)
    return float(np.linalg.norm(rho_t - closed(float(t))))
