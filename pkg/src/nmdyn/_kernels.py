"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The public names (``population_rates_grid``, ``volterra_march``,
``friedrichs_march``) point at the numba variant unless JIT is disabled, see
:mod:`nmdyn._accel`.  Both variants are always importable under their
``*_numba`` / ``*_numpy`` names so they can be compared against each other.
"""

import math

import numpy as np

from ._accel import NUMBA_ENABLED, njit

# --- population rates on a parameter grid ----------------------------------
#
# For each cell (dE, gamma, g):
#   exact : -2 Re of the slow root of  l^2 - (i dE - gamma/2) l + g^2
#   born  : min |Re l| over the roots of
#           l^3 + gamma l^2 + (gamma^2/4 + 2 g^2 + dE^2) l + g^2 gamma
#   gksl  : gamma g^2 / ((gamma/2)^2 + dE^2)


def _real_cubic_min_abs_re_numpy(a1, a2, a3):
    """min |Re root| of x^3 + a1 x^2 + a2 x + a3, vectorized over arrays."""
    a1, a2, a3 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a1, a2, a3)))
    shape = a1.shape
    a1, a2, a3 = a1.ravel(), a2.ravel(), a3.ravel()
    p = a2 - a1 * a1 / 3.0
    q = 2.0 * a1**3 / 27.0 - a1 * a2 / 3.0 + a3
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    roots = np.empty((a1.size, 3), dtype=complex)

    one = disc > 0
    if np.any(one):
        sq = np.sqrt(disc[one])
        u = np.cbrt(-q[one] / 2.0 + sq)
        v = np.cbrt(-q[one] / 2.0 - sq)
        shift = a1[one] / 3.0
        roots[one, 0] = u + v - shift
        re = -(u + v) / 2.0 - shift
        im = (u - v) * math.sqrt(3.0) / 2.0
        roots[one, 1] = re + 1j * im
        roots[one, 2] = re - 1j * im

    three = ~one
    if np.any(three):
        pp = np.minimum(p[three], 0.0)
        m = 2.0 * np.sqrt(-pp / 3.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            arg = np.where(m > 0, 3.0 * q[three] / (pp * m), 0.0)
        theta = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
        shift = a1[three] / 3.0
        for k in range(3):
            roots[three, k] = m * np.cos(theta - 2.0 * math.pi * k / 3.0) - shift

    # two Newton sweeps on the monic cubic
    for _ in range(2):
        r = roots
        f = ((r + a1[:, None]) * r + a2[:, None]) * r + a3[:, None]
        df = (3.0 * r + 2.0 * a1[:, None]) * r + a2[:, None]
        ok = np.abs(df) > 1e-300
        roots = np.where(ok, r - f / np.where(ok, df, 1.0), r)
    return np.abs(roots.real).min(axis=1).reshape(shape)


def population_rates_grid_numpy(de, gamma, g):
    de, gamma, g = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (de, gamma, g)))
    b = 1j * de - 0.5 * gamma
    disc = np.sqrt(b * b - 4.0 * g * g + 0j)
    # larger-magnitude root from the formula, the other from the product g^2
    sgn = np.where((b.conj() * disc).real >= 0, 1.0, -1.0)
    q = 0.5 * (b + sgn * disc)
    with np.errstate(invalid="ignore", divide="ignore"):
        other = np.where(q != 0, g * g / np.where(q != 0, q, 1.0), 0.0)
    re_plus = np.maximum(q.real, other.real)
    exact = -2.0 * re_plus

    a1 = gamma
    a2 = 0.25 * gamma * gamma + 2.0 * g * g + de * de
    a3 = g * g * gamma
    born = _real_cubic_min_abs_re_numpy(a1, a2, a3)

    gksl = gamma * g * g / (0.25 * gamma * gamma + de * de)
    return exact, born, gksl


@njit(cache=True)
def _cubic_roots_scalar(a1, a2, a3):
    p = a2 - a1 * a1 / 3.0
    q = 2.0 * a1**3 / 27.0 - a1 * a2 / 3.0 + a3
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    shift = a1 / 3.0
    roots = np.empty(3, dtype=np.complex128)
    if disc > 0:
        sq = math.sqrt(disc)
        u = np.cbrt(-q / 2.0 + sq)
        v = np.cbrt(-q / 2.0 - sq)
        roots[0] = u + v - shift
        re = -(u + v) / 2.0 - shift
        im = (u - v) * math.sqrt(3.0) / 2.0
        roots[1] = complex(re, im)
        roots[2] = complex(re, -im)
    else:
        pp = min(p, 0.0)
        m = 2.0 * math.sqrt(-pp / 3.0)
        arg = 0.0
        if m > 0:
            arg = 3.0 * q / (pp * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg) / 3.0
        for k in range(3):
            roots[k] = m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift
    for _ in range(2):
        for k in range(3):
            r = roots[k]
            f = ((r + a1) * r + a2) * r + a3
            df = (3.0 * r + 2.0 * a1) * r + a2
            if abs(df) > 1e-300:
                roots[k] = r - f / df
    return roots


@njit(cache=True, nogil=True)
def population_rates_grid_numba(de, gamma, g):
    de = de.ravel()
    gamma = gamma.ravel()
    g = g.ravel()
    n = de.size
    exact = np.empty(n)
    born = np.empty(n)
    gksl = np.empty(n)
    for k in range(n):
        d, gm, gg = de[k], gamma[k], g[k]
        b = complex(-0.5 * gm, d)
        disc = np.sqrt(b * b - 4.0 * gg * gg)
        if (b.conjugate() * disc).real >= 0:
            q = 0.5 * (b + disc)
        else:
            q = 0.5 * (b - disc)
        other = 0.0j
        if q != 0:
            other = gg * gg / q
        exact[k] = -2.0 * max(q.real, other.real)

        roots = _cubic_roots_scalar(gm, 0.25 * gm * gm + 2.0 * gg * gg + d * d, gg * gg * gm)
        best = abs(roots[0].real)
        for j in range(1, 3):
            best = min(best, abs(roots[j].real))
        born[k] = best

        gksl[k] = gm * gg * gg / (0.25 * gm * gm + d * d)
    return exact, born, gksl


def _rates_grid_numba_wrapper(de, gamma, g):
    de, gamma, g = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (de, gamma, g)))
    shape = de.shape
    out = population_rates_grid_numba(
        np.ascontiguousarray(de), np.ascontiguousarray(gamma), np.ascontiguousarray(g)
    )
    return tuple(x.reshape(shape) for x in out)


# --- Volterra memory-kernel stepping --------------------------------------
#
# Solves  dY/dt = -int_0^t [ KL(t-s) Y(s) + Y(s) KR(t-s) ] ds,  Y(0) = Y0,
# on a uniform grid, trapezoid rule for the memory integral and a Heun
# predictor-corrector step.  KL has shape (n+1, N, N), KR (n+1, M, M).


def _memory_numpy(KL, KR, Y, m, y_last, dt):
    # trapezoid weights: 1/2 at s=0 and s=t_m, 1 inside
    acc = 0.5 * (KL[m] @ Y[0] + Y[0] @ KR[m])
    acc = acc + 0.5 * (KL[0] @ y_last + y_last @ KR[0])
    if m > 1:
        lags = KL[m - 1 : 0 : -1]
        acc = acc + np.einsum("jab,jbc->ac", lags, Y[1:m])
        acc = acc + np.einsum("jab,jbc->ac", Y[1:m], KR[m - 1 : 0 : -1])
    return -dt * acc


def volterra_march_numpy(KL, KR, Y0, dt):
    n = KL.shape[0] - 1
    Y = np.zeros((n + 1,) + Y0.shape, dtype=complex)
    Y[0] = Y0
    f_prev = np.zeros_like(Y0, dtype=complex)
    for m in range(n):
        pred = Y[m] + dt * f_prev
        f_pred = _memory_numpy(KL, KR, Y, m + 1, pred, dt)
        Y[m + 1] = Y[m] + 0.5 * dt * (f_prev + f_pred)
        f_prev = _memory_numpy(KL, KR, Y, m + 1, Y[m + 1], dt)
    return Y


@njit(cache=True)
def _memory_numba(KL, KR, Y, m, y_last, dt):
    N, M = y_last.shape
    acc = np.zeros((N, M), dtype=np.complex128)
    for j in range(m + 1):
        lag = m - j
        w = 1.0
        if j == 0 or j == m:
            w = 0.5
        for a in range(N):
            for c in range(M):
                s = 0.0j
                for b in range(N):
                    yb = y_last[b, c] if j == m else Y[j, b, c]
                    s += KL[lag, a, b] * yb
                for b in range(M):
                    ya = y_last[a, b] if j == m else Y[j, a, b]
                    s += ya * KR[lag, b, c]
                acc[a, c] += w * s
    return -dt * acc


@njit(cache=True, nogil=True)
def volterra_march_numba(KL, KR, Y0, dt):
    n = KL.shape[0] - 1
    N, M = Y0.shape
    Y = np.zeros((n + 1, N, M), dtype=np.complex128)
    Y[0] = Y0
    f_prev = np.zeros((N, M), dtype=np.complex128)
    for m in range(n):
        pred = Y[m] + dt * f_prev
        f_pred = _memory_numba(KL, KR, Y, m + 1, pred, dt)
        Y[m + 1] = Y[m] + 0.5 * dt * (f_prev + f_pred)
        f_prev = _memory_numba(KL, KR, Y, m + 1, Y[m + 1], dt)
    return Y


# --- discretized Friedrichs model, split-step ------------------------------
#
# State: system amplitudes psi (N) and bath amplitudes b (N, K); level i
# couples only to row b[i] with real couplings c_k.  Free part: H_S on psi and
# diag(omega) on each bath row; coupling part: for every i a rotation by
# G tau in span{|i>, |chat_i>}, chat = c / |c|.  Strang splitting composed
# into a 4th-order Yoshida triple jump; every sub-step is exactly unitary.

_Y1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_Y0 = -(2.0 ** (1.0 / 3.0)) * _Y1


def _free_numpy(psi, b, E, V, omega, tau):
    psi = V @ (np.exp(-1j * E * tau) * (V.conj().T @ psi))
    b = b * np.exp(-1j * omega * tau)[None, :]
    return psi, b


def _kick_numpy(psi, b, chat, G, tau):
    proj = b @ chat
    c, s = math.cos(G * tau), math.sin(G * tau)
    new_psi = c * psi - 1j * s * proj
    new_proj = c * proj - 1j * s * psi
    b = b + np.outer(new_proj - proj, chat)
    return new_psi, b


def friedrichs_march_numpy(psi0, E, V, omega, chat, G, step_counts, h_steps):
    psi = psi0.astype(complex).copy()
    b = np.zeros((psi.size, omega.size), dtype=complex)
    out = np.empty((len(step_counts) + 1, psi.size), dtype=complex)
    norms = np.empty(len(step_counts) + 1)
    out[0] = psi
    norms[0] = np.vdot(psi, psi).real
    for k, (count, h) in enumerate(zip(step_counts, h_steps)):
        for _ in range(count):
            for w in (_Y1, _Y0, _Y1):
                tau = w * h
                psi, b = _free_numpy(psi, b, E, V, omega, 0.5 * tau)
                psi, b = _kick_numpy(psi, b, chat, G, tau)
                psi, b = _free_numpy(psi, b, E, V, omega, 0.5 * tau)
        out[k + 1] = psi
        norms[k + 1] = np.vdot(psi, psi).real + np.vdot(b, b).real
    return out, norms


@njit(cache=True)
def _strang_numba(psi, b, E, V, omega, chat, G, tau):
    N, K = b.shape
    for half in range(2):
        # free half step
        g_amp = np.zeros(N, dtype=np.complex128)
        for a in range(N):
            acc = 0.0j
            for i in range(N):
                acc += V[i, a].conjugate() * psi[i]
            g_amp[a] = acc * np.exp(-0.5j * E[a] * tau)
        for i in range(N):
            acc = 0.0j
            for a in range(N):
                acc += V[i, a] * g_amp[a]
            psi[i] = acc
        for k in range(K):
            ph = np.exp(-0.5j * omega[k] * tau)
            for i in range(N):
                b[i, k] *= ph
        if half == 1:
            break
        # coupling rotation
        c = math.cos(G * tau)
        s = math.sin(G * tau)
        for i in range(N):
            proj = 0.0j
            for k in range(K):
                proj += b[i, k] * chat[k]
            new_psi = c * psi[i] - 1j * s * proj
            delta = (c * proj - 1j * s * psi[i]) - proj
            for k in range(K):
                b[i, k] += delta * chat[k]
            psi[i] = new_psi


@njit(cache=True, nogil=True)
def friedrichs_march_numba(psi0, E, V, omega, chat, G, step_counts, h_steps):
    N = psi0.size
    K = omega.size
    psi = psi0.astype(np.complex128).copy()
    b = np.zeros((N, K), dtype=np.complex128)
    n_out = step_counts.size + 1
    out = np.empty((n_out, N), dtype=np.complex128)
    norms = np.empty(n_out)
    out[0] = psi
    norms[0] = np.sum(np.abs(psi) ** 2)
    w1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
    w0 = -(2.0 ** (1.0 / 3.0)) * w1
    for k in range(step_counts.size):
        h = h_steps[k]
        for _ in range(step_counts[k]):
            _strang_numba(psi, b, E, V, omega, chat, G, w1 * h)
            _strang_numba(psi, b, E, V, omega, chat, G, w0 * h)
            _strang_numba(psi, b, E, V, omega, chat, G, w1 * h)
        out[k + 1] = psi
        norms[k + 1] = np.sum(np.abs(psi) ** 2) + np.sum(np.abs(b) ** 2)
    return out, norms


def _friedrichs_numba_wrapper(psi0, E, V, omega, chat, G, step_counts, h_steps):
    return friedrichs_march_numba(
        np.ascontiguousarray(psi0, dtype=complex),
        np.ascontiguousarray(E, dtype=float),
        np.ascontiguousarray(V, dtype=complex),
        np.ascontiguousarray(omega, dtype=float),
        np.ascontiguousarray(chat, dtype=float),
        float(G),
        np.asarray(step_counts, dtype=np.int64),
        np.asarray(h_steps, dtype=float),
    )


def _volterra_numba_wrapper(KL, KR, Y0, dt):
    return volterra_march_numba(
        np.ascontiguousarray(KL, dtype=complex),
        np.ascontiguousarray(KR, dtype=complex),
        np.ascontiguousarray(Y0, dtype=complex),
        float(dt),
    )


if NUMBA_ENABLED:
    population_rates_grid = _rates_grid_numba_wrapper
    volterra_march = _volterra_numba_wrapper
    friedrichs_march = _friedrichs_numba_wrapper
else:
    population_rates_grid = population_rates_grid_numpy
    volterra_march = volterra_march_numpy
    friedrichs_march = friedrichs_march_numpy

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

__all__ = [
    "BACKEND",
    "friedrichs_march",
    "friedrichs_march_numpy",
    "population_rates_grid",
    "population_rates_grid_numpy",
    "volterra_march",
    "volterra_march_numpy",
]
