"""Time the compiled kernels against their numpy counterparts.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is called once
to trigger compilation, then timed over a few repetitions; the largest
absolute difference between the two paths is reported alongside.
"""

import argparse
import time

import numpy as np

from nmdyn import _kernels
from nmdyn._accel import NUMBA_ENABLED
from nmdyn.classify import default_axes
from nmdyn.model import InitialState, ReservoirSpec, SystemSpec, correlation, diagonalize
from nmdyn.oracle import _propagators, discretize


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _diff(a, b):
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def cases(scale):
    de, gm = default_axes()
    D, Gm = np.meshgrid(de, gm, indexing="ij")
    gg = np.ones_like(D)
    yield "rates grid 121x200", (
        lambda: _kernels.population_rates_grid_numpy(D, Gm, gg),
        lambda: _kernels._rates_grid_numba_wrapper(D, Gm, gg),
    )

    rng = np.random.default_rng(7)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    spec = SystemSpec((a + a.conj().T) / 2)
    res = ReservoirSpec(1.0, 1.0, 0.0)
    basis = diagonalize(spec, res)
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    state = InitialState.normalized(0.5, psi)
    dt = 1e-3
    t = np.arange(int(2000 * scale) + 1) * dt
    G = correlation(res, t)
    KL = G[:, None, None] * _propagators(basis, t, +1)
    KR = np.conj(G)[:, None, None] * _propagators(basis, t, -1)
    Y0 = np.outer(state.psi, state.psi.conj())
    yield f"volterra {t.size} steps", (
        lambda: _kernels.volterra_march_numpy(KL, KR, Y0, dt),
        lambda: _kernels._volterra_numba_wrapper(KL, KR, Y0, dt),
    )

    disc = discretize(ReservoirSpec(1.0, 2.0, 0.0))
    E, V = np.linalg.eigh(spec.h_s)
    Gn = float(np.linalg.norm(disc.couplings))
    chat = disc.couplings / Gn
    counts = np.array([0] + [int(200 * scale)] * 5, dtype=np.int64)
    steps = np.array([0.0] + [1.0 / (20 * disc.half_width)] * 5)
    yield f"friedrichs K={disc.size}, {counts.sum()} steps", (
        lambda: _kernels.friedrichs_march_numpy(state.psi, E, V, disc.modes, chat, Gn, counts, steps),
        lambda: _kernels._friedrichs_numba_wrapper(state.psi, E, V, disc.modes, chat, Gn, counts, steps),
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies the problem sizes")
    args = ap.parse_args(argv)
    if not NUMBA_ENABLED:
        print("numba is disabled (NMDYN_DISABLE_NUMBA set or numba missing); nothing to compare")
        return 0
    print(f"{'kernel':<34}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, (f_np, f_nb) in cases(args.scale):
        f_nb()  # compile outside the timed region
        t_np, r_np = best_of(f_np, args.repeat)
        t_nb, r_nb = best_of(f_nb, args.repeat)
        print(f"{name:<34}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{_diff(r_np, r_nb):>14.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
