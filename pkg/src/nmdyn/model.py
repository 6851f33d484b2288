"""Parameter records for the system, the Lorentzian reservoir and the initial state.

Energies are plain floats in whatever unit the caller picks (hbar = 1).  The
excited-subspace Hamiltonian ``h_s`` is given in the local basis; the global
basis is its eigenbasis.  Ground state is index 0 wherever an (N+1)-level
object appears.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HERMITIAN_RTOL = 1e-12
NORM_TOL = 1e-12
DEGENERACY_RTOL = 1e-10


class ValidationError(ValueError):
    """Raised when an input record violates its invariants."""


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemSpec:
    """Excited-subspace Hamiltonian, ``h_s[i, i] = eps_i`` and ``h_s[i, j] = J_ij``."""

    h_s: np.ndarray

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h_s, dtype=complex))
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
            raise ValidationError(f"h_s must be a non-empty square matrix, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValidationError("h_s contains non-finite entries")
        scale = max(np.abs(h).max(), 1.0)
        defect = np.abs(h - h.conj().T)
        if defect.max() > HERMITIAN_RTOL * scale:
            i, j = np.unravel_index(np.argmax(defect), defect.shape)
            raise ValidationError(
                f"h_s is not Hermitian: |h[{i},{j}] - conj(h[{j},{i}])| = {defect[i, j]:.3e}"
            )
        object.__setattr__(self, "h_s", _frozen(h))

    @property
    def n(self) -> int:
        return self.h_s.shape[0]


@dataclass(frozen=True)
class ReservoirSpec:
    """Lorentzian reservoir: G(t) = g^2 exp(-gamma t / 2 - i eps t).

    ``g = 0`` is accepted as the decoupled limit.
    """

    g: float
    gamma: float
    eps: float = 0.0

    def __post_init__(self):
        for name in ("g", "gamma", "eps"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.g < 0:
            raise ValidationError(f"g must be non-negative, got {self.g}")
        if self.gamma <= 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class GlobalBasis:
    """Eigendecomposition of ``h_s``.

    ``unitary[:, a]`` is the eigenvector with energy ``energies[a]`` written in
    the local basis, so ``h_s = U diag(E) U^dagger`` and global amplitudes are
    ``U^dagger @ psi_local``.
    """

    energies: np.ndarray
    unitary: np.ndarray
    detunings: np.ndarray

    @property
    def n(self) -> int:
        return self.energies.shape[0]

    def hamiltonian(self) -> np.ndarray:
        U = self.unitary
        return (U * self.energies) @ U.conj().T

    def to_global(self, psi_local):
        return self.unitary.conj().T @ np.asarray(psi_local, dtype=complex)

    def to_local(self, psi_global):
        return self.unitary @ np.asarray(psi_global, dtype=complex)


@dataclass(frozen=True)
class InitialState:
    """Pure factorized initial state psi0 |0> + sum_i psi_i |i>."""

    psi0: complex
    psi: np.ndarray = field(default_factory=lambda: np.zeros(1, complex))

    def __post_init__(self):
        psi = np.atleast_1d(np.asarray(self.psi, dtype=complex))
        if psi.ndim != 1:
            raise ValidationError("psi must be a vector")
        psi0 = complex(self.psi0)
        total = abs(psi0) ** 2 + float(np.vdot(psi, psi).real)
        if abs(total - 1.0) > NORM_TOL:
            raise ValidationError(f"initial state is not normalized: |psi0|^2 + |psi|^2 = {total!r}")
        object.__setattr__(self, "psi0", psi0)
        object.__setattr__(self, "psi", _frozen(psi))

    @property
    def n(self) -> int:
        return self.psi.shape[0]

    @classmethod
    def normalized(cls, psi0, psi):
        """Build a state after rescaling the amplitudes to unit norm."""
        psi = np.asarray(psi, dtype=complex)
        norm = np.sqrt(abs(psi0) ** 2 + np.vdot(psi, psi).real)
        return cls(complex(psi0) / norm, psi / norm)


def diagonalize(spec: SystemSpec, reservoir: ReservoirSpec) -> GlobalBasis:
    """Return the global basis with ascending energies and detunings E - eps.

    Inside a degenerate cluster the eigenvectors are ordered by the index of
    their largest-magnitude component; each eigenvector's phase is fixed so
    that this component is real and positive.
    """
    h = spec.h_s
    energies, vecs = np.linalg.eigh(h)
    scale = max(np.abs(h).max(), 1.0)

    mags = np.abs(vecs)
    # first component within round-off of the column maximum
    lead = np.argmax(mags >= mags.max(axis=0) * (1 - 1e-12), axis=0)
    phase = vecs[lead, np.arange(vecs.shape[1])]
    vecs = vecs * (np.abs(phase) / phase)

    order = list(range(len(energies)))
    start = 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and abs(energies[stop] - energies[start]) < DEGENERACY_RTOL * scale:
            stop += 1
        if stop - start > 1:
            order[start:stop] = sorted(order[start:stop], key=lambda k: lead[k])
        start = stop
    energies = energies[order]
    vecs = vecs[:, order]
    return GlobalBasis(
        energies=_frozen(energies, float),
        unitary=_frozen(vecs),
        detunings=_frozen(energies - reservoir.eps, float),
    )


def correlation(reservoir: ReservoirSpec, t):
    """Reservoir correlation function g^2 exp(-(gamma/2) t - i eps t), t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("correlation is defined here for t >= 0")
    out = reservoir.g**2 * np.exp(-(0.5 * reservoir.gamma + 1j * reservoir.eps) * t)
    return out[()] if out.ndim == 0 else out


def spectral_density(reservoir: ReservoirSpec, omega):
    """Lorentzian J(omega) = gamma g^2 / ((gamma/2)^2 + (omega - eps)^2)."""
    omega = np.asarray(omega, dtype=float)
    hw = 0.5 * reservoir.gamma
    out = reservoir.gamma * reservoir.g**2 / (hw * hw + (omega - reservoir.eps) ** 2)
    return out[()] if out.ndim == 0 else out


# --- JSON configuration -----------------------------------------------------


def _cplx(x) -> complex:
    if isinstance(x, (list, tuple)) and len(x) == 2 and not any(isinstance(v, bool) for v in x):
        try:
            return complex(float(x[0]), float(x[1]))
        except (TypeError, ValueError):
            pass
    raise ValidationError(f"complex numbers must be [re, im] pairs, got {x!r}")


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


@dataclass(frozen=True)
class ModelConfig:
    system: SystemSpec
    reservoir: ReservoirSpec
    initial: InitialState

    def __post_init__(self):
        if self.initial.n != self.system.n:
            raise ValidationError(
                f"initial state has {self.initial.n} excited amplitudes but h_s is {self.system.n}x{self.system.n}"
            )

    def basis(self) -> GlobalBasis:
        return diagonalize(self.system, self.reservoir)

    def to_dict(self) -> dict:
        h = self.system.h_s
        return {
            "n": self.system.n,
            "h_s": [[_pair(z) for z in row] for row in h],
            "reservoir": {
                "g": self.reservoir.g,
                "gamma": self.reservoir.gamma,
                "eps": self.reservoir.eps,
            },
            "initial": {
                "psi0": _pair(self.initial.psi0),
                "psi": [_pair(z) for z in self.initial.psi],
            },
        }


def parse_config(doc: dict) -> ModelConfig:
    """Build a :class:`ModelConfig` from the JSON document layout."""
    try:
        n = int(doc["n"])
        h = np.array([[_cplx(z) for z in row] for row in doc["h_s"]], dtype=complex)
        res = doc["reservoir"]
        reservoir = ReservoirSpec(float(res["g"]), float(res["gamma"]), float(res.get("eps", 0.0)))
        init = doc["initial"]
        initial = InitialState(_cplx(init["psi0"]), np.array([_cplx(z) for z in init["psi"]]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model configuration: {exc!r}") from exc
    if n < 1 or h.shape != (n, n):
        raise ValidationError(f"n = {n} does not match h_s of shape {h.shape}")
    return ModelConfig(SystemSpec(h), reservoir, initial)


def load_config(path) -> ModelConfig:
    with open(Path(path)) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)
