"""Energy spectra, energy-representation states and their time evolution.

Units: hbar = 1 everywhere.  A continuous spectrum is a finite grid on
[E_0, E_max] carrying composite trapezoid weights; a discrete spectrum is a
plain list of levels.  The degeneracy index j is the leading axis of every
amplitude array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, NotNormalized, TruncationError, ZeroNorm

HBAR = 1.0

CONTINUOUS = "continuous"
DISCRETE = "discrete"

#: Default tolerance on the probability beyond the top of a continuous grid.
TAIL_TOL = 1e-10


@dataclass(frozen=True)
class UnitsConfig:
    hbar: float = HBAR

    def __post_init__(self):
        if self.hbar != 1.0:
            raise InputError("only natural units (hbar = 1) are supported")

    def as_dict(self):
        return {"hbar": self.hbar, "units": "natural"}


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def trapezoid_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros_like(nodes)
    if nodes.size < 2:
        return w
    h = np.diff(nodes)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


@dataclass(frozen=True)
class SpectrumSpec:
    """Energy levels or grid nodes plus quadrature weights and a fixed degeneracy.

    Use the ``grid``, ``continuous`` or ``discrete`` constructors rather than
    calling this directly.
    """

    kind: str
    energies: np.ndarray
    weights: np.ndarray
    degeneracy: int = 1

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise InputError(f"unknown spectrum kind {self.kind!r}")
        object.__setattr__(self, "energies", _readonly(self.energies, float))
        object.__setattr__(self, "weights", _readonly(self.weights, float))
        if not isinstance(self.degeneracy, (int, np.integer)) or self.degeneracy < 1:
            raise InputError("degeneracy must be a positive integer")
        object.__setattr__(self, "degeneracy", int(self.degeneracy))
        E = self.energies
        if E.ndim != 1 or E.size == 0:
            raise InputError("energies must be a non-empty 1-d array")
        if not np.all(np.isfinite(E)):
            raise InputError("energies must be finite")
        if np.any(E < 0):
            raise InputError("energies must be >= 0 (semibounded spectrum)")
        if self.weights.shape != E.shape:
            raise InputError("weights and energies differ in shape")
        if self.kind == CONTINUOUS:
            if E.size < 2:
                raise InputError("a continuous grid needs at least two nodes")
            if np.any(np.diff(E) <= 0):
                raise InputError("continuous grid nodes must be strictly increasing")
            if np.any(self.weights <= 0):
                raise InputError("quadrature weights must be positive")

    @classmethod
    def continuous(cls, energies, degeneracy=1):
        energies = np.asarray(energies, dtype=float)
        return cls(CONTINUOUS, energies, trapezoid_weights(energies), degeneracy)

    @classmethod
    def grid(cls, e_max, n_nodes, degeneracy=1, grading=1.0, e_min=0.0):
        """Grid on [e_min, e_max]; ``grading > 1`` clusters nodes near e_min.

        Nodes are ``e_min + (e_max - e_min) * u**grading`` for ``u`` uniform
        on [0, 1], so ``grading=2`` resolves a square-root behaviour at the
        bottom of the spectrum.
        """
        if n_nodes < 2:
            raise InputError("n_nodes must be >= 2")
        if not e_max > e_min >= 0:
            raise InputError("need 0 <= e_min < e_max")
        u = np.linspace(0.0, 1.0, int(n_nodes))
        return cls.continuous(e_min + (e_max - e_min) * u**grading, degeneracy)

    @classmethod
    def discrete(cls, levels, degeneracy=1):
        levels = np.atleast_1d(np.asarray(levels, dtype=float))
        return cls(DISCRETE, levels, np.ones_like(levels), degeneracy)

    @property
    def is_continuous(self):
        return self.kind == CONTINUOUS

    @property
    def n_nodes(self):
        return self.energies.size

    @property
    def dim(self):
        return self.degeneracy * self.n_nodes

    @property
    def e_min(self):
        return float(self.energies[0]) if self.is_continuous else float(self.energies.min())

    @property
    def e_max(self):
        return float(self.energies[-1]) if self.is_continuous else float(self.energies.max())

    def spacing(self, rtol=1e-9):
        """Uniform node spacing, or None when the grid is not uniform."""
        if not self.is_continuous:
            return None
        h = np.diff(self.energies)
        if np.max(np.abs(h - h[0])) <= rtol * abs(h[0]):
            return float(h[0])
        return None

    def norm_sq(self, amplitudes):
        """Sum over j of the integral of |psi_j|^2.

        On a continuous grid this is the exact integral of the piecewise-linear
        interpolant of psi_j, which is the function whose Fourier transform
        the time kernel evaluates; for discrete levels it is the plain sum.
        """
        f = np.atleast_2d(amplitudes)
        if not self.is_continuous:
            return float(np.sum(np.abs(f) ** 2))
        f0, f1 = f[:, :-1], f[:, 1:]
        h = np.diff(self.energies)
        panel = (np.abs(f0) ** 2 + np.real(f0 * np.conj(f1)) + np.abs(f1) ** 2) / 3.0
        return float(np.sum(h * panel))

    def dilated(self, factor):
        """The same grid with every energy multiplied by ``factor``."""
        if factor <= 0:
            raise InputError("dilation factor must be positive")
        return SpectrumSpec(self.kind, self.energies * factor,
                            self.weights * (factor if self.is_continuous else 1.0),
                            self.degeneracy)

    def to_dict(self):
        return {"kind": self.kind, "energies": self.energies.tolist(),
                "degeneracy": self.degeneracy}


@dataclass(frozen=True)
class EnergyState:
    """Amplitudes psi_j(E) of a pure state on a spectrum.

    The amplitudes are stored as a time-independent ``envelope`` together with
    the total evolution time ``elapsed``; ``amplitudes`` applies the phase
    exp(-i E elapsed).  Keeping the phase separate lets the Fourier kernel
    integrate it exactly instead of interpolating an oscillating function.
    """

    spectrum: SpectrumSpec
    envelope: np.ndarray
    elapsed: float = 0.0
    norm_tol: float = 1e-8
    tail_mass: float = 0.0

    def __post_init__(self):
        env = np.array(self.envelope, dtype=complex)
        d, n = self.spectrum.degeneracy, self.spectrum.n_nodes
        if env.ndim == 1 and d == 1:
            env = env[None, :]
        if env.shape != (d, n):
            raise InputError(f"amplitudes must have shape ({d}, {n}), got {env.shape}")
        if not np.all(np.isfinite(env)):
            raise InputError("amplitudes must be finite")
        if not self.norm_tol > 0:
            raise InputError("norm_tol must be positive")
        env.setflags(write=False)
        object.__setattr__(self, "envelope", env)
        object.__setattr__(self, "elapsed", float(self.elapsed))

    @classmethod
    def from_function(cls, spectrum, fn, tail_tol=TAIL_TOL, normalize_state=True):
        """Sample ``fn(E)`` on the grid, check truncation, and normalize.

        ``fn`` returns an array of shape (N,) (same amplitude for every j) or
        (d, N).  The probability that ``fn`` places on [E_max, 3 E_max] is
        estimated by sampling and must not exceed ``tail_tol`` of the total.
        """
        E = spectrum.energies
        env = np.broadcast_to(np.asarray(fn(E), dtype=complex),
                              (spectrum.degeneracy, E.size))
        tail = 0.0
        if spectrum.is_continuous:
            ext = np.linspace(spectrum.e_max, 3.0 * spectrum.e_max, 4001)
            vals = np.broadcast_to(np.asarray(fn(ext), dtype=complex),
                                   (spectrum.degeneracy, ext.size))
            outside = float(np.sum(trapezoid_weights(ext) * np.sum(np.abs(vals) ** 2, axis=0)))
            inside = float(np.sum(spectrum.weights * np.sum(np.abs(env) ** 2, axis=0)))
            tail = outside / (inside + outside) if inside + outside > 0 else 0.0
            if tail > tail_tol:
                raise TruncationError(
                    f"probability beyond E_max is {tail:.3e} > {tail_tol:.1e}; raise E_max")
        state = cls(spectrum, np.array(env), tail_mass=tail)
        return normalize(state) if normalize_state else state

    @property
    def amplitudes(self):
        if self.elapsed == 0.0:
            return self.envelope
        return self.envelope * np.exp(-1j * self.spectrum.energies * self.elapsed)

    @property
    def norm(self):
        return self.spectrum.norm_sq(self.envelope)

    @property
    def is_normalized(self):
        return abs(self.norm - 1.0) <= self.norm_tol

    def require_normalized(self):
        if not self.is_normalized:
            raise NotNormalized(f"state norm {self.norm!r} differs from 1 by more than {self.norm_tol}")

    @property
    def occupied_nodes(self):
        return int(np.count_nonzero(np.any(self.envelope != 0, axis=0)))

    def edge_mass(self):
        """Probability in the last panel of a continuous grid (tail indicator)."""
        if not self.spectrum.is_continuous:
            return 0.0
        p = np.sum(np.abs(self.envelope) ** 2, axis=0)
        h = self.spectrum.energies[-1] - self.spectrum.energies[-2]
        return float(0.5 * h * (p[-1] + p[-2]))


def box_state(spectrum):
    """Flat amplitude over the whole continuous grid, normalized."""
    if not spectrum.is_continuous:
        raise InputError("box_state needs a continuous spectrum")
    return normalize(EnergyState(spectrum, np.ones((spectrum.degeneracy, spectrum.n_nodes))))


def band_limited_state(spectrum, coefficients):
    """Smooth state vanishing (with its slope) at both grid ends.

    The amplitude is ``sin(pi x)**2 * sum_k c_k P_k(2x - 1)`` with ``x`` the
    position on the grid scaled to [0, 1] and ``P_k`` Legendre polynomials;
    ``coefficients[j]`` holds the complex c_k of degeneracy block j.
    """
    from numpy.polynomial import legendre

    c = np.atleast_2d(np.asarray(coefficients, dtype=complex))
    if c.shape[0] != spectrum.degeneracy:
        raise InputError("one coefficient row per degeneracy block is required")
    E = spectrum.energies
    x = (E - E[0]) / (E[-1] - E[0])
    bump = np.sin(np.pi * x) ** 2
    env = np.array([bump * legendre.legval(2 * x - 1, row) for row in c])
    return normalize(EnergyState(spectrum, env))


def normalize(state: EnergyState) -> EnergyState:
    n = state.norm
    if n < 1e-14:
        raise ZeroNorm(f"state norm {n:.3e} is too small to normalize")
    return EnergyState(state.spectrum, state.envelope / np.sqrt(n), state.elapsed,
                       state.norm_tol, state.tail_mass)


def evolve(state: EnergyState, t: float) -> EnergyState:
    """Schroedinger evolution psi_j(E) -> exp(-i E t) psi_j(E)."""
    return EnergyState(state.spectrum, state.envelope, state.elapsed + float(t),
                       state.norm_tol, state.tail_mass)


@dataclass(frozen=True)
class Distribution:
    """Nonnegative density on quadrature nodes (point masses when ``discrete``)."""

    nodes: np.ndarray
    weights: np.ndarray
    density: np.ndarray
    discrete: bool = False
    coverage_tol: float = 1e-6

    @property
    def mass(self):
        return float(np.sum(self.weights * self.density))


def energy_density(state: EnergyState) -> Distribution:
    state.require_normalized()
    sp = state.spectrum
    p = np.sum(np.abs(state.envelope) ** 2, axis=0)
    return Distribution(sp.energies, sp.weights, p, discrete=not sp.is_continuous)


# -- JSON I/O -----------------------------------------------------------------

SCHEMA_DIR = Path(__file__).with_name("schemas")


def _validate(doc, schema_name):
    import jsonschema

    schema = json.loads((SCHEMA_DIR / schema_name).read_text())
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise InputError(f"{schema_name}: {exc.message}") from None


def spectrum_from_dict(doc):
    _validate(doc, "spectrum.schema.json")
    if doc["kind"] == CONTINUOUS:
        return SpectrumSpec.continuous(doc["energies"], doc.get("degeneracy", 1))
    return SpectrumSpec.discrete(doc["energies"], doc.get("degeneracy", 1))


def state_from_dict(doc, norm_tol=1e-8):
    _validate(doc, "state.schema.json")
    sp = spectrum_from_dict({k: doc[k] for k in ("kind", "energies", "degeneracy") if k in doc})
    amps = np.asarray(doc["amplitudes"], dtype=float)
    if amps.shape != (sp.dim, 2):
        raise InputError(f"expected {sp.dim} [re, im] pairs, got {amps.shape[0]}")
    env = (amps[:, 0] + 1j * amps[:, 1]).reshape(sp.degeneracy, sp.n_nodes)
    return EnergyState(sp, env, norm_tol=norm_tol)


def state_to_dict(state):
    a = state.amplitudes.reshape(-1)
    doc = state.spectrum.to_dict()
    doc["amplitudes"] = [[float(z.real), float(z.imag)] for z in a]
    return doc


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def load_state(path, norm_tol=1e-8):
    return state_from_dict(load_json(path), norm_tol)


def load_spectrum(path):
    return spectrum_from_dict(load_json(path))
