"""Lyapunov functionals of the canonical time observable.

Two independent routes to <M_F>:

* CDF route: <M_F> at evolution time t is the probability that the time
  observable of the initial state is below -t.  This is the precise route.
* matrix route: the operator sgn T has the kernel
  (2 pi)^-1 P.V.[-2 i / (E - E')] in the energy basis; on a uniform grid the
  principal value is taken by dropping the diagonal, and
  M_F = (1 - sgn T) / 2.  First order in the grid spacing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import InputError, MonotonicityViolation, NonUniformGrid
from .spectra import EnergyState, SpectrumSpec
from .timekernel import TimeDistribution, TimeGrid, check_moment, time_density

MONOTONE_TOL = 1e-12


# -- tail bookkeeping -------------------------------------------------------------

def _edge_weight(t, p, side):
    # mass beyond the edge of a ~|t|^-alpha tail scales like |t| p(t); average over the
    # outer 5%.  |t| is measured from the grid centre so the split follows translations.
    n = max(2, t.size // 20)
    sl = slice(0, n) if side == "left" else slice(t.size - n, t.size)
    centre = 0.5 * (t[0] + t[-1])
    return float(np.mean(np.abs(t[sl] - centre) * p[sl]))


def tail_masses(dist: TimeDistribution):
    """Split the coverage deficit into (left, right) tail masses.

    The split is proportional to |t - centre| p(t) near each edge; the two masses add
    up to the deficit exactly, so grid mass plus tails is one.
    """
    deficit = dist.deficit
    wl = _edge_weight(dist.nodes, dist.density, "left")
    wr = _edge_weight(dist.nodes, dist.density, "right")
    frac = 0.5 if wl + wr <= 0 else wl / (wl + wr)
    left = deficit * frac
    return left, deficit - left


def cdf(dist: TimeDistribution, x):
    """P(T < x) from the grid density plus tail corrections.

    Beyond the grid the tails are extrapolated as ~1/|x| (the slowest decay
    with a finite mass), which only matters for points outside the grid.
    """
    t = dist.nodes
    x = np.asarray(x, dtype=float)
    left, right = tail_masses(dist)
    inside = dist.partial_mass(x) + left
    total = dist.captured_mass + left
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        below = left * np.where(x < t[0], t[0] / x, 1.0)
        above = total + right * np.where(x > t[-1], 1.0 - t[-1] / x, 0.0)
    out = np.where(x < t[0], below, np.where(x > t[-1], above, inside))
    return out if out.ndim else float(out)


def _error_bar(dist):
    return abs(dist.deficit) + 0.5 * float(np.max(dist.panel_masses()))


def mf_from_distribution(dist: TimeDistribution, t):
    """<M_F> at evolution time(s) t, given the time distribution of the initial state."""
    return cdf(dist, -np.asarray(t, dtype=float))


def mf_expectation(state0: EnergyState, t: float, grid: TimeGrid | None = None) -> float:
    return float(mf_from_distribution(time_density(state0, grid), t))


def mf_with_error(state0: EnergyState, t: float, grid: TimeGrid | None = None):
    """``(value, error_bar)``; the bar is the coverage deficit plus half the largest panel mass."""
    dist = time_density(state0, grid)
    return float(mf_from_distribution(dist, t)), _error_bar(dist)


def sgn_from_distribution(dist: TimeDistribution) -> float:
    """Integral of sgn(t) p(t), splitting the panel that straddles t = 0."""
    t = dist.nodes
    masses = dist.panel_masses()
    neg = float(np.sum(masses[t[1:] <= 0]))
    pos = float(np.sum(masses[t[:-1] >= 0]))
    straddle = np.nonzero((t[:-1] < 0) & (t[1:] > 0))[0]
    if straddle.size:
        i = int(straddle[0])
        below = float(dist.partial_mass(0.0)) - float(dist.cumulative()[i])
        neg += below
        pos += float(masses[i]) - below
    left, right = tail_masses(dist)
    return (pos + right) - (neg + left)


def sgn_expectation(state: EnergyState, grid: TimeGrid | None = None) -> float:
    return sgn_from_distribution(time_density(state, grid))


# -- general g(T) -------------------------------------------------------------------

@dataclass(frozen=True)
class TimeFunction:
    """A real function of time with its behaviour at +-infinity.

    ``limits`` are g(-inf), g(+inf) for bounded functions (used to weight the
    tail masses); ``growth`` is the polynomial order of an unbounded g, which
    decides the moment that must converge.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    limits: tuple[float, float] | None = None
    growth: int = 0

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))


def _step(t):
    return np.where(t > 0, 1.0, np.where(t < 0, 0.0, 0.5))


BUILTIN_G = {
    "sgn": TimeFunction("sgn", np.sign, (-1.0, 1.0)),
    "-t": TimeFunction("-t", np.negative, None, growth=1),
    "-arctan": TimeFunction("-arctan", lambda t: -np.arctan(t), (np.pi / 2, -np.pi / 2)),
    "step": TimeFunction("step", _step, (0.0, 1.0)),
}


def g_from_distribution(dist: TimeDistribution, g) -> float:
    """Integral of g(t) p(t) dt on the grid, plus tail masses times g(+-inf).

    ``g`` is a builtin name, a TimeFunction, or an array of values tabulated
    on the grid nodes (treated as bounded, with no tail term).
    """
    if isinstance(g, str):
        try:
            g = BUILTIN_G[g]
        except KeyError:
            raise InputError(f"unknown g {g!r}; builtins: {sorted(BUILTIN_G)}") from None
    if isinstance(g, TimeFunction):
        if g.growth:
            check_moment(dist, g.growth)
        values = g(dist.nodes)
        limits = g.limits
    else:
        values = np.asarray(g, dtype=float)
        if values.shape != dist.nodes.shape:
            raise InputError("tabulated g needs one value per time node")
        limits = None
    total = float(np.sum(dist.weights * values * dist.density))
    if limits is not None:
        left, right = tail_masses(dist)
        total += limits[0] * left + limits[1] * right
    return total


def g_expectation(state: EnergyState, g, grid: TimeGrid | None = None) -> float:
    return g_from_distribution(time_density(state, grid), g)


# -- Lyapunov curves --------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovCurve:
    times: np.ndarray
    mf_values: np.ndarray
    sgn_values: np.ndarray
    errors: np.ndarray

    def decrements(self):
        return -np.diff(self.mf_values)


def lyapunov_curve(state0: EnergyState, times, grid: TimeGrid | None = None) -> LyapunovCurve:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1 or times.size == 0:
        raise InputError("times must be a non-empty 1-d array")
    if np.any(np.diff(times) <= 0):
        raise InputError("times must be strictly increasing")
    dist = time_density(state0, grid)
    mf = np.asarray(mf_from_distribution(dist, times), dtype=float).reshape(times.shape)
    rise = np.diff(mf)
    if rise.size and rise.max() > MONOTONE_TOL:
        i = int(np.argmax(rise))
        raise MonotonicityViolation(
            f"<M_F> increases by {rise[i]:.3e} between t={times[i]:g} and t={times[i + 1]:g}")
    # <sgn T> is integrated directly on the translated density, not derived from mf
    sgn = np.array([sgn_from_distribution(replace(dist, grid=dist.grid.shifted(t))) for t in times])
    err = np.full(times.shape, _error_bar(dist))
    return LyapunovCurve(times, mf, sgn, err)


# -- matrix route ------------------------------------------------------------------

@dataclass(frozen=True)
class HermitianMatrixObservable:
    """Dense operator on a uniform energy grid, in coordinates v = sqrt(h) psi.

    Rows and columns are ordered block by block in the degeneracy index j.
    """

    spectrum: SpectrumSpec
    entries: np.ndarray

    @property
    def spacing(self):
        return self.spectrum.spacing()

    def coordinates(self, state: EnergyState):
        if state.spectrum is not self.spectrum and not (
                state.spectrum.n_nodes == self.spectrum.n_nodes
                and np.array_equal(state.spectrum.energies, self.spectrum.energies)
                and state.spectrum.degeneracy == self.spectrum.degeneracy):
            raise InputError("state and operator live on different grids")
        return np.sqrt(self.spacing) * state.amplitudes.reshape(-1)

    def expectation(self, state: EnergyState) -> float:
        v = self.coordinates(state)
        return float(np.real(np.vdot(v, self.entries @ v)))

    def hermiticity_residual(self):
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)


def _uniform_spacing(spectrum):
    if not spectrum.is_continuous:
        raise InputError("the principal-value kernel needs a continuous grid")
    h = spectrum.spacing()
    if h is None:
        raise NonUniformGrid("the symmetric principal-value rule needs a uniform energy grid")
    return h


def sgn_t_matrix(spectrum: SpectrumSpec) -> HermitianMatrixObservable:
    """Discretised sgn T: -i h / (pi (E - E')) off the diagonal, zero on it."""
    h = _uniform_spacing(spectrum)
    E = spectrum.energies
    diff = E[:, None] - E[None, :]
    off = diff != 0
    block = np.zeros(diff.shape, dtype=complex)
    block[off] = -2j * h / (2.0 * np.pi * diff[off])
    full = np.kron(np.eye(spectrum.degeneracy), block)
    return HermitianMatrixObservable(spectrum, full)


def mf_matrix(spectrum: SpectrumSpec) -> HermitianMatrixObservable:
    """(1 - sgn T) / 2, with 1 the trapezoid-weighted identity of the grid."""
    h = _uniform_spacing(spectrum)
    sgn = sgn_t_matrix(spectrum).entries
    ident = np.diag(np.tile(spectrum.weights / h, spectrum.degeneracy)).astype(complex)
    return HermitianMatrixObservable(spectrum, 0.5 * (ident - sgn))
