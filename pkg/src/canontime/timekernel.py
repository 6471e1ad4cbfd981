"""Time-ket amplitudes and the canonical time distribution.

The amplitude of a state on the time ket |t, j> is the half-line Fourier
integral

    a_j(t) = (2 pi)^(-1/2) * integral_{E_0}^{E_max} exp(i E t) psi_j(E) dE,

and the density is p_T(t) = sum_j |a_j(t)|^2.  The integral is evaluated with
a Filon rule: psi_j is interpolated linearly on each energy panel and the
interpolant is integrated exactly against exp(i E t).  The result is the
exact transform of the interpolant, so its accuracy does not degrade with |t|.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (CoverageError, InputError, MomentDivergence, NarrowSpectrum,
                     OscillatoryAccuracy)
from .spectra import EnergyState, evolve

DEFAULT_COVERAGE_TOL = 1e-6
MAX_TIME_NODES = 2**20
THREADS_ENV = "CANONTIME_THREADS"

_SERIES_CUTOFF = 0.05
_SERIES_TERMS = 10
_FACT = np.array([math.factorial(n) for n in range(_SERIES_TERMS)], dtype=float)


def n_threads():
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _filon_moments(theta, e=None):
    """i0 = int_0^1 e^{i theta s} ds and i1 = int_0^1 s e^{i theta s} ds.

    ``e`` may carry precomputed exp(i theta).  A power series replaces the
    closed forms for small |theta|, where they lose digits to cancellation.
    """
    th = np.asarray(theta, dtype=float)
    if e is None:
        e = np.exp(1j * th)
    small = np.abs(th) < _SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        i0 = (e - 1.0) / (1j * th)
        i1 = e / (1j * th) + (e - 1.0) / (th * th)
    if np.any(small):
        z = 1j * th[small]
        s0 = np.zeros(z.shape, dtype=complex)
        s1 = np.zeros(z.shape, dtype=complex)
        for n in range(_SERIES_TERMS - 1, -1, -1):
            s0 = s0 * z + 1.0 / (_FACT[n] * (n + 1))
            s1 = s1 * z + 1.0 / (_FACT[n] * (n + 2))
        i0[small] = s0
        i1[small] = s1
    return i0, i1


def filon_coefficients(theta):
    """Panel weights for linear interpolation against exp(i theta s), s in [0, 1].

    Returns ``(A, B)`` with A = int (1 - s) e^{i theta s} ds and
    B = int s e^{i theta s} ds, so a panel of width h from E_k integrates to
    h e^{i E_k t} (A f_k + B f_{k+1}) with theta = h t.
    """
    i0, i1 = _filon_moments(theta)
    return i0 - i1, i1


@dataclass(frozen=True)
class TimeGrid:
    """Time nodes with a panel quadrature rule and a coverage requirement.

    ``panel_weights[i] = (wl, wr)`` integrates panel [t_i, t_{i+1}] as
    ``wl * p_i + wr * p_{i+1}``.  Plain grids use the trapezoid rule in t;
    mapped grids use the trapezoid rule in the uniform map variable, which
    keeps the full-line integral accurate where the t-spacing is large.
    """

    nodes: np.ndarray
    panel_weights: np.ndarray
    coverage_tol: float = DEFAULT_COVERAGE_TOL

    def __post_init__(self):
        t = np.array(self.nodes, dtype=float)
        pw = np.array(self.panel_weights, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise InputError("a time grid needs at least two nodes")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise InputError("time nodes must be finite and strictly increasing")
        if pw.shape != (t.size - 1, 2) or np.any(pw <= 0):
            raise InputError("panel weights must be positive, two per panel")
        if not self.coverage_tol > 0:
            raise InputError("coverage_tol must be positive")
        t.setflags(write=False)
        pw.setflags(write=False)
        object.__setattr__(self, "nodes", t)
        object.__setattr__(self, "panel_weights", pw)

    @classmethod
    def from_nodes(cls, nodes, coverage_tol=DEFAULT_COVERAGE_TOL):
        """Trapezoid rule in t on arbitrary increasing nodes."""
        nodes = np.asarray(nodes, dtype=float)
        h = 0.5 * np.diff(nodes)
        return cls(nodes, np.column_stack([h, h]), coverage_tol)

    @classmethod
    def uniform(cls, t_max, n_nodes, coverage_tol=DEFAULT_COVERAGE_TOL, t_min=None):
        """Uniform grid on [t_min, t_max]; symmetric (t_min = -t_max) by default.

        An odd node count puts a node at t = 0.
        """
        t_min = -t_max if t_min is None else t_min
        if not t_max > t_min:
            raise InputError("need t_min < t_max")
        return cls.from_nodes(np.linspace(t_min, t_max, int(n_nodes)), coverage_tol)

    @classmethod
    def graded(cls, t_max, n_nodes, scale, coverage_tol=DEFAULT_COVERAGE_TOL):
        """Symmetric grid t = scale * sinh(u), u uniform.

        Spacing is about ``scale * du`` near 0 and grows like |t| * du, which
        suits densities with a core of width ~scale and power-law tails.
        """
        if scale <= 0 or t_max <= 0:
            raise InputError("scale and t_max must be positive")
        u_max = np.arcsinh(t_max / scale)
        u = np.linspace(-u_max, u_max, int(n_nodes))
        t = scale * np.sinh(u)
        if u.size % 2:
            t[u.size // 2] = 0.0
        jac = 0.5 * (u[1] - u[0]) * scale * np.cosh(u)
        return cls(t, np.column_stack([jac[:-1], jac[1:]]), coverage_tol)

    @property
    def weights(self):
        w = np.zeros(self.nodes.size)
        w[:-1] += self.panel_weights[:, 0]
        w[1:] += self.panel_weights[:, 1]
        return w

    def shifted(self, s):
        return TimeGrid(self.nodes + s, self.panel_weights, self.coverage_tol)

    @property
    def span(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True)
class TimeDistribution:
    grid: TimeGrid
    density: np.ndarray
    captured_mass: float
    residual_mass: float = 0.0

    @property
    def nodes(self):
        return self.grid.nodes

    @property
    def weights(self):
        return self.grid.weights

    @property
    def coverage_tol(self):
        return self.grid.coverage_tol

    @property
    def discrete(self):
        return False

    @property
    def deficit(self):
        """Probability not accounted for on the grid (may be slightly negative)."""
        return 1.0 - self.captured_mass - self.residual_mass

    def panel_masses(self):
        pw, p = self.grid.panel_weights, self.density
        return pw[:, 0] * p[:-1] + pw[:, 1] * p[1:]

    def cumulative(self):
        """Running panel-rule integral of the density, 0 on the first node."""
        return np.concatenate(([0.0], np.cumsum(self.panel_masses())))

    def partial_mass(self, x):
        """Integral of the density from the first node to each x (clamped to the grid).

        Inside a panel the panel mass is apportioned like the integral of the
        linear interpolant, so the result is continuous and nondecreasing.
        """
        t, p = self.nodes, self.density
        x_in = np.asarray(x, dtype=float)
        x = np.clip(np.atleast_1d(x_in), t[0], t[-1])
        cum = self.cumulative()
        i = np.clip(np.searchsorted(t, x, side="right") - 1, 0, t.size - 2)
        h = t[i + 1] - t[i]
        dx = x - t[i]
        lin_part = dx * p[i] + 0.5 * dx * dx * (p[i + 1] - p[i]) / h
        lin_full = 0.5 * h * (p[i] + p[i + 1])
        panel = cum[i + 1] - cum[i]
        frac = np.divide(lin_part, lin_full, out=dx / h, where=lin_full > 0)
        out = cum[i] + frac * panel
        return out.reshape(x_in.shape) if x_in.ndim else float(out[0])


def _check_continuous(state):
    if not state.spectrum.is_continuous:
        if state.occupied_nodes <= 1:
            raise NarrowSpectrum("a single eigenstate has a constant, non-normalizable time density")
        raise NarrowSpectrum("discrete spectra have almost-periodic time densities; "
                             "use canontime.discrete for the finite-resolution observable")


def _amplitude_block(E, h, f0, df, tau, uniform_h):
    # tau: (m,); f0 = psi at panel starts, df = psi jump across each panel, both (d, n_panels)
    if uniform_h is not None:
        phase = np.exp(1j * np.outer(tau, E[:-1]))
        i0, i1 = _filon_moments(tau * uniform_h)
        return (uniform_h * (i0[:, None] * (phase @ f0.T) + i1[:, None] * (phase @ df.T))).T
    full = np.exp(1j * np.outer(tau, E))
    phase = full[:, :-1]
    i0, i1 = _filon_moments(np.outer(tau, h), full[:, 1:] * phase.conj())
    phase = phase * h
    return ((phase * i0) @ f0.T + (phase * i1) @ df.T).T


def time_amplitudes(state: EnergyState, grid: TimeGrid, max_phase_advance=None, chunk=512):
    """Time-ket amplitudes a_j(t) on every grid node, shape (d, len(grid)).

    ``max_phase_advance`` optionally bounds |t| * (panel width); exceeding it
    raises OscillatoryAccuracy.  The Filon rule itself has no such limit, the
    bound is for callers who want the interpolation error in E to stay small
    relative to the oscillation period.
    """
    state.require_normalized()
    _check_continuous(state)
    sp = state.spectrum
    E = sp.energies
    h = np.diff(E)
    tau = grid.nodes - state.elapsed
    if max_phase_advance is not None:
        adv = float(np.max(np.abs(tau)) * np.max(h))
        if adv > max_phase_advance:
            raise OscillatoryAccuracy(
                f"phase advance per panel {adv:.3g} exceeds {max_phase_advance:.3g}")
    f = state.envelope
    f0, df = f[:, :-1], np.diff(f, axis=1)
    uniform_h = sp.spacing()
    blocks = [tau[i:i + chunk] for i in range(0, tau.size, chunk)]

    def work(tb):
        return _amplitude_block(E, h, f0, df, tb, uniform_h)

    workers = min(n_threads(), len(blocks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(tb) for tb in blocks]
    amp = np.concatenate(parts, axis=1)
    return amp / np.sqrt(2.0 * np.pi)


def time_density(state: EnergyState, grid: TimeGrid | None = None, check=True) -> TimeDistribution:
    """Canonical time density p_T(t) = sum_j |a_j(t)|^2 on ``grid``.

    The density is not renormalized.  With ``check`` the captured mass must be
    within ``grid.coverage_tol`` of one, otherwise CoverageError is raised
    (the offending distribution is attached to the exception).  Without a
    grid, ``auto_time_grid`` picks one.
    """
    if grid is None:
        return auto_time_grid(state)[1]
    amp = time_amplitudes(state, grid)
    p = np.sum(amp.real**2 + amp.imag**2, axis=0)
    captured = float(np.sum(grid.weights * p))
    dist = TimeDistribution(grid, p, captured)
    if check and dist.deficit > grid.coverage_tol:
        raise CoverageError(
            f"time grid [{grid.nodes[0]:g}, {grid.nodes[-1]:g}] captures {captured:.9f}; "
            f"deficit {dist.deficit:.2e} > {grid.coverage_tol:.1e}", dist)
    return dist


def auto_time_grid(state, dt=None, n_start=1025, coverage_tol=DEFAULT_COVERAGE_TOL,
                   max_nodes=MAX_TIME_NODES):
    """Symmetric uniform grid, doubled in width (at fixed spacing) until covered.

    Returns ``(grid, distribution)``.  The default spacing is a quarter of the
    Nyquist spacing pi / (E_max - E_0) of the density.
    """
    sp = state.spectrum
    if dt is None:
        dt = 0.25 * np.pi / (sp.e_max - sp.e_min)
    n = int(n_start) | 1
    while True:
        grid = TimeGrid.uniform(0.5 * (n - 1) * dt, n, coverage_tol)
        dist = time_density(state, grid, check=False)
        if dist.deficit <= coverage_tol:
            return grid, dist
        if 2 * n - 1 > max_nodes:
            raise CoverageError(
                f"coverage deficit {dist.deficit:.2e} still above {coverage_tol:.1e} "
                f"at the {max_nodes}-node cap", dist)
        n = 2 * n - 1


def covariance_residual(state: EnergyState, shift: float, grid: TimeGrid) -> float:
    """max_t |p_T(t | evolved by shift) - p_T(t - shift | state)| over the grid."""
    moved = time_density(evolve(state, shift), grid)
    ref = time_density(state, grid.shifted(-shift))
    return float(np.max(np.abs(moved.density - ref.density)))


# -- moments --------------------------------------------------------------------

_TAIL_FLOOR = 1e-25
_DIVERGENCE_MARGIN = 0.25


def _side_exponent(t, w, p, p_max, n_bins=12):
    """Power-law decay exponent of the density on one side, or None if negligible."""
    t_edge = t.max()
    sel = t >= t_edge / 8.0
    if np.count_nonzero(sel) < 8:
        return None
    edges = np.geomspace(t_edge / 8.0, t_edge, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, t[sel], side="right") - 1, 0, n_bins - 1)
    ws, ps = w[sel], p[sel]
    mass = np.bincount(idx, ws * ps, n_bins)
    width = np.bincount(idx, ws, n_bins)
    mids = np.sqrt(edges[:-1] * edges[1:])
    ok = (width > 0)
    mean = np.zeros(n_bins)
    mean[ok] = mass[ok] / width[ok]
    ok &= mean > _TAIL_FLOOR * p_max
    if np.count_nonzero(ok) < 4:
        return None
    slope = np.polyfit(np.log(mids[ok]), np.log(mean[ok]), 1)[0]
    return -float(slope)


def tail_exponents(dist):
    """Fitted decay exponents (left, right) of the density tails.

    ``None`` on a side means the density there has dropped below the
    numerical floor, so no moment is affected by it.
    """
    t, w, p = dist.nodes, dist.weights, dist.density
    p_max = float(p.max()) if p.size else 0.0
    out = []
    for side in (t < 0, t > 0):
        if np.count_nonzero(side) == 0:
            out.append(None)
        else:
            out.append(_side_exponent(np.abs(t[side]), w[side], p[side], p_max))
    return tuple(out)


def check_moment(dist, order):
    """Raise MomentDivergence if the numerical tails decay too slowly for ``order``.

    The k-th absolute moment needs decay faster than |t|^-(k+1); a fitted
    exponent within a small margin of that is treated as divergent.
    """
    if dist.deficit > dist.coverage_tol:
        raise CoverageError(f"coverage deficit {dist.deficit:.2e} too large for moments", dist)
    need = order + 1 + _DIVERGENCE_MARGIN
    for name, alpha in zip(("left", "right"), tail_exponents(dist)):
        if alpha is not None and alpha <= need:
            raise MomentDivergence(
                f"{name} tail decays like |t|^-{alpha:.2f}; moment {order} needs faster "
                f"than |t|^-{order + 1}")


def moment(dist, order, check=True):
    if check:
        check_moment(dist, order)
    return float(np.sum(dist.weights * dist.nodes**order * dist.density))


def mean_time(dist: TimeDistribution) -> float:
    """First moment of the time distribution (quadrature, no tail correction)."""
    return moment(dist, 1)
