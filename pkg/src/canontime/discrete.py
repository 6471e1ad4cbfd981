"""Time observables for discrete spectra.

Discrete time kets are |t, j> = (2 pi)^(-1/2) sum_k exp(-i E_k t) |E_k, j>.
Over a window [0, tau) they integrate to the positive operator

    N_tau = sum_j int_0^tau |t, j><t, j| dt,

and T_t(tau) = N_tau^(-1/2) |t><t| N_tau^(-1/2) together with the projector
P_tau onto the null space of N_tau form a POM on [0, tau).  For evenly spaced
levels and tau equal to the period, N_tau is a multiple of the identity and
the POM is the usual periodic time observable.

Everything is block diagonal in the degeneracy index; the per-block matrices
are K x K for K levels and the full operators are kron(identity_d, block).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import IllConditioned, InputError, NotFound
from .spectra import EnergyState, SpectrumSpec

ZERO_THRESHOLD = 1e-10


def _levels(spectrum):
    if spectrum.is_continuous:
        raise InputError("a discrete spectrum is required")
    return spectrum.energies


def ket_vectors(spectrum, t, ket_scale=1.0):
    """Rows are the K components of |t> for each t: ket_scale (2 pi)^-1/2 exp(-i E_k t)."""
    E = _levels(spectrum)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return ket_scale * np.exp(-1j * np.outer(t, E)) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class NTauOperator:
    spectrum: SpectrumSpec
    tau: float
    block: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ket_scale: float = 1.0

    @property
    def matrix(self):
        return np.kron(np.eye(self.spectrum.degeneracy), self.block)

    @property
    def lambda_max(self):
        return float(self.eigenvalues.max())


def build_ntau(spectrum: SpectrumSpec, tau: float, ket_scale=1.0) -> NTauOperator:
    """N_kl = (2 pi)^-1 int_0^tau exp(-i (E_k - E_l) t) dt, in closed form."""
    if not tau > 0:
        raise InputError("tau must be positive")
    E = _levels(spectrum)
    diff = E[:, None] - E[None, :]
    block = np.full(diff.shape, tau, dtype=complex)
    off = diff != 0
    block[off] = (1.0 - np.exp(-1j * diff[off] * tau)) / (1j * diff[off])
    block *= ket_scale**2 / (2.0 * np.pi)
    block = 0.5 * (block + block.conj().T)
    evals, evecs = np.linalg.eigh(block)
    return NTauOperator(spectrum, float(tau), block, evals, evecs, ket_scale)


def window_weights(n_nodes, tau, rule="gregory"):
    """Quadrature weights on t_i = i tau / n, i < n, for an integral over [0, tau].

    ``"periodic"`` is the plain rectangle rule (exact for trigonometric
    polynomials that are periodic in tau).  ``"gregory"`` is fourth order for
    any smooth integrand: Gregory end corrections on [0, t_{n-1}] plus a
    four-point extrapolation over the last step, which has no node at tau.
    """
    n = int(n_nodes)
    h = tau / n
    if rule == "periodic":
        return np.full(n, h)
    if rule != "gregory":
        raise InputError(f"unknown window rule {rule!r}")
    if n < 8:
        raise InputError("the gregory rule needs at least 8 nodes")
    w = np.ones(n)
    ends = np.array([3 / 8, 7 / 6, 23 / 24])
    w[:3] = ends
    w[-3:] = ends[::-1]
    w[-4:] += np.array([-9.0, 37.0, -59.0, 55.0]) / 24.0
    return h * w


@dataclass(frozen=True)
class PomFamily:
    spectrum: SpectrumSpec
    tau: float
    t_nodes: np.ndarray
    weights: np.ndarray
    ntau: NTauOperator
    inv_sqrt: np.ndarray
    projector_block: np.ndarray
    completeness_residual: float
    idempotency_residual: float

    @property
    def elements(self):
        """T_t(tau) for every node, shape (M, dK, dK)."""
        u = ket_vectors(self.spectrum, self.t_nodes, self.ntau.ket_scale) @ self.inv_sqrt.T
        blocks = u[:, :, None] * u[:, None, :].conj()
        eye = np.eye(self.spectrum.degeneracy)
        return np.stack([np.kron(eye, b) for b in blocks])

    @property
    def residual_projector(self):
        return np.kron(np.eye(self.spectrum.degeneracy), self.projector_block)


def build_pom(spectrum: SpectrumSpec, tau: float, t_nodes=4096, threshold=ZERO_THRESHOLD,
              rule="gregory", ket_scale=1.0) -> PomFamily:
    """Finite-resolution time POM on [0, tau).

    ``t_nodes`` is a node count or the nodes themselves, which must be the
    uniform points i tau / M.  Eigenvalues of N_tau below ``threshold``
    times the largest are treated as zero: N_tau^(-1/2) vanishes there and
    P_tau projects onto them.  Eigenvalues within a factor 10 of the cut
    raise IllConditioned instead of being assigned silently.
    """
    if np.ndim(t_nodes) == 0:
        m = int(t_nodes)
        nodes = tau * np.arange(m) / m
    else:
        nodes = np.asarray(t_nodes, dtype=float)
        m = nodes.size
        if not np.allclose(nodes, tau * np.arange(m) / m, rtol=0, atol=1e-12 * tau):
            raise InputError("t_nodes must be the uniform points i*tau/M in [0, tau)")
    if m < 2:
        raise InputError("need at least two time nodes")
    ntau = build_ntau(spectrum, tau, ket_scale)
    lam = ntau.eigenvalues
    cut = threshold * ntau.lambda_max
    near = (lam > cut / 10.0) & (lam < cut * 10.0)
    if np.any(near):
        raise IllConditioned(
            f"N_tau eigenvalues {lam[near]} lie within a factor 10 of the zero cut {cut:.3e}")
    keep = lam > cut
    V = ntau.eigenvectors
    inv_sqrt = (V[:, keep] / np.sqrt(lam[keep])) @ V[:, keep].conj().T
    proj = V[:, ~keep] @ V[:, ~keep].conj().T

    weights = window_weights(m, tau, rule)
    u = ket_vectors(spectrum, nodes, ket_scale) @ inv_sqrt.T
    integral = (u.T * weights) @ u.conj()
    ident = np.eye(lam.size)
    completeness = float(np.max(np.abs(integral + proj - ident)))
    idempotency = float(np.max(np.abs(proj @ proj - proj))) if proj.size else 0.0
    return PomFamily(spectrum, float(tau), nodes, weights, ntau, inv_sqrt, proj,
                     completeness, idempotency)


@dataclass(frozen=True)
class PomDistribution:
    nodes: np.ndarray
    weights: np.ndarray
    density: np.ndarray
    residual_mass: float
    tau: float

    @property
    def captured_mass(self):
        return float(np.sum(self.weights * self.density))

    @property
    def total(self):
        return self.captured_mass + self.residual_mass


def _coefficients(spectrum, state):
    if isinstance(state, EnergyState):
        return state.amplitudes
    c = np.asarray(state, dtype=complex)
    if c.ndim == 1:
        c = c[None, :]
    if c.shape != (spectrum.degeneracy, spectrum.n_nodes):
        raise InputError(f"coefficients must have shape ({spectrum.degeneracy}, {spectrum.n_nodes})")
    return c


def pom_probability(pom: PomFamily, state) -> PomDistribution:
    """p(t) = <psi|T_t(tau)|psi> on the window nodes, plus the mass <psi|P_tau|psi>."""
    c = _coefficients(pom.spectrum, state)
    kets = ket_vectors(pom.spectrum, pom.t_nodes, pom.ntau.ket_scale)
    amp = kets.conj() @ (pom.inv_sqrt @ c.T)
    p = np.sum(np.abs(amp) ** 2, axis=1)
    residual = float(np.real(np.einsum("jk,kl,jl->", c.conj(), pom.projector_block, c)))
    return PomDistribution(pom.t_nodes, pom.weights, p, residual, pom.tau)


# -- recurrences -------------------------------------------------------------------

@dataclass(frozen=True)
class Recurrence:
    time: float
    distance: float
    first_entry: float


def recurrence_distance(spectrum, state, t):
    """||psi_t - psi_0|| (state 2-norm) for each t."""
    c = _coefficients(spectrum, state)
    w = np.sum(np.abs(c) ** 2, axis=0)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.sin(0.5 * np.outer(t, _levels(spectrum)))
    return np.sqrt(4.0 * (s * s) @ w)


def find_recurrence_time(spectrum, state, epsilon, dt=None, horizon=1000.0, chunk=1 << 16):
    """First return of the state to within ``epsilon`` of itself after leaving that ball.

    The search scans a uniform grid of spacing ``dt`` up to ``horizon``.  Once
    a grid point lands within epsilon, the minimum of the distance over that
    excursion is located with a bounded scalar search; ``time`` is that
    closest approach and ``first_entry`` the first grid point inside the ball.
    """
    if not 0 < epsilon < 2:
        raise InputError("epsilon must lie in (0, 2)")
    E = _levels(spectrum)
    if dt is None:
        top = float(np.max(np.abs(E)))
        dt = np.pi / (8.0 * top) if top > 0 else 1.0
    if not (dt > 0 and horizon > dt):
        raise InputError("need 0 < dt < horizon")

    left_ball = False
    best_t, best_d = None, np.inf
    entry = None
    start = 1
    n_total = int(np.floor(horizon / dt))
    while start <= n_total:
        idx = np.arange(start, min(start + chunk, n_total + 1))
        d = recurrence_distance(spectrum, state, idx * dt)
        if not left_ball:
            out = np.nonzero(d > epsilon)[0]
            if out.size == 0:
                start = idx[-1] + 1
                continue
            left_ball = True
            d, idx = d[out[0]:], idx[out[0]:]
        inside = np.nonzero(d <= epsilon)[0]
        if inside.size:
            entry = int(idx[inside[0]])
            break
        k = int(np.argmin(d))
        if d[k] < best_d:
            best_t, best_d = float(idx[k] * dt), float(d[k])
        start = idx[-1] + 1

    if entry is None:
        if not left_ball:
            return Recurrence(dt, float(recurrence_distance(spectrum, state, dt)[0]), dt)
        raise NotFound(f"no return within {epsilon} up to t = {horizon}; "
                       f"closest {best_d:.4g} at t = {best_t}", best_t, best_d)

    # extent of the excursion inside the ball
    stop = entry
    while recurrence_distance(spectrum, state, (stop + 1) * dt)[0] <= epsilon:
        stop += 1
    lo, hi = (entry - 1) * dt, (stop + 1) * dt

    def sq(t):
        return float(recurrence_distance(spectrum, state, t)[0] ** 2)

    res = minimize_scalar(sq, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14 * max(1.0, hi)})
    t_best = float(res.x)
    return Recurrence(t_best, float(np.sqrt(max(sq(t_best), 0.0))), entry * dt)
