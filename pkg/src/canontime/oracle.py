"""Closed forms for an initially stationary free particle in one dimension.

The energy amplitudes are taken as

    psi_+(E) = psi_-(E) = C * E**power * exp(-a E),     a = m / (2 sigma^2),

one block for each sign of the momentum p = +-(2 m E)^(1/2).  The time
amplitude is then proportional to (a - i t)^-(power + 1), so

    p_T(t) = N * (t^2 + a^2)^-(power + 1).

With the default ``power = 1/2`` this is N (t^2 + a^2)^(-3/2), N = a^2 / 2,
and the Lyapunov expectation has the closed form

    <M_F>(t) = 1/2 - (t / 2) (t^2 + a^2)^(-1/2).

``power = -1/4`` corresponds to a Gaussian momentum wavefunction
exp(-p^2 / 4 sigma^2) mapped to energy with the (m/p)^(1/2) Jacobian of the
delta-normalised energy kets; it gives the slower (t^2 + a^2)^(-3/4) decay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import GridResolution, InputError, TruncationError
from .spectra import TAIL_TOL, EnergyState, SpectrumSpec, normalize

DEFAULT_POWER = 0.5


@dataclass(frozen=True)
class FreeParticleParams:
    m: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.m > 0 and self.sigma > 0):
            raise InputError("mass and momentum spread must be positive")

    @property
    def a(self):
        """Time scale m / (2 sigma^2)."""
        return self.m / (2.0 * self.sigma**2)


def _energy_mass(params, power):
    # integral over [0, inf) of 2 E^(2 power) exp(-2 a E)
    k = 2.0 * power + 1.0
    return 2.0 * special.gamma(k) / (2.0 * params.a) ** k


def oracle_grid(params, n_nodes=4001, e_max=None, tail_tol=TAIL_TOL):
    """Square-root graded energy grid reaching far enough that the tail is below tail_tol."""
    if e_max is None:
        k = 2.0 * DEFAULT_POWER + 1.0
        x = 1.0
        while special.gammaincc(k, x) > 0.1 * tail_tol:
            x *= 1.25
        e_max = x / (2.0 * params.a)
    return SpectrumSpec.grid(e_max, n_nodes, degeneracy=2, grading=2.0)


def build_oracle_state(params: FreeParticleParams, spectrum: SpectrumSpec | None = None,
                       power=DEFAULT_POWER, tail_tol=TAIL_TOL, norm_rtol=1e-6) -> EnergyState:
    """The free-particle state on a d = 2 continuous grid, normalized on the grid.

    Raises GridResolution when the grid quadrature misses more than
    ``norm_rtol`` of the analytic norm (typically an under-resolved E -> 0
    region) and TruncationError when the probability above E_max exceeds
    ``tail_tol``.
    """
    sp = oracle_grid(params) if spectrum is None else spectrum
    if not sp.is_continuous or sp.degeneracy != 2:
        raise InputError("the oracle state lives on a continuous grid with degeneracy 2")
    E = sp.energies
    if power < 0 and E[0] == 0.0:
        raise GridResolution("amplitude is singular at E = 0; start the grid above 0")
    psi = np.where(E > 0, E ** power, 0.0 if power > 0 else 1.0) * np.exp(-params.a * E)
    state = EnergyState(sp, np.vstack([psi, psi]))

    k = 2.0 * power + 1.0
    tail = float(special.gammaincc(k, 2.0 * params.a * sp.e_max))
    head = float(special.gammainc(k, 2.0 * params.a * sp.e_min))
    if tail > tail_tol:
        raise TruncationError(f"oracle probability above E_max is {tail:.2e}")
    expected = _energy_mass(params, power) * (1.0 - tail - head)
    rel = abs(state.norm / expected - 1.0)
    if rel > norm_rtol:
        raise GridResolution(f"grid norm misses the analytic norm by {rel:.2e}")
    out = normalize(state)
    return EnergyState(sp, out.envelope, tail_mass=tail)


def analytic_energy_density(params, E, power=DEFAULT_POWER):
    """Total (both momentum signs) energy density of the oracle state."""
    E = np.asarray(E, dtype=float)
    return 2.0 * E ** (2 * power) * np.exp(-2.0 * params.a * E) / _energy_mass(params, power)


def time_density_norm(params, power=DEFAULT_POWER):
    """Normalisation N of N (t^2 + a^2)^-(power + 1)."""
    beta = power + 1.0
    if beta <= 0.5:
        raise InputError("the time density is not normalizable for power <= -1/2")
    a = params.a
    return special.gamma(beta) / (np.sqrt(np.pi) * special.gamma(beta - 0.5)) * a ** (2 * beta - 1)


def analytic_time_density(params, t, power=DEFAULT_POWER):
    a = params.a
    t = np.asarray(t, dtype=float)
    return time_density_norm(params, power) * (t * t + a * a) ** -(power + 1.0)


def analytic_mf(params, t, power=DEFAULT_POWER):
    """<M_F> at evolution time t: the time-distribution CDF evaluated at -t."""
    a = params.a
    t = np.asarray(t, dtype=float)
    if power == DEFAULT_POWER:
        return 0.5 - 0.5 * t / np.sqrt(t * t + a * a)
    # (t^2 + a^2)^-beta is a scaled Student-t density with 2 beta - 1 degrees of freedom
    dof = 2.0 * (power + 1.0) - 1.0
    return stats.t.cdf(-t * np.sqrt(dof) / a, dof)
