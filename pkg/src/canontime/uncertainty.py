"""Ensemble lengths and the entropic time-energy uncertainty relation."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import CoverageError, DegenerateDistribution
from .spectra import EnergyState, energy_density
from .timekernel import TimeGrid, time_density

ENTROPIC_BOUND = np.pi * np.e  # hbar = 1
_P_FLOOR = 1e-300


def entropy(dist, coverage_tol=None) -> float:
    """Shannon entropy (discrete) or differential entropy on the grid quadrature."""
    p = np.asarray(dist.density, dtype=float)
    if getattr(dist, "discrete", False):
        q = p[p > _P_FLOOR]
        return float(-np.sum(q * np.log(q)))
    tol = coverage_tol if coverage_tol is not None else getattr(dist, "coverage_tol", 1e-6)
    mass = float(np.sum(dist.weights * p))
    if 1.0 - mass > tol:
        raise CoverageError(f"distribution mass {mass:.9f} is short of 1 by more than {tol:.1e}")
    if np.count_nonzero(p > _P_FLOOR) <= 1:
        raise DegenerateDistribution("a point mass has no differential entropy")
    terms = np.zeros_like(p)
    pos = p > _P_FLOOR
    terms[pos] = p[pos] * np.log(p[pos])
    return float(-np.sum(dist.weights * terms))


def ensemble_length(dist, coverage_tol=None) -> float:
    """exp(entropy): the length of the interval a uniform density with the same entropy would need."""
    return float(np.exp(entropy(dist, coverage_tol)))


@dataclass(frozen=True)
class EnsembleLengthReport:
    L_H: float
    L_T: float
    product: float
    bound: float = ENTROPIC_BOUND

    @property
    def margin(self):
        return self.product - self.bound

    def satisfied(self, rtol=1e-3):
        return self.product >= self.bound * (1.0 - rtol)

    def to_dict(self):
        out = asdict(self)
        out["margin"] = self.margin
        out["hbar"] = 1.0
        return out


def uncertainty_product(state: EnergyState, grid: TimeGrid | None = None) -> EnsembleLengthReport:
    p_e = energy_density(state)
    p_t = time_density(state, grid)
    L_H = ensemble_length(p_e)
    L_T = ensemble_length(p_t, p_t.coverage_tol)
    return EnsembleLengthReport(L_H, L_T, L_H * L_T)
