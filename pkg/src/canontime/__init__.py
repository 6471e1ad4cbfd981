"""Canonical time observable, arrow-of-time operator and related checks (hbar = 1)."""

from .spectra import (EnergyState, SpectrumSpec, UnitsConfig, band_limited_state, box_state,
                      energy_density, evolve, normalize)
from .timekernel import (TimeDistribution, TimeGrid, covariance_residual, mean_time,
                         time_amplitudes, time_density)
from .lyapunov import (LyapunovCurve, g_expectation, lyapunov_curve, mf_expectation, mf_matrix,
                       sgn_expectation, sgn_t_matrix)
from .uncertainty import ENTROPIC_BOUND, ensemble_length, uncertainty_product
from .discrete import build_ntau, build_pom, find_recurrence_time, pom_probability
from .oracle import (FreeParticleParams, analytic_mf, analytic_time_density,
                     build_oracle_state)

__version__ = "0.1.0"
