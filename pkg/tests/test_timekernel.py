import numpy as np
import pytest
from scipy.integrate import quad

from canontime import spectra, timekernel
from canontime.errors import (CoverageError, MomentDivergence, NarrowSpectrum,
                              OscillatoryAccuracy)
from canontime.spectra import EnergyState, SpectrumSpec
from canontime.timekernel import TimeGrid


@pytest.mark.parametrize("theta", [0.0, 1e-6, 0.03, 0.049, 0.051, 0.7, 5.0, -3.0, 250.0])
def test_filon_coefficients_match_quadrature(theta):
    # A = int (1 - s) e^{i theta s} ds, B = int s e^{i theta s} ds over [0, 1]
    A, B = timekernel.filon_coefficients(np.array([theta]))
    for got, w in ((A[0], lambda s: 1 - s), (B[0], lambda s: s)):
        re = quad(lambda s: w(s) * np.cos(theta * s), 0, 1, limit=400)[0]
        im = quad(lambda s: w(s) * np.sin(theta * s), 0, 1, limit=400)[0]
        assert abs(got - (re + 1j * im)) < 1e-13


def test_box_density_matches_sinc():
    # flat amplitude on [0, W]: p_T(t) = (1 - cos W t) / (pi W t^2)
    W = 2.0
    st = spectra.box_state(SpectrumSpec.grid(W, 16))
    t = np.linspace(-20, 20, 401)
    dist = timekernel.time_density(st, TimeGrid.from_nodes(t), check=False)
    with np.errstate(invalid="ignore", divide="ignore"):
        exact = np.where(t == 0, W / (2 * np.pi), (1 - np.cos(W * t)) / (np.pi * W * t**2))
    np.testing.assert_allclose(dist.density, exact, atol=1e-14)


def test_coverage_error_carries_distribution():
    st = spectra.box_state(SpectrumSpec.grid(2.0, 16))
    with pytest.raises(CoverageError) as info:
        timekernel.time_density(st, TimeGrid.uniform(10.0, 201))
    assert info.value.distribution.deficit > 1e-6


def test_auto_grid_meets_tolerance():
    sp = SpectrumSpec.grid(10.0, 257)
    st = spectra.band_limited_state(sp, [[1.0, 0.3, -0.2j, 0.1]])
    grid, dist = timekernel.auto_time_grid(st)
    assert 0 <= dist.deficit <= 1e-6
    assert grid.coverage_tol == 1e-6


def test_discrete_spectrum_refused():
    sp = SpectrumSpec.discrete([0.0, 1.0])
    st = EnergyState(sp, np.ones(2) / np.sqrt(2))
    with pytest.raises(NarrowSpectrum):
        timekernel.time_density(st, TimeGrid.uniform(5.0, 11))


def test_phase_advance_guard():
    st = spectra.box_state(SpectrumSpec.grid(2.0, 16))
    with pytest.raises(OscillatoryAccuracy):
        timekernel.time_amplitudes(st, TimeGrid.uniform(100.0, 11), max_phase_advance=1.0)


def test_graded_grid_integrates_smooth_functions():
    g = TimeGrid.graded(200.0, 2001, 0.5)
    assert g.nodes[1000] == 0.0
    f = 1.0 / (1.0 + g.nodes**2)
    assert np.sum(g.weights * f) == pytest.approx(2 * np.arctan(200.0), rel=1e-7)


def test_partial_mass_is_monotone_and_consistent():
    st = spectra.band_limited_state(SpectrumSpec.grid(10.0, 129), [[1.0, 1j]])
    dist = timekernel.time_density(st, TimeGrid.uniform(30.0, 601), check=False)
    x = np.linspace(-31, 31, 2000)
    pm = dist.partial_mass(x)
    assert np.all(np.diff(pm) >= 0)
    assert pm[-1] == pytest.approx(dist.captured_mass, abs=1e-15)
    np.testing.assert_allclose(dist.partial_mass(dist.nodes), dist.cumulative(), atol=1e-15)
    assert isinstance(dist.partial_mass(0.0), float)


def test_covariance_against_baked_in_phase():
    # evolving by multiplying the amplitudes (instead of tracking elapsed time)
    # is only second order in the energy spacing; the difference must shrink ~4x per halving
    errs = []
    for n in (129, 257, 513):
        sp = SpectrumSpec.grid(10.0, n)
        st = spectra.band_limited_state(sp, [[1.0, 0.4j, -0.3]])
        grid = TimeGrid.uniform(30.0, 601)
        s = 1.0
        exact = timekernel.time_density(spectra.evolve(st, s), grid, check=False)
        baked = spectra.normalize(EnergyState(sp, st.envelope * np.exp(-1j * sp.energies * s)))
        naive = timekernel.time_density(baked, grid, check=False)
        errs.append(np.max(np.abs(exact.density - naive.density)))
    assert errs[0] < 1e-3
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


def test_degenerate_blocks_add_independently():
    sp2 = SpectrumSpec.grid(10.0, 129, degeneracy=2)
    sp1 = SpectrumSpec.grid(10.0, 129)
    c = np.array([[1.0, 0.5j, 0.2], [0.3, -1.0, 0.0]])
    both = spectra.band_limited_state(sp2, c)
    grid = TimeGrid.uniform(30.0, 601)
    p2 = timekernel.time_density(both, grid, check=False).density
    total = 0.0
    for j in range(2):
        part = EnergyState(sp1, both.envelope[j])
        w = part.norm
        total = total + w * timekernel.time_density(spectra.normalize(part), grid, check=False).density
    np.testing.assert_allclose(p2, total, atol=1e-14)


def test_thread_count_does_not_change_result(monkeypatch):
    st = spectra.band_limited_state(SpectrumSpec.grid(10.0, 129), [[1.0, 0.2]])
    grid = TimeGrid.uniform(30.0, 3001)
    monkeypatch.setenv(timekernel.THREADS_ENV, "1")
    one = timekernel.time_density(st, grid, check=False).density
    monkeypatch.setenv(timekernel.THREADS_ENV, "4")
    four = timekernel.time_density(st, grid, check=False).density
    assert np.array_equal(one, four)


def test_dilation_scales_time_density():
    sp = SpectrumSpec.grid(10.0, 129)
    st = spectra.band_limited_state(sp, [[1.0, 0.3j]])
    big = EnergyState(sp.dilated(2.0), st.envelope / np.sqrt(2.0))
    t = np.linspace(-10, 10, 201)
    p = timekernel.time_density(st, TimeGrid.from_nodes(t), check=False).density
    q = timekernel.time_density(big, TimeGrid.from_nodes(t / 2.0), check=False).density
    np.testing.assert_allclose(q, 2.0 * p, rtol=1e-10, atol=1e-16)


def test_random_state_moments(corpus_dists):
    dist = corpus_dists["random00"]
    left, right = timekernel.tail_exponents(dist)
    assert left > 4 and right > 4
    assert np.isfinite(timekernel.moment(dist, 2))
    with pytest.raises(MomentDivergence):
        timekernel.moment(corpus_dists["box"], 1)
