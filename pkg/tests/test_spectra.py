import json

import numpy as np
import pytest

from canontime import spectra
from canontime.errors import InputError, NotNormalized, TruncationError, ZeroNorm
from canontime.spectra import EnergyState, SpectrumSpec


def test_grid_weights_sum_to_width():
    sp = SpectrumSpec.grid(3.0, 101, grading=2.0)
    assert np.all(sp.weights > 0)
    assert sp.weights.sum() == pytest.approx(3.0, rel=1e-14)
    assert sp.spacing() is None
    assert SpectrumSpec.grid(3.0, 101).spacing() == pytest.approx(0.03)


@pytest.mark.parametrize("bad", [
    dict(kind="continuous", energies=[-1.0, 1.0]),
    dict(kind="continuous", energies=[1.0, 0.5]),
    dict(kind="continuous", energies=[1.0]),
    dict(kind="other", energies=[1.0, 2.0]),
])
def test_spectrum_rejects_bad_input(bad):
    E = np.asarray(bad["energies"], dtype=float)
    with pytest.raises(InputError):
        SpectrumSpec(bad["kind"], E, np.ones_like(E))


def test_degeneracy_must_be_positive():
    with pytest.raises(InputError):
        SpectrumSpec.discrete([1.0, 2.0], degeneracy=0)


def test_units_are_natural():
    assert spectra.UnitsConfig().hbar == 1.0
    with pytest.raises(InputError):
        spectra.UnitsConfig(hbar=1.05e-34)


def test_norm_is_exact_for_the_linear_interpolant():
    sp = SpectrumSpec.grid(1.0, 3)
    st = EnergyState(sp, [0.0, 1.0, 0.0])
    # hat function: integral of its square is 2 * (0.5 / 3)
    assert st.norm == pytest.approx(1.0 / 3.0, rel=1e-15)


def test_normalize_and_evolve_keep_norm():
    sp = SpectrumSpec.grid(5.0, 64, degeneracy=2)
    rng = np.random.default_rng(1)
    st = spectra.normalize(EnergyState(sp, rng.normal(size=(2, 64)) + 1j * rng.normal(size=(2, 64))))
    assert st.is_normalized
    moved = spectra.evolve(spectra.evolve(st, 1.5), -0.5)
    assert moved.elapsed == 1.0
    assert moved.norm == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(moved.amplitudes, st.envelope * np.exp(-1j * sp.energies))


def test_zero_state_cannot_be_normalized():
    sp = SpectrumSpec.grid(1.0, 8)
    with pytest.raises(ZeroNorm):
        spectra.normalize(EnergyState(sp, np.zeros(8)))


def test_unnormalized_state_rejected_by_density():
    sp = SpectrumSpec.grid(1.0, 8)
    with pytest.raises(NotNormalized):
        spectra.energy_density(EnergyState(sp, 2.0 * np.ones(8)))


def test_amplitude_shape_checked():
    with pytest.raises(InputError):
        EnergyState(SpectrumSpec.grid(1.0, 8, degeneracy=2), np.ones(8))


def test_truncation_detected():
    sp = SpectrumSpec.grid(2.0, 200)
    with pytest.raises(TruncationError):
        EnergyState.from_function(sp, lambda E: np.exp(-0.5 * E))
    st = EnergyState.from_function(sp, lambda E: np.exp(-(E - 1.0) ** 2 * 40))
    assert st.is_normalized and st.tail_mass < 1e-10


def test_box_state_energy_density_is_flat():
    st = spectra.box_state(SpectrumSpec.grid(2.0, 33))
    dist = spectra.energy_density(st)
    np.testing.assert_allclose(dist.density, 0.5)
    assert dist.mass == pytest.approx(1.0)


def test_band_limited_state_vanishes_at_edges():
    sp = SpectrumSpec.grid(10.0, 65, degeneracy=2)
    st = spectra.band_limited_state(sp, [[1, 0.5j, 0, 0.1], [0, 1, 1, 0]])
    assert st.is_normalized
    assert np.abs(st.envelope[:, [0, -1]]).max() < 1e-15


def test_json_round_trip(tmp_path):
    sp = SpectrumSpec.grid(4.0, 16, degeneracy=2)
    st = spectra.band_limited_state(sp, [[1, 1j], [0.3, 0]])
    path = tmp_path / "state.json"
    path.write_text(json.dumps(spectra.state_to_dict(st)))
    back = spectra.load_state(path)
    np.testing.assert_allclose(back.envelope, st.envelope, atol=1e-15)
    assert back.spectrum.degeneracy == 2


def test_json_schema_violation(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "continuous", "energies": [0, 1], "amplitudes": [[1]]}))
    with pytest.raises(InputError):
        spectra.load_state(path)


def test_missing_file_is_input_error(tmp_path):
    with pytest.raises(InputError):
        spectra.load_state(tmp_path / "nope.json")
