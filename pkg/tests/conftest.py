"""Shared test corpus: the free-particle oracle state, the flat box state and
twenty random band-limited states, each paired with a time grid wide enough
for the coverage tolerance."""

from dataclasses import dataclass

import numpy as np
import pytest

from canontime import oracle, spectra, timekernel

RNG_SEED = 0
N_RANDOM = 20

# box: flat amplitude on [0, 2]; its time density decays only like 1/t^2, so
# the grid is wide and the coverage tolerance is relaxed to 1e-4
BOX_E_MAX = 2.0
BOX_NODES = 64


@dataclass(frozen=True)
class CorpusItem:
    name: str
    state: spectra.EnergyState
    grid: timekernel.TimeGrid


def oracle_item():
    params = oracle.FreeParticleParams(1.0, 1.0)
    st = oracle.build_oracle_state(params, oracle.oracle_grid(params, 4001))
    grid = timekernel.TimeGrid.graded(2000.0 * params.a, 3001, params.a)
    return CorpusItem("oracle", st, grid)


def box_item():
    st = spectra.box_state(spectra.SpectrumSpec.grid(BOX_E_MAX, BOX_NODES))
    grid = timekernel.TimeGrid.uniform(6400.0, 128001, coverage_tol=1e-4)
    return CorpusItem("box", st, grid)


def random_items(n=N_RANDOM, seed=RNG_SEED):
    rng = np.random.default_rng(seed)
    sp = spectra.SpectrumSpec.grid(10.0, 257)
    grid = timekernel.TimeGrid.uniform(30.0, 1201)
    items = []
    for k in range(n):
        c = rng.normal(size=(1, 4)) + 1j * rng.normal(size=(1, 4))
        items.append(CorpusItem(f"random{k:02d}", spectra.band_limited_state(sp, c), grid))
    return items


def build_corpus():
    return [oracle_item(), box_item(), *random_items()]


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


@pytest.fixture(scope="session")
def oracle_case():
    return oracle_item()


@pytest.fixture(scope="session")
def box_case():
    return box_item()


@pytest.fixture(scope="session")
def corpus_dists(corpus):
    return {item.name: timekernel.time_density(item.state, item.grid) for item in corpus}


# -- acceptance reporting -----------------------------------------------------------

ACCEPTANCE_LINES = {}


def record(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
