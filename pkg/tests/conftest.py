"""Shared fixtures: bundled devices, toy topologies, and benchmark subsets."""

import pytest

from qmux.benchmarks import load_benchmark, load_device, suite
from qmux.devices import DeviceGraph
from qmux.partition import generate_compute_units


def make_grid(rows: int, cols: int, err: float = 0.01, name: str | None = None) -> DeviceGraph:
    """Row-major grid: qubit r*cols + c, links right and down."""
    links = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                links.append((q, q + 1))
            if r + 1 < rows:
                links.append((q, q + cols))
    n = rows * cols
    return DeviceGraph(
        num_qubits=n,
        links=tuple(links),
        link_error={(min(a, b), max(a, b)): err for a, b in links},
        qubit_error=(1e-4,) * n,
        readout_error=(0.01,) * n,
        name=name or f"grid{rows}x{cols}",
    )


def make_path(n: int, err: float = 0.01, name: str | None = None) -> DeviceGraph:
    links = tuple((i, i + 1) for i in range(n - 1))
    return DeviceGraph(
        num_qubits=n,
        links=links,
        link_error={l: err for l in links},
        qubit_error=(1e-4,) * n,
        readout_error=(0.01,) * n,
        name=name or f"path{n}",
    )


def make_ring4(err: float = 0.01) -> DeviceGraph:
    """The 4-qubit example device: links 0-1, 1-3, 2-3, 0-2."""
    links = ((0, 1), (1, 3), (2, 3), (0, 2))
    return DeviceGraph(
        num_qubits=4,
        links=links,
        link_error={(min(a, b), max(a, b)): err for a, b in links},
        qubit_error=(1e-4,) * 4,
        readout_error=(0.01,) * 4,
        name="ring4",
    )


@pytest.fixture(scope="session")
def heavyhex27():
    return load_device("heavyhex27")


@pytest.fixture(scope="session")
def heavyhex65():
    return load_device("heavyhex65")


@pytest.fixture(scope="session")
def ug27_m4(heavyhex27):
    return generate_compute_units(heavyhex27, 4)


@pytest.fixture(scope="session")
def ug65_m4(heavyhex65):
    return generate_compute_units(heavyhex65, 4)


@pytest.fixture(scope="session")
def small_suite():
    """Benchmark names simulable at acceptance scale (all of the bundled set)."""
    return [n for n in suite() if load_benchmark(n).num_qubits <= 10]
