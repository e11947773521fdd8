"""Calibrated device graphs and day-to-day error-rate variation.

A device is an undirected connected graph of physical qubits whose links carry
calibrated two-qubit error rates. Qubit utility rewards well-connected qubits
with reliable links: degree divided by the summed error of incident links.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import CalibrationError

_EDGE_CAP = 0.999  # varied link errors stay inside (0, 1)


def _norm_link(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class DeviceGraph:
    """Connected undirected graph of physical qubits with calibration data."""

    num_qubits: int
    links: tuple[tuple[int, int], ...]
    link_error: dict[tuple[int, int], float]
    qubit_error: tuple[float, ...]
    readout_error: tuple[float, ...]
    name: str = "device"

    def __post_init__(self):
        n = self.num_qubits
        if n < 1:
            raise CalibrationError("device needs at least one qubit")
        seen: set[tuple[int, int]] = set()
        for a, b in self.links:
            if a == b:
                raise CalibrationError(f"self-link on qubit {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise CalibrationError(f"link ({a},{b}) endpoint outside device")
            key = _norm_link(a, b)
            if key in seen:
                raise CalibrationError(f"duplicate link {key}")
            seen.add(key)
            err = self.link_error.get(key)
            if err is None:
                raise CalibrationError(f"link {key} has no error rate")
            if not (0.0 < err < 1.0):
                raise CalibrationError(f"link {key} error {err} outside (0, 1)")
        if len(self.qubit_error) != n or len(self.readout_error) != n:
            raise CalibrationError("per-qubit error arrays must have one entry per qubit")
        for label, rates in (("qubit", self.qubit_error), ("readout", self.readout_error)):
            for q, p in enumerate(rates):
                if not (0.0 <= p < 1.0):
                    raise CalibrationError(f"{label} error {p} on qubit {q} outside [0, 1)")
        if n > 1:
            if not self._connected():
                raise CalibrationError("device topology is disconnected")

    def _connected(self) -> bool:
        adj = self.adjacency
        seen = {0}
        stack = [0]
        while stack:
            for u in adj[stack.pop()]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.num_qubits

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.num_qubits)]
        for a, b in self.links:
            out[a].append(b)
            out[b].append(a)
        return tuple(tuple(sorted(v)) for v in out)

    def neighbors(self, q: int) -> tuple[int, ...]:
        return self.adjacency[q]

    def error_of(self, a: int, b: int) -> float:
        return self.link_error[_norm_link(a, b)]

    def has_link(self, a: int, b: int) -> bool:
        return _norm_link(a, b) in self.link_error


def load_calibration(path: str | Path) -> DeviceGraph:
    """Load a calibration JSON file into a validated DeviceGraph.

    Expected schema: num_qubits, links as [a, b, error] triples, qubit_errors,
    readout_errors.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{path.name}: not valid JSON ({exc})") from exc
    for field_name in ("num_qubits", "links", "qubit_errors", "readout_errors"):
        if field_name not in raw:
            raise CalibrationError(f"{path.name}: missing field {field_name!r}")
    links: list[tuple[int, int]] = []
    link_error: dict[tuple[int, int], float] = {}
    for entry in raw["links"]:
        if len(entry) != 3:
            raise CalibrationError(f"{path.name}: link entry {entry!r} is not [a, b, error]")
        a, b, err = int(entry[0]), int(entry[1]), float(entry[2])
        if not (0.0 < err < 1.0):
            raise CalibrationError(
                f"{path.name}: probability out of range on link ({a}, {b}): {err}"
            )
        key = _norm_link(a, b)
        if key in link_error:
            raise CalibrationError(f"{path.name}: duplicate link {key}")
        links.append(key)
        link_error[key] = err
    for label in ("qubit_errors", "readout_errors"):
        for q, p in enumerate(raw[label]):
            if not (0.0 <= float(p) < 1.0):
                raise CalibrationError(
                    f"{path.name}: probability out of range in {label}[{q}]: {p}"
                )
    return DeviceGraph(
        num_qubits=int(raw["num_qubits"]),
        links=tuple(sorted(links)),
        link_error=link_error,
        qubit_error=tuple(float(p) for p in raw["qubit_errors"]),
        readout_error=tuple(float(p) for p in raw["readout_errors"]),
        name=raw.get("name", path.stem),
    )


def save_calibration(device: DeviceGraph, path: str | Path) -> None:
    payload = {
        "name": device.name,
        "num_qubits": device.num_qubits,
        "links": [[a, b, device.link_error[(a, b)]] for a, b in device.links],
        "qubit_errors": list(device.qubit_error),
        "readout_errors": list(device.readout_error),
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def qubit_utility(device: DeviceGraph, q: int) -> float:
    """Degree over summed incident link error; isolated qubits score 0."""
    incident = device.neighbors(q)
    if not incident:
        return 0.0
    total = sum(device.error_of(q, u) for u in incident)
    return len(incident) / total


def utilities(device: DeviceGraph) -> tuple[float, ...]:
    return tuple(qubit_utility(device, q) for q in range(device.num_qubits))


@dataclass(frozen=True)
class CrosstalkMap:
    """Links flagged as crosstalk-prone, with their error amplification factors."""

    amplification: dict[tuple[int, int], float]

    def __post_init__(self):
        normalized = {}
        for (a, b), f in self.amplification.items():
            if f < 1.0:
                raise CalibrationError(f"crosstalk factor {f} on {(a, b)} below 1")
            normalized[_norm_link(a, b)] = float(f)
        object.__setattr__(self, "amplification", normalized)

    @property
    def flagged(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.amplification)

    def factor(self, a: int, b: int) -> float:
        return self.amplification.get(_norm_link(a, b), 1.0)


@dataclass(frozen=True)
class VariationModel:
    """Log-normal multiplicative model of day-to-day link-error drift."""

    mu: float
    sigma: float
    seed: int = 0

    def __post_init__(self):
        # sigma 0 is the exact no-drift model; negative spreads are nonsense.
        if self.sigma < 0:
            raise CalibrationError("variation sigma must be non-negative")


def apply_variation(device: DeviceGraph, model: VariationModel) -> DeviceGraph:
    """Scale every link error by an independent log-normal draw.

    Draws are assigned to links in sorted order, so a given seed always
    produces the same varied device. Scaled errors are clamped into
    (0, 0.999].
    """
    rng = np.random.default_rng(model.seed)
    factors = rng.lognormal(model.mu, model.sigma, size=len(device.links))
    varied = {}
    for (a, b), f in zip(device.links, factors):
        varied[(a, b)] = min(device.link_error[(a, b)] * float(f), _EDGE_CAP)
    return DeviceGraph(
        num_qubits=device.num_qubits,
        links=device.links,
        link_error=varied,
        qubit_error=device.qubit_error,
        readout_error=device.readout_error,
        name=device.name,
    )


def fit_lognormal(samples, seed: int = 0) -> VariationModel:
    """Maximum-likelihood log-normal fit of positive scale factors.

    mu is the mean of the logs and sigma their population standard deviation.
    A degenerate sample (all values equal) gets a machine-epsilon sigma floor
    and a warning rather than an invalid model.
    """
    values = np.asarray(list(samples), dtype=float)
    if values.size < 2:
        raise CalibrationError("need at least two samples to fit a variation model")
    if np.any(values <= 0):
        raise CalibrationError("scale factors must be positive")
    logs = np.log(values)
    mu = float(np.mean(logs))
    sigma = float(np.std(logs))
    if sigma == 0.0:
        warnings.warn("degenerate variation sample; sigma floored at machine epsilon")
        sigma = float(np.finfo(float).eps)
    return VariationModel(mu=mu, sigma=sigma, seed=seed)
