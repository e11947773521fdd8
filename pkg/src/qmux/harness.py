"""Experiment harness: benchmark groups, fidelity comparisons, and sweeps.

Reproduces the experiment shapes at desk scale: groups of programs are
compiled into multi-version processes, co-run selections are made per
execution mode, every selected executable is simulated against device noise,
and per-group fidelity records accumulate into reports with CSV and JSON
output. Failures (no region fits, selection conflict, oversized simulation)
are recorded per group, never dropped.

Execution modes:
  flamenco  multi-version compilation plus conflict-aware orchestration,
            using any selection strategy including brute force.
  vanilla   conflict-free but fidelity-blind: each program in submission
            order picks uniformly at random among its feasible versions.
  oracle    no co-running at all; every program runs its rank-1 executable
            alone, the single-program upper bound.
"""

from __future__ import annotations

import csv
import json
import math
import os
import random
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .benchmarks import load_benchmark
from .circuits import Circuit
from .compiler import Process, compile_multi_version
from .devices import CrosstalkMap, DeviceGraph, VariationModel, apply_variation
from .errors import (
    CompileError,
    OrchestrationConflict,
    OrchestrationTimeout,
    QmuxError,
    SimulationError,
)
from .orchestrator import (
    Selection,
    _claims,
    _feasible,
    select_brute_force,
    select_heuristic,
)
from .partition import UnitGraph, generate_compute_units
from .simulator import Distribution, NoiseSpec, fidelity, simulate_ideal, simulate_noisy

MODES = ("flamenco", "vanilla", "oracle")
SWEEP_KINDS = ("unit_size", "concurrency", "variation", "crosstalk")

DEFAULT_SHOTS = 2**14
DEFAULT_GROUPS = 10

_CSV_COLUMNS = (
    "kind",
    "param",
    "group_id",
    "members",
    "mode",
    "strategy",
    "unit_size",
    "shots",
    "seed",
    "success",
    "mean_fidelity",
    "min_fidelity",
    "index_sum",
    "evaluations",
    "selection_elapsed_s",
    "error",
)


@dataclass(frozen=True)
class BenchmarkGroup:
    """A co-run request: distinct benchmark names submitted together."""

    group_id: int
    members: tuple[str, ...]

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError(f"group {self.group_id} has {len(self.members)} member(s); need 2+")
        if len(set(self.members)) != len(self.members):
            raise ValueError(f"group {self.group_id} repeats a member")

    @property
    def size(self) -> int:
        return len(self.members)


def generate_groups(
    suite: Sequence[str], size: int, count: int, seed: int = 0
) -> list[BenchmarkGroup]:
    """Seeded sampling of `count` distinct size-`size` subsets of the suite."""
    names = list(suite)
    if size > len(names):
        raise ValueError(f"group size {size} exceeds suite size {len(names)}")
    if count < 1:
        raise ValueError("need at least one group")
    possible = math.comb(len(names), size)
    if count > possible:
        raise ValueError(f"only {possible} distinct groups of size {size} exist, not {count}")
    rng = random.Random(seed)
    seen: set[tuple[str, ...]] = set()
    groups: list[BenchmarkGroup] = []
    while len(groups) < count:
        pick = tuple(sorted(rng.sample(names, size)))
        if pick in seen:
            continue
        seen.add(pick)
        groups.append(BenchmarkGroup(group_id=len(groups), members=pick))
    return groups


def nested_prefix_groups(
    suite: Sequence[str], sizes: Sequence[int], count: int, seed: int = 0
) -> dict[int, list[BenchmarkGroup]]:
    """Prefix-nested groups for paired concurrency comparisons.

    One master group of the largest size is drawn per id; the size-s variant
    is its first s members. A group at higher concurrency therefore contains
    the same programs plus extras, which is what makes per-id success
    comparisons across sizes meaningful.
    """
    sizes = sorted(set(sizes))
    if not sizes or sizes[0] < 2:
        raise ValueError("sizes must all be at least 2")
    masters = generate_groups(suite, sizes[-1], count, seed)
    # Master members arrive sorted; reshuffle each so prefixes are not biased
    # toward the alphabetical front of the suite.
    rng = random.Random(seed + 1)
    shuffled: list[tuple[str, ...]] = []
    for g in masters:
        members = list(g.members)
        rng.shuffle(members)
        shuffled.append(tuple(members))
    return {
        s: [BenchmarkGroup(i, members[:s]) for i, members in enumerate(shuffled)]
        for s in sizes
    }


@dataclass(frozen=True)
class GroupRecord:
    """Outcome of one benchmark group under one execution mode."""

    group_id: int
    members: tuple[str, ...]
    mode: str
    strategy: str
    unit_size: int
    shots: int
    seed: int
    success: bool
    fidelities: dict[str, float] = field(default_factory=dict)
    regions: dict[str, tuple[int, ...]] = field(default_factory=dict)
    index_sum: int | None = None
    evaluations: int | None = None
    selection_elapsed_s: float | None = None
    error: str | None = None

    @property
    def mean_fidelity(self) -> float | None:
        if not self.fidelities:
            return None
        return sum(self.fidelities.values()) / len(self.fidelities)

    @property
    def min_fidelity(self) -> float | None:
        if not self.fidelities:
            return None
        return min(self.fidelities.values())


@dataclass(frozen=True)
class ExperimentReport:
    """All group records of one experiment configuration."""

    records: tuple[GroupRecord, ...]
    mode: str
    strategy: str
    device_name: str
    unit_size: int
    shots: int
    seed: int

    def successes(self) -> list[GroupRecord]:
        return [r for r in self.records if r.success]

    @property
    def mean_fidelity(self) -> float | None:
        vals = [r.mean_fidelity for r in self.successes() if r.mean_fidelity is not None]
        if not vals:
            return None
        return sum(vals) / len(vals)


def success_ratio(report: ExperimentReport) -> float:
    """Fraction of evaluated groups that co-ran conflict-free to completion."""
    if not report.records:
        raise ValueError("report has no records")
    return len(report.successes()) / len(report.records)


def _derive_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def _select_vanilla(processes: list[Process], seed: int) -> Selection:
    """Conflict-free but fidelity-blind: uniform choice among feasible versions."""
    start = time.perf_counter()
    rng = random.Random(seed)
    chosen, indices = {}, {}
    claimed_units: frozenset[int] = frozenset()
    claimed_qubits: frozenset[int] = frozenset()
    evaluations = 0
    for proc in processes:
        feasible = []
        for rank, exe in enumerate(proc.executables, start=1):
            evaluations += 1
            if _feasible(exe, claimed_units, claimed_qubits, None):
                feasible.append((rank, exe))
        if not feasible:
            raise OrchestrationConflict(proc.program_name)
        rank, exe = rng.choice(feasible)
        chosen[proc.program_name] = exe
        indices[proc.program_name] = rank
        units, qubits = _claims(exe)
        claimed_units |= units
        claimed_qubits |= qubits
    return Selection(chosen, indices, "vanilla", evaluations, time.perf_counter() - start)


class FidelityExperiment:
    """Compiles, selects, and simulates benchmark groups on one device.

    Compilation results are cached per program name, so reusing one instance
    across many groups pays the routing cost once per program.
    """

    def __init__(
        self,
        device: DeviceGraph,
        unit_size: int,
        mode: str = "flamenco",
        strategy: str = "small_first",
        shots: int = DEFAULT_SHOTS,
        seed: int = 0,
        crosstalk: CrosstalkMap | None = None,
        crosstalk_filter: bool = True,
        sim_device: DeviceGraph | None = None,
        circuit_provider: Callable[[str], Circuit] | None = None,
        brute_timeout_s: float = 10.0,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        self.device = device
        self.unit_size = unit_size
        self.mode = mode
        self.strategy = strategy
        self.shots = shots
        self.seed = seed
        self.crosstalk = crosstalk
        self.crosstalk_filter = crosstalk_filter
        self.sim_device = sim_device if sim_device is not None else device
        self.provider = circuit_provider if circuit_provider is not None else load_benchmark
        self.brute_timeout_s = brute_timeout_s
        self.unit_graph: UnitGraph = generate_compute_units(device, unit_size)
        self._processes: dict[str, Process | CompileError] = {}
        self._ideals: dict[str, Distribution] = {}

    def process_for(self, name: str) -> Process:
        cached = self._processes.get(name)
        if cached is None:
            try:
                cached = compile_multi_version(self.provider(name), self.unit_graph)
            except CompileError as exc:
                cached = exc
            self._processes[name] = cached
        if isinstance(cached, CompileError):
            raise cached
        return cached

    def ideal_for(self, name: str) -> Distribution:
        if name not in self._ideals:
            self._ideals[name] = simulate_ideal(self.provider(name))
        return self._ideals[name]

    def _select(self, processes: list[Process], group_seed: int) -> Selection:
        filt = self.crosstalk if self.crosstalk_filter else None
        if self.mode == "vanilla":
            return _select_vanilla(processes, group_seed)
        if self.strategy == "brute_force":
            return select_brute_force(processes, timeout_s=self.brute_timeout_s, crosstalk=filt)
        return select_heuristic(processes, self.strategy, seed=group_seed, crosstalk=filt)

    def run_group(self, group: BenchmarkGroup) -> GroupRecord:
        meta = dict(
            group_id=group.group_id,
            members=group.members,
            mode=self.mode,
            strategy=self.strategy if self.mode != "oracle" else "none",
            unit_size=self.unit_size,
            shots=self.shots,
            seed=self.seed,
        )
        group_seed = _derive_seed(self.seed, group.group_id)
        try:
            processes = [self.process_for(name) for name in group.members]
        except CompileError as exc:
            return GroupRecord(**meta, success=False, error=f"compile: {exc}")

        if self.mode == "oracle":
            chosen = {p.program_name: p.executables[0] for p in processes}
            indices = {p.program_name: 1 for p in processes}
            selection = Selection(chosen, indices, "none", len(processes), 0.0)
            co_claimed: dict[str, frozenset[int]] = {
                name: frozenset() for name in chosen
            }
        else:
            try:
                selection = self._select(processes, group_seed)
            except (OrchestrationConflict, OrchestrationTimeout) as exc:
                return GroupRecord(**meta, success=False, error=f"selection: {exc}")
            all_claims = {
                name: frozenset(exe.region.qubits) for name, exe in selection.chosen.items()
            }
            co_claimed = {
                name: frozenset().union(*(q for other, q in all_claims.items() if other != name))
                if len(all_claims) > 1
                else frozenset()
                for name in all_claims
            }

        fidelities: dict[str, float] = {}
        regions: dict[str, tuple[int, ...]] = {}
        try:
            for idx, name in enumerate(group.members):
                exe = selection.chosen[name]
                spec = NoiseSpec(
                    shots=self.shots,
                    seed=_derive_seed(self.seed, group.group_id, idx),
                    crosstalk=self.crosstalk,
                    co_claimed=co_claimed[name],
                )
                observed = simulate_noisy(exe, spec, self.sim_device)
                fidelities[name] = fidelity(observed, self.ideal_for(name))
                regions[name] = tuple(sorted(exe.region.qubits))
        except SimulationError as exc:
            return GroupRecord(**meta, success=False, error=f"simulation: {exc}")

        return GroupRecord(
            **meta,
            success=True,
            fidelities=fidelities,
            regions=regions,
            index_sum=selection.index_sum,
            evaluations=selection.evaluations,
            selection_elapsed_s=selection.elapsed_s,
        )

    def run(self, groups: Iterable[BenchmarkGroup], workers: int | None = None) -> ExperimentReport:
        groups = list(groups)
        # Warm the compile cache serially; group workers then only simulate.
        for g in groups:
            for name in g.members:
                try:
                    self.process_for(name)
                except CompileError:
                    pass
        n_workers = workers if workers is not None else worker_count()
        if n_workers > 1 and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                records = list(pool.map(self.run_group, groups))
        else:
            records = [self.run_group(g) for g in groups]
        records.sort(key=lambda r: r.group_id)
        return ExperimentReport(
            records=tuple(records),
            mode=self.mode,
            strategy=self.strategy,
            device_name=self.device.name,
            unit_size=self.unit_size,
            shots=self.shots,
            seed=self.seed,
        )


def run_fidelity_experiment(
    groups: Iterable[BenchmarkGroup],
    device: DeviceGraph,
    unit_size: int,
    mode: str = "flamenco",
    strategy: str = "small_first",
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    crosstalk: CrosstalkMap | None = None,
    crosstalk_filter: bool = True,
    sim_device: DeviceGraph | None = None,
    circuit_provider: Callable[[str], Circuit] | None = None,
    workers: int | None = None,
) -> ExperimentReport:
    experiment = FidelityExperiment(
        device,
        unit_size,
        mode=mode,
        strategy=strategy,
        shots=shots,
        seed=seed,
        crosstalk=crosstalk,
        crosstalk_filter=crosstalk_filter,
        sim_device=sim_device,
        circuit_provider=circuit_provider,
    )
    return experiment.run(groups, workers=workers)


def worker_count() -> int:
    """Group-level parallelism, from the QMUX_WORKERS environment variable."""
    raw = os.environ.get("QMUX_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sample_crosstalk_map(
    unit_graph: UnitGraph,
    seed: int = 0,
    flag_probability: float = 0.5,
    factor_range: tuple[float, float] = (2.0, 5.0),
) -> CrosstalkMap:
    """Flag cross-unit links at random with amplification factors in a range.

    Only links joining different compute units are eligible: those are the
    boundaries where co-running programs can sit next to each other. The
    factor range default [2, 5] is a free parameter recorded in the map.
    """
    rng = random.Random(seed)
    lo, hi = factor_range
    if lo < 1.0 or hi < lo:
        raise ValueError("factor range must satisfy 1 <= lo <= hi")
    amplification = {}
    device = unit_graph.device
    for a, b in device.links:
        if unit_graph.qubit_to_unit[a] == unit_graph.qubit_to_unit[b]:
            continue
        if rng.random() < flag_probability:
            amplification[(a, b)] = rng.uniform(lo, hi)
    return CrosstalkMap(amplification)


def crosstalk_violations(record: GroupRecord, crosstalk: CrosstalkMap) -> int:
    """Count flagged links joining two different programs' claimed qubits."""
    names = list(record.regions)
    violations = 0
    for i, a_name in enumerate(names):
        qa = set(record.regions[a_name])
        for b_name in names[i + 1 :]:
            qb = set(record.regions[b_name])
            for u, v in crosstalk.flagged:
                if (u in qa and v in qb) or (v in qa and u in qb):
                    violations += 1
    return violations


@dataclass(frozen=True)
class CorrelationReport:
    """Cost-rank vs simulated-fidelity-rank agreement per program."""

    per_program: dict[str, float]
    mean: float


def cost_fidelity_correlation(
    device: DeviceGraph,
    unit_size: int,
    names: Sequence[str],
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    circuit_provider: Callable[[str], Circuit] | None = None,
) -> CorrelationReport:
    """Spearman correlation between predicted and observed version rankings.

    For each program with at least 3 versions, every executable is simulated
    alone; predicted rank is the position in the cost-ascending list, actual
    rank orders versions by descending simulated fidelity. Positive
    correlation means the cost metric predicts the fidelity ordering.
    """
    provider = circuit_provider if circuit_provider is not None else load_benchmark
    unit_graph = generate_compute_units(device, unit_size)
    per_program: dict[str, float] = {}
    for p_idx, name in enumerate(names):
        circuit = provider(name)
        try:
            process = compile_multi_version(circuit, unit_graph)
        except CompileError:
            continue
        if len(process.executables) < 3:
            continue
        ideal = simulate_ideal(circuit)
        fids = []
        for e_idx, exe in enumerate(process.executables):
            spec = NoiseSpec(shots=shots, seed=_derive_seed(seed, p_idx, e_idx))
            try:
                observed = simulate_noisy(exe, spec, device)
            except SimulationError:
                fids = []
                break
            fids.append(fidelity(observed, ideal))
        if not fids:
            continue
        predicted = np.arange(1, len(fids) + 1)
        actual = stats.rankdata([-f for f in fids], method="average")
        rho = stats.spearmanr(predicted, actual).statistic
        if not math.isnan(rho):
            per_program[name] = float(rho)
    if not per_program:
        raise QmuxError("no program produced 3+ comparable versions")
    mean = sum(per_program.values()) / len(per_program)
    return CorrelationReport(per_program=per_program, mean=mean)


@dataclass(frozen=True)
class SweepRow:
    param: float
    record: GroupRecord


@dataclass(frozen=True)
class SweepReport:
    """Rows of (swept parameter, group record) plus frozen CSV/JSON output."""

    kind: str
    device_name: str
    rows: tuple[SweepRow, ...]

    def params(self) -> list[float]:
        seen: list[float] = []
        for row in self.rows:
            if row.param not in seen:
                seen.append(row.param)
        return seen

    def records_at(self, param: float) -> list[GroupRecord]:
        return [r.record for r in self.rows if r.param == param]

    def summary(self) -> dict:
        per_param = []
        for param in self.params():
            records = self.records_at(param)
            successes = [r for r in records if r.success]
            fids = [r.mean_fidelity for r in successes if r.mean_fidelity is not None]
            per_param.append(
                {
                    "param": param,
                    "groups": len(records),
                    "success_ratio": len(successes) / len(records) if records else 0.0,
                    "mean_fidelity": sum(fids) / len(fids) if fids else None,
                }
            )
        return {"kind": self.kind, "device": self.device_name, "per_param": per_param}

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            for row in self.rows:
                r = row.record
                writer.writerow(
                    [
                        self.kind,
                        row.param,
                        r.group_id,
                        " ".join(r.members),
                        r.mode,
                        r.strategy,
                        r.unit_size,
                        r.shots,
                        r.seed,
                        int(r.success),
                        "" if r.mean_fidelity is None else f"{r.mean_fidelity:.6f}",
                        "" if r.min_fidelity is None else f"{r.min_fidelity:.6f}",
                        "" if r.index_sum is None else r.index_sum,
                        "" if r.evaluations is None else r.evaluations,
                        "" if r.selection_elapsed_s is None else f"{r.selection_elapsed_s:.6f}",
                        r.error or "",
                    ]
                )

    def write_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def run_sweep(
    kind: str,
    device: DeviceGraph,
    suite_names: Sequence[str],
    unit_size: int = 4,
    group_size: int = 2,
    group_count: int = DEFAULT_GROUPS,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    mode: str = "flamenco",
    strategy: str = "small_first",
    unit_sizes: Sequence[int] = (2, 4, 6, 8, 10, 12),
    concurrencies: Sequence[int] = (2, 4, 6, 8, 10),
    sigmas: Sequence[float] = (0.0, 0.05, 0.1, 0.2),
    crosstalk_seed: int = 7,
    circuit_provider: Callable[[str], Circuit] | None = None,
    workers: int | None = None,
) -> SweepReport:
    """Run one parameter sweep and collect per-(value, group) rows.

    unit_size    same groups recompiled at each compute-unit size.
    concurrency  prefix-nested groups so each size adds programs to the last.
    variation    compile on the bundled calibration, simulate on a drifted
                 copy; sigma 0 reproduces the matched run exactly.
    crosstalk    amplified crosstalk on, selection filter off (param 0) then
                 on (param 1), same sampled crosstalk map.
    """
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")
    rows: list[SweepRow] = []

    if kind == "unit_size":
        groups = generate_groups(suite_names, group_size, group_count, seed)
        for m in unit_sizes:
            report = run_fidelity_experiment(
                groups,
                device,
                m,
                mode=mode,
                strategy=strategy,
                shots=shots,
                seed=seed,
                circuit_provider=circuit_provider,
                workers=workers,
            )
            rows.extend(SweepRow(float(m), r) for r in report.records)

    elif kind == "concurrency":
        nested = nested_prefix_groups(suite_names, concurrencies, group_count, seed)
        for size in sorted(nested):
            report = run_fidelity_experiment(
                nested[size],
                device,
                unit_size,
                mode=mode,
                strategy=strategy,
                shots=shots,
                seed=seed,
                circuit_provider=circuit_provider,
                workers=workers,
            )
            rows.extend(SweepRow(float(size), r) for r in report.records)

    elif kind == "variation":
        groups = generate_groups(suite_names, group_size, group_count, seed)
        for sigma in sigmas:
            drifted = apply_variation(
                device, VariationModel(mu=0.0, sigma=sigma, seed=crosstalk_seed)
            )
            report = run_fidelity_experiment(
                groups,
                device,
                unit_size,
                mode=mode,
                strategy=strategy,
                shots=shots,
                seed=seed,
                sim_device=drifted,
                circuit_provider=circuit_provider,
                workers=workers,
            )
            rows.extend(SweepRow(float(sigma), r) for r in report.records)

    else:
        groups = generate_groups(suite_names, group_size, group_count, seed)
        unit_graph = generate_compute_units(device, unit_size)
        xtalk = sample_crosstalk_map(unit_graph, seed=crosstalk_seed)
        for param, filtered in ((0.0, False), (1.0, True)):
            report = run_fidelity_experiment(
                groups,
                device,
                unit_size,
                mode=mode,
                strategy=strategy,
                shots=shots,
                seed=seed,
                crosstalk=xtalk,
                crosstalk_filter=filtered,
                circuit_provider=circuit_provider,
                workers=workers,
            )
            rows.extend(SweepRow(param, r) for r in report.records)

    return SweepReport(kind=kind, device_name=device.name, rows=tuple(rows))
