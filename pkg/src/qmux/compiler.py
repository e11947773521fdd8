"""Region-confined layout, routing, and multi-version compilation.

Each candidate region gets its own compiled executable: an initial layout
chosen by interaction-aware placement refined with forward/reverse routing
passes, then a greedy swap-insertion pass that never leaves the region. SWAPs
are emitted as their 3-CNOT expansion so depth and error accounting see the
real gate load. Executables are ranked by (output/input depth ratio, region
utility): cheapest first, ties won by the better-connected region.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass

from .circuits import Circuit, Gate, decompose_swaps, gate_list_depth
from .devices import DeviceGraph, qubit_utility
from .errors import CompileError, PartitionError
from .partition import Region, UnitGraph, enumerate_regions

_LOOKAHEAD = 20
_EXTENDED_WEIGHT = 0.5
_DECAY_STEP = 0.001
_REFINEMENT_PASSES = 3


@dataclass(frozen=True)
class Executable:
    """One compiled version of a program, pinned to a region."""

    program_name: str
    num_qubits: int
    region: Region
    layout: tuple[int, ...]
    final_layout: tuple[int, ...]
    routed_gates: tuple[Gate, ...]
    swap_count: int
    d_in: int
    d_out: int
    region_utility: float

    @property
    def depth_ratio(self) -> float:
        return self.d_out / self.d_in

    @property
    def cost(self) -> tuple[float, float]:
        return (self.depth_ratio, self.region_utility)


def cost_sort_key(executable: Executable) -> tuple[float, float]:
    """Ascending depth ratio; equal ratios prefer the higher-utility region."""
    return (executable.depth_ratio, -executable.region_utility)


@dataclass(frozen=True)
class Process:
    """All executable versions of one program, cost-ascending."""

    program_name: str
    num_qubits: int
    executables: tuple[Executable, ...]

    def __post_init__(self):
        if not self.executables:
            raise CompileError(f"process {self.program_name!r} has no executables")


@dataclass(frozen=True)
class RoutedCircuit:
    gates: tuple[Gate, ...]
    final_layout: tuple[int, ...]
    swap_count: int


class _RegionContext:
    """Region-local adjacency and error-weighted all-pairs distances."""

    def __init__(self, region: Region, device: DeviceGraph):
        self.qubits = sorted(region.qubits)
        self.device = device
        self.adj: dict[int, list[int]] = {q: [] for q in self.qubits}
        self.edges: list[tuple[int, int]] = []
        for a, b in device.links:
            if a in region.qubits and b in region.qubits:
                self.adj[a].append(b)
                self.adj[b].append(a)
                self.edges.append((a, b))
        self.dist = {q: self._dijkstra(q) for q in self.qubits}

    def _edge_weight(self, a: int, b: int) -> float:
        # -ln(1 - e): low-error links are shorter, so routes prefer them.
        return -math.log1p(-self.device.error_of(a, b))

    def _dijkstra(self, src: int) -> dict[int, float]:
        dist = {src: 0.0}
        heap = [(0.0, src)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist.get(v, math.inf):
                continue
            for u in self.adj[v]:
                nd = d + self._edge_weight(v, u)
                if nd < dist.get(u, math.inf):
                    dist[u] = nd
                    heapq.heappush(heap, (nd, u))
        return dist

    def adjacent(self, a: int, b: int) -> bool:
        return b in self.adj[a]


def _interactions(gates) -> dict[int, dict[int, int]]:
    inter: dict[int, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    for g in gates:
        if g.is_two_qubit:
            a, b = g.qubits
            inter[a][b] += 1
            inter[b][a] += 1
    return inter


def _seed_layout(circuit: Circuit, ctx: _RegionContext) -> list[int]:
    """Interaction-BFS placement onto high-utility region qubits."""
    k = circuit.num_qubits
    inter = _interactions(circuit.gates)
    util = {p: qubit_utility(ctx.device, p) for p in ctx.qubits}

    order: list[int] = []
    placed: set[int] = set()
    while len(order) < k:
        cands = [q for q in range(k) if q not in placed]
        attached = [q for q in cands if any(p in placed for p in inter[q])]
        if order and attached:
            nxt = max(attached, key=lambda q: (sum(inter[q][p] for p in placed), -q))
        else:
            nxt = max(cands, key=lambda q: (sum(inter[q].values()), -q))
        order.append(nxt)
        placed.add(nxt)

    homes: dict[int, int] = {}
    used: set[int] = set()
    for q in order:
        free = [p for p in ctx.qubits if p not in used]
        partners = [homes[p] for p in inter[q] if p in homes]
        if partners:
            def score(p: int):
                links = sum(1 for pp in partners if ctx.adjacent(p, pp))
                spread = sum(ctx.dist[p][pp] for pp in partners)
                return (-links, spread, -util[p], p)

            best = min(free, key=score)
        else:
            best = max(free, key=lambda p: (util[p], -p))
        homes[q] = best
        used.add(best)
    return [homes[q] for q in range(k)]


def _route_gates(gates, layout: list[int], ctx: _RegionContext) -> RoutedCircuit:
    """Greedy swap-insertion routing of an already-placed gate list."""
    layout = list(layout)
    p2l = {p: l for l, p in enumerate(layout)}

    n = len(gates)
    last_on: dict[int, int] = {}
    succs: list[list[int]] = [[] for _ in range(n)]
    blockers = [0] * n
    for i, g in enumerate(gates):
        for q in g.qubits:
            if q in last_on:
                succs[last_on[q]].append(i)
                blockers[i] += 1
            last_on[q] = i
    front = sorted(i for i in range(n) if blockers[i] == 0)

    out: list[Gate] = []
    done = [False] * n
    swaps = 0
    decay: dict[tuple[int, int], float] = defaultdict(float)
    guard = 100 * (n + 10)
    # Swaps since the last executed gate; past this, heuristic scoring has
    # livelocked and one blocked gate gets walked home along a shortest path.
    stuck = 0
    stuck_limit = 2 * len(ctx.qubits) + 4

    def emit(i: int):
        g = gates[i]
        out.append(Gate(g.name, tuple(layout[q] for q in g.qubits), g.params))
        done[i] = True
        for s in succs[i]:
            blockers[s] -= 1
            if blockers[s] == 0:
                front.append(s)
        front.sort()

    def do_swap(p0: int, p1: int):
        nonlocal swaps
        out.extend((Gate("cx", (p0, p1)), Gate("cx", (p1, p0)), Gate("cx", (p0, p1))))
        l0, l1 = p2l.pop(p0, None), p2l.pop(p1, None)
        if l0 is not None:
            layout[l0] = p1
            p2l[p1] = l0
        if l1 is not None:
            layout[l1] = p0
            p2l[p0] = l1
        swaps += 1
        if swaps > guard:
            raise CompileError("routing failed to converge")

    while front:
        progressed = True
        while progressed:
            progressed = False
            for i in list(front):
                g = gates[i]
                if g.is_two_qubit and not ctx.adjacent(layout[g.qubits[0]], layout[g.qubits[1]]):
                    continue
                front.remove(i)
                emit(i)
                progressed = True
                stuck = 0
                decay.clear()
        if not front:
            break

        if stuck >= stuck_limit:
            # Deterministic bail-out: march the oldest blocked pair together.
            g = gates[front[0]]
            pa, pb = layout[g.qubits[0]], layout[g.qubits[1]]
            while not ctx.adjacent(pa, pb):
                step = min(ctx.adj[pa], key=lambda u: (ctx.dist[u][pb], u))
                do_swap(pa, step)
                pa = step
            stuck = 0
            continue

        blocked = [gates[i] for i in front]
        extended: list[Gate] = []
        for i in range(n):
            if len(extended) >= _LOOKAHEAD:
                break
            if not done[i] and i not in front and gates[i].is_two_qubit:
                extended.append(gates[i])

        hot = {layout[q] for g in blocked for q in g.qubits}
        candidates = sorted(e for e in ctx.edges if e[0] in hot or e[1] in hot)

        def score(edge: tuple[int, int]) -> float:
            p0, p1 = edge

            def phys(l: int) -> int:
                p = layout[l]
                if p == p0:
                    return p1
                if p == p1:
                    return p0
                return p

            total = decay[edge]
            for g in blocked:
                total += ctx.dist[phys(g.qubits[0])][phys(g.qubits[1])]
            for g in extended:
                total += _EXTENDED_WEIGHT * ctx.dist[phys(g.qubits[0])][phys(g.qubits[1])]
            return total

        best = min(candidates, key=score)
        do_swap(*best)
        decay[best] += _DECAY_STEP
        stuck += 1

    return RoutedCircuit(tuple(out), tuple(layout), swaps)


def initial_layout(circuit: Circuit, region: Region, device: DeviceGraph) -> tuple[int, ...]:
    """Pick starting homes for the logical qubits of `circuit` inside `region`.

    A greedy interaction-aware seed is refined by routing the circuit forward
    and backward three times, keeping the layout each traversal ends with, so
    the final placement reflects how the whole circuit moves qubits around.
    """
    if circuit.num_qubits > len(region.qubits):
        raise CompileError(
            f"{circuit.name!r} needs {circuit.num_qubits} qubits, region has {len(region.qubits)}"
        )
    src = decompose_swaps(circuit)
    ctx = _RegionContext(region, device)
    layout = _seed_layout(src, ctx)
    forward = list(src.gates)
    backward = forward[::-1]
    for _ in range(_REFINEMENT_PASSES):
        layout = list(_route_gates(forward, layout, ctx).final_layout)
        layout = list(_route_gates(backward, layout, ctx).final_layout)
    return tuple(layout)


def route(
    circuit: Circuit, region: Region, device: DeviceGraph, layout: tuple[int, ...]
) -> RoutedCircuit:
    """Route `circuit` from `layout`, inserting region-local SWAPs as 3 CNOTs."""
    src = decompose_swaps(circuit)
    ctx = _RegionContext(region, device)
    for l, p in enumerate(layout):
        if p not in region.qubits:
            raise CompileError(f"layout places logical {l} on {p}, outside the region")
    return _route_gates(list(src.gates), list(layout), ctx)


def region_utility(region: Region, device: DeviceGraph) -> float:
    return sum(qubit_utility(device, q) for q in sorted(region.qubits))


def compile_on_region(circuit: Circuit, region: Region, device: DeviceGraph) -> Executable:
    """Compile one program onto one region and price the result."""
    if not circuit.gates:
        raise CompileError(f"{circuit.name!r} has no gates to compile")
    src = decompose_swaps(circuit)
    d_in = gate_list_depth(src.gates)
    layout = initial_layout(circuit, region, device)
    routed = route(circuit, region, device, layout)
    return Executable(
        program_name=circuit.name,
        num_qubits=circuit.num_qubits,
        region=region,
        layout=layout,
        final_layout=routed.final_layout,
        routed_gates=routed.gates,
        swap_count=routed.swap_count,
        d_in=d_in,
        d_out=gate_list_depth(routed.gates),
        region_utility=region_utility(region, device),
    )


def compile_multi_version(circuit: Circuit, unit_graph: UnitGraph) -> Process:
    """Compile a program onto every feasible candidate region.

    The number of units per region is ceil(k / m) for a k-qubit program;
    regions too small to host the program (for instance ones containing the
    residual unit) are skipped. The resulting executables come back
    cost-ascending.
    """
    k = circuit.num_qubits
    m = unit_graph.unit_size
    r = math.ceil(k / m)
    try:
        regions = enumerate_regions(unit_graph, r)
    except PartitionError as exc:
        raise CompileError(f"no feasible region for {circuit.name!r}: {exc}") from exc
    fitting = [rg for rg in regions if len(rg.qubits) >= k]
    if not fitting:
        raise CompileError(
            f"no feasible region for {circuit.name!r}: needs {k} qubits in {r} unit(s)"
        )
    executables = sorted(
        (compile_on_region(circuit, rg, unit_graph.device) for rg in fitting),
        key=cost_sort_key,
    )
    return Process(circuit.name, k, tuple(executables))
