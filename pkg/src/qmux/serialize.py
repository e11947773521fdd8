"""JSON persistence for compiled processes, selections, and crosstalk maps.

Lets compilation run once offline and selection consume the stored processes
later, which is the whole point of splitting the two phases.
"""

from __future__ import annotations

import json

from .circuits import Gate
from .compiler import Executable, Process
from .devices import CrosstalkMap
from .errors import QmuxError
from .orchestrator import Selection
from .partition import Region

_FORMAT = "qmux-processes-v1"
_EXE_FORMAT = "qmux-executable-v1"


def _gate_to_list(g: Gate) -> list:
    return [g.name, list(g.qubits), list(g.params)]


def _gate_from_list(item: list) -> Gate:
    name, qubits, params = item
    return Gate(name, tuple(qubits), tuple(params))


def executable_to_dict(exe: Executable) -> dict:
    return {
        "program_name": exe.program_name,
        "num_qubits": exe.num_qubits,
        "region": {
            "unit_ids": sorted(exe.region.unit_ids),
            "qubits": sorted(exe.region.qubits),
        },
        "layout": list(exe.layout),
        "final_layout": list(exe.final_layout),
        "routed_gates": [_gate_to_list(g) for g in exe.routed_gates],
        "swap_count": exe.swap_count,
        "d_in": exe.d_in,
        "d_out": exe.d_out,
        "region_utility": exe.region_utility,
    }


def executable_from_dict(data: dict) -> Executable:
    try:
        region = Region(
            unit_ids=frozenset(data["region"]["unit_ids"]),
            qubits=frozenset(data["region"]["qubits"]),
        )
        return Executable(
            program_name=data["program_name"],
            num_qubits=data["num_qubits"],
            region=region,
            layout=tuple(data["layout"]),
            final_layout=tuple(data["final_layout"]),
            routed_gates=tuple(_gate_from_list(g) for g in data["routed_gates"]),
            swap_count=data["swap_count"],
            d_in=data["d_in"],
            d_out=data["d_out"],
            region_utility=data["region_utility"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise QmuxError(f"malformed executable record: {exc}") from exc


def process_to_dict(process: Process) -> dict:
    return {
        "program_name": process.program_name,
        "num_qubits": process.num_qubits,
        "executables": [executable_to_dict(e) for e in process.executables],
    }


def process_from_dict(data: dict) -> Process:
    try:
        return Process(
            program_name=data["program_name"],
            num_qubits=data["num_qubits"],
            executables=tuple(executable_from_dict(e) for e in data["executables"]),
        )
    except (KeyError, TypeError) as exc:
        raise QmuxError(f"malformed process record: {exc}") from exc


def save_processes(path: str, processes: list[Process]) -> None:
    payload = {
        "format": _FORMAT,
        "processes": [process_to_dict(p) for p in processes],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_processes(path: str) -> list[Process]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != _FORMAT:
        raise QmuxError(f"{path}: not a {_FORMAT} file")
    return [process_from_dict(p) for p in payload["processes"]]


def save_executable(path: str, exe: Executable) -> None:
    payload = executable_to_dict(exe)
    payload["format"] = _EXE_FORMAT
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_executables(path: str) -> list[Executable]:
    """Read executables from an artifact or a process manifest.

    A single-executable artifact yields one entry; a process manifest yields
    that process's full cost-ascending list.
    """
    with open(path) as fh:
        payload = json.load(fh)
    kind = payload.get("format")
    if kind == _EXE_FORMAT:
        return [executable_from_dict(payload)]
    if kind == _FORMAT:
        out = []
        for p in payload["processes"]:
            out.extend(executable_from_dict(e) for e in p["executables"])
        return out
    raise QmuxError(f"{path}: not a {_EXE_FORMAT} or {_FORMAT} file")


def selection_to_dict(selection: Selection) -> dict:
    return {
        "strategy": selection.strategy,
        "index_sum": selection.index_sum,
        "evaluations": selection.evaluations,
        "elapsed_s": selection.elapsed_s,
        "timed_out": selection.timed_out,
        "chosen": [
            {
                "program_name": name,
                "index": selection.indices[name],
                "region_qubits": sorted(exe.region.qubits),
                "unit_ids": sorted(exe.region.unit_ids),
                "d_out": exe.d_out,
                "swap_count": exe.swap_count,
            }
            for name, exe in selection.chosen.items()
        ],
    }


def load_crosstalk_map(path: str) -> CrosstalkMap:
    """Read {"flagged": [[a, b, factor], ...]} into a CrosstalkMap."""
    with open(path) as fh:
        payload = json.load(fh)
    try:
        amplification = {(int(a), int(b)): float(f) for a, b, f in payload["flagged"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise QmuxError(f"{path}: malformed crosstalk map: {exc}") from exc
    return CrosstalkMap(amplification)


def save_crosstalk_map(path: str, crosstalk: CrosstalkMap) -> None:
    flagged = [[a, b, f] for (a, b), f in sorted(crosstalk.amplification.items())]
    with open(path, "w") as fh:
        json.dump({"flagged": flagged}, fh, indent=2)
        fh.write("\n")
