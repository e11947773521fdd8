"""Experiment harness: groups, mode comparisons, sweeps, serialization, CLI."""

import csv
import json

import pytest

from qmux.benchmarks import load_benchmark
from qmux.cli import main
from qmux.compiler import compile_multi_version
from qmux.devices import CrosstalkMap
from qmux.harness import (
    BenchmarkGroup,
    ExperimentReport,
    GroupRecord,
    crosstalk_violations,
    generate_groups,
    nested_prefix_groups,
    run_fidelity_experiment,
    run_sweep,
    sample_crosstalk_map,
    success_ratio,
)
from qmux.orchestrator import select_heuristic
from qmux.partition import generate_compute_units
from qmux.serialize import (
    executable_from_dict,
    executable_to_dict,
    load_crosstalk_map,
    load_processes,
    process_from_dict,
    process_to_dict,
    save_crosstalk_map,
    save_processes,
    selection_to_dict,
)

CSV_SCHEMA = [
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
]


@pytest.fixture(scope="module")
def trio(heavyhex27, small_suite):
    """One M=3 workload evaluated under all three execution modes."""
    groups = generate_groups(small_suite, 3, 10, seed=9)
    reports = {
        mode: run_fidelity_experiment(
            groups, heavyhex27, 4, mode=mode, shots=2**12, seed=1
        )
        for mode in ("flamenco", "vanilla", "oracle")
    }
    return groups, reports


def _paired_means(a: ExperimentReport, b: ExperimentReport):
    common = [
        r.group_id
        for r in a.successes()
        if b.records[r.group_id].success
    ]
    assert common
    ma = sum(a.records[i].mean_fidelity for i in common) / len(common)
    mb = sum(b.records[i].mean_fidelity for i in common) / len(common)
    return ma, mb


def test_full_suite_single_group(small_suite):
    groups = generate_groups(small_suite, len(small_suite), 1, seed=0)
    assert len(groups) == 1
    assert sorted(groups[0].members) == sorted(small_suite)
    with pytest.raises(ValueError, match="only 1 distinct"):
        generate_groups(small_suite, len(small_suite), 2, seed=0)


def test_thirty_distinct_pairs(small_suite):
    assert len(small_suite) == 30
    groups = generate_groups(small_suite, 2, 30, seed=4)
    assert len(groups) == 30
    assert len({g.members for g in groups}) == 30
    for g in groups:
        assert g.size == 2
        assert set(g.members) <= set(small_suite)


def test_group_generation_deterministic(small_suite):
    a = generate_groups(small_suite, 3, 12, seed=8)
    b = generate_groups(small_suite, 3, 12, seed=8)
    assert a == b
    assert [g.group_id for g in a] == list(range(12))


def test_group_validation(small_suite):
    with pytest.raises(ValueError, match="need 2"):
        BenchmarkGroup(0, ("adder_n4",))
    with pytest.raises(ValueError, match="repeats"):
        BenchmarkGroup(0, ("adder_n4", "adder_n4"))
    with pytest.raises(ValueError, match="exceeds suite size"):
        generate_groups(small_suite, 31, 1, seed=0)


def test_nested_prefix_groups_structure(small_suite):
    nested = nested_prefix_groups(small_suite, (2, 4, 6), 5, seed=3)
    assert sorted(nested) == [2, 4, 6]
    for size, groups in nested.items():
        assert [g.group_id for g in groups] == list(range(5))
        assert all(g.size == size for g in groups)
    for i in range(5):
        big = nested[6][i].members
        assert nested[2][i].members == big[:2]
        assert nested[4][i].members == big[:4]


def test_oracle_tops_concurrent_execution(trio):
    _, reports = trio
    oracle_mean, flamenco_mean = _paired_means(reports["oracle"], reports["flamenco"])
    assert oracle_mean >= flamenco_mean
    assert 0.85 < flamenco_mean < oracle_mean < 1.0
    assert success_ratio(reports["oracle"]) == 1.0


def test_cost_aware_selection_beats_random(trio):
    _, reports = trio
    assert reports["flamenco"].mean_fidelity >= reports["vanilla"].mean_fidelity
    flamenco_mean, vanilla_mean = _paired_means(reports["flamenco"], reports["vanilla"])
    assert flamenco_mean >= vanilla_mean


def test_failures_recorded_not_dropped(trio):
    groups, reports = trio
    flamenco = reports["flamenco"]
    assert [r.group_id for r in flamenco.records] == [g.group_id for g in groups]
    assert [r.members for r in flamenco.records] == [g.members for g in groups]
    failures = [r for r in flamenco.records if not r.success]
    assert failures, "expected at least one conflicting group at M=3"
    for r in failures:
        assert r.error.startswith("selection:")
        assert not r.fidelities
        assert r.mean_fidelity is None
    assert success_ratio(flamenco) == pytest.approx(
        1 - len(failures) / len(flamenco.records)
    )


def test_oracle_mode_bypasses_orchestration(trio):
    _, reports = trio
    for r in reports["oracle"].records:
        assert r.success
        assert r.strategy == "none"
        assert r.index_sum == len(r.members)


def test_experiment_deterministic(trio, heavyhex27, small_suite):
    groups, reports = trio
    again = run_fidelity_experiment(
        groups, heavyhex27, 4, mode="vanilla", shots=2**12, seed=1
    )
    for r1, r2 in zip(reports["vanilla"].records, again.records):
        assert r1.success == r2.success
        assert r1.fidelities == r2.fidelities
        assert r1.index_sum == r2.index_sum
        assert r1.regions == r2.regions


def test_greedy_success_implies_exhaustive_success(trio, heavyhex27):
    groups, reports = trio
    brute = run_fidelity_experiment(
        groups, heavyhex27, 4, mode="flamenco", strategy="brute_force", shots=2**12, seed=1
    )
    for greedy_rec, brute_rec in zip(reports["flamenco"].records, brute.records):
        if greedy_rec.success:
            assert brute_rec.success
            assert brute_rec.index_sum <= greedy_rec.index_sum


def _fake_report(n_success: int, n_total: int) -> ExperimentReport:
    records = tuple(
        GroupRecord(
            group_id=i,
            members=("a", "b"),
            mode="flamenco",
            strategy="small_first",
            unit_size=4,
            shots=1,
            seed=0,
            success=i < n_success,
        )
        for i in range(n_total)
    )
    return ExperimentReport(records, "flamenco", "small_first", "dev", 4, 1, 0)


def test_success_ratio_arithmetic():
    assert success_ratio(_fake_report(8, 30)) == pytest.approx(0.2667, abs=5e-5)
    assert success_ratio(_fake_report(26, 30)) == pytest.approx(26 / 30)
    assert success_ratio(_fake_report(5, 5)) == 1.0
    with pytest.raises(ValueError):
        success_ratio(ExperimentReport((), "flamenco", "small_first", "dev", 4, 1, 0))


def test_unit_size_sweep_parameter_rows(heavyhex27, small_suite):
    report = run_sweep(
        "unit_size",
        heavyhex27,
        small_suite,
        group_size=2,
        group_count=2,
        shots=64,
        seed=5,
        unit_sizes=range(2, 13),
    )
    assert report.params() == [float(m) for m in range(2, 13)]
    assert len(report.rows) == 11 * 2
    seen = {(row.param, row.record.group_id) for row in report.rows}
    assert len(seen) == len(report.rows)


def test_variation_sigma_zero_matches_unswept(heavyhex27, small_suite):
    sweep = run_sweep(
        "variation",
        heavyhex27,
        small_suite,
        unit_size=4,
        group_size=2,
        group_count=3,
        shots=256,
        seed=13,
        sigmas=(0.0,),
    )
    groups = generate_groups(small_suite, 2, 3, seed=13)
    direct = run_fidelity_experiment(groups, heavyhex27, 4, shots=256, seed=13)
    swept = sweep.records_at(0.0)
    assert len(swept) == len(direct.records) == 3
    for a, b in zip(swept, direct.records):
        assert a.success == b.success
        assert a.fidelities == b.fidelities


def test_crosstalk_sweep_filter_audit(heavyhex27, small_suite, tmp_path):
    report = run_sweep(
        "crosstalk",
        heavyhex27,
        small_suite,
        unit_size=4,
        group_size=3,
        group_count=3,
        shots=256,
        seed=11,
        crosstalk_seed=7,
    )
    assert report.params() == [0.0, 1.0]
    xmap = sample_crosstalk_map(generate_compute_units(heavyhex27, 4), seed=7)
    for record in report.records_at(1.0):
        if record.success:
            assert crosstalk_violations(record, xmap) == 0

    csv_path = tmp_path / "sweep.csv"
    report.write_csv(str(csv_path))
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_SCHEMA
    assert len(rows) == 1 + len(report.rows)

    json_path = tmp_path / "sweep.json"
    report.write_json(str(json_path))
    summary = json.loads(json_path.read_text())
    assert summary["kind"] == "crosstalk"
    assert [entry["param"] for entry in summary["per_param"]] == [0.0, 1.0]
    for entry in summary["per_param"]:
        assert {"param", "groups", "success_ratio", "mean_fidelity"} <= set(entry)


def test_serialization_roundtrips(ug27_m4, tmp_path):
    process = compile_multi_version(load_benchmark("adder_n4"), ug27_m4)
    exe = process.executables[0]
    assert executable_from_dict(executable_to_dict(exe)) == exe
    assert process_from_dict(process_to_dict(process)) == process

    manifest = tmp_path / "adder_n4.process.json"
    save_processes(str(manifest), [process])
    assert load_processes(str(manifest)) == [process]

    xmap = CrosstalkMap({(0, 1): 2.5, (5, 8): 4.0})
    xpath = tmp_path / "xtalk.json"
    save_crosstalk_map(str(xpath), xmap)
    assert load_crosstalk_map(str(xpath)) == xmap

    selection = select_heuristic([process])
    payload = selection_to_dict(selection)
    assert payload["index_sum"] == 1
    assert payload["chosen"][0]["program_name"] == "adder_n4"
    json.dumps(payload)


def test_cli_partition_and_compile(tmp_path):
    part_out = tmp_path / "units.json"
    assert main(
        ["partition", "--device", "heavyhex27", "-m", "4", "--regions", "2", "--out", str(part_out)]
    ) == 0
    payload = json.loads(part_out.read_text())
    assert len(payload["units"]) == 7
    assert sum(u["residual"] for u in payload["units"]) == 1
    assert payload["regions"]

    out_dir = tmp_path / "compiled"
    assert main(
        ["compile", "wstate_n3", "--device", "heavyhex27", "-m", "4", "-o", str(out_dir)]
    ) == 0
    manifest = out_dir / "wstate_n3.process.json"
    assert manifest.exists()
    assert len(load_processes(str(manifest))[0].executables) == 6
    assert len(list(out_dir.glob("wstate_n3.r*.exe.json"))) == 6


def test_cli_orchestrate_and_run(tmp_path):
    out_dir = tmp_path / "compiled"
    for name in ("wstate_n3", "fredkin_n3"):
        assert main(
            ["compile", name, "--device", "heavyhex27", "-m", "4", "-o", str(out_dir)]
        ) == 0
    manifests = [str(out_dir / f"{n}.process.json") for n in ("wstate_n3", "fredkin_n3")]

    sel_out = tmp_path / "selection.json"
    assert main(["orchestrate", *manifests, "--out", str(sel_out)]) == 0
    selection = json.loads(sel_out.read_text())
    assert selection["index_sum"] >= 2
    assert len(selection["chosen"]) == 2

    run_out = tmp_path / "run.json"
    assert main(
        [
            "run",
            manifests[0],
            "--device",
            "heavyhex27",
            "--shots",
            "512",
            "--out",
            str(run_out),
        ]
    ) == 0
    results = json.loads(run_out.read_text())["results"]
    assert len(results) == 1
    assert 0.0 <= results[0]["fidelity_vs_ideal"] <= 1.0


def test_cli_bench_and_errors(tmp_path):
    prefix = tmp_path / "bench"
    assert main(
        [
            "bench",
            "--kind",
            "variation",
            "--device",
            "heavyhex27",
            "-m",
            "4",
            "--groups",
            "2",
            "--group-size",
            "2",
            "--shots",
            "64",
            "--seed",
            "3",
            "--suite",
            "wstate_n3",
            "adder_n4",
            "fredkin_n3",
            "qec_en_n5",
            "--out",
            str(prefix),
        ]
    ) == 0
    assert (tmp_path / "bench.csv").exists()
    assert json.loads((tmp_path / "bench.json").read_text())["kind"] == "variation"

    assert main(["partition", "--device", "no-such-device", "-m", "4"]) == 1
