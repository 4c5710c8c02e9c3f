import json
import os

import pytest

from strandsim.cli import main
from strandsim.manifest import load_manifest, replay_argv


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_synth_market_then_sp_analyze(tmp_path):
    md = tmp_path / "market"
    code = main(["synth-market", "--family", "netprice", "--threshold", "5",
                 "--horizon-days", "30", "--seed", "3", "--out-dir", str(md)])
    assert code == 0
    market_csv = md / "market_synth-np5.csv"
    assert market_csv.exists()
    assert (md / "synth-market_manifest.json").exists()

    ad = tmp_path / "analysis"
    code = main(["sp-analyze", "--market", str(market_csv), "--family", "netprice",
                 "--threshold", "5", "--top-k", "1", "--out-dir", str(ad)])
    assert code == 0
    report = read_json(ad / "sp_report_synth-np5_np5.json")
    assert 0.0 <= report["duty_factor"] <= 1.0
    assert (ad / "sp_histogram_np5.csv").exists()
    assert (ad / "sp_cumulative_np5.csv").exists()


def test_synth_market_calibrated(tmp_path):
    md = tmp_path / "cal"
    code = main(["synth-market", "--family", "lmp", "--threshold", "0",
                 "--calibrate-df", "0.21", "--horizon-days", "365",
                 "--seed", "2", "--out-dir", str(md)])
    assert code == 0
    cfg = read_json(md / "calibrated_config.json")
    assert cfg["negative_price_episode_rate"] > 0

    from strandsim.market import ingest_csv
    from strandsim.stranded import SpModel, detect_intervals, duty_factor
    series = ingest_csv(md / "market_synth-lmp0.csv")["synth-lmp0"]
    df = duty_factor(detect_intervals(series, SpModel.lmp(0)),
                     (series.epoch, series.end))
    assert df == pytest.approx(0.21, abs=0.02)


def test_sp_analyze_missing_file_exits_2(tmp_path):
    code = main(["sp-analyze", "--market", str(tmp_path / "nope.csv"),
                 "--out-dir", str(tmp_path)])
    assert code == 2


def test_bad_flag_value_exits_2(tmp_path):
    code = main(["sp-analyze", "--market", "x.csv", "--threshold", "abc",
                 "--out-dir", str(tmp_path)])
    assert code == 2


def test_workload_gen_then_simulate(tmp_path):
    wd = tmp_path / "wl"
    code = main(["workload-gen", "--horizon-days", "10", "--seed", "4",
                 "--out-dir", str(wd)])
    assert code == 0
    trace = wd / "trace.txt"
    stats = read_json(wd / "trace_stats.json")
    assert stats["target_utilization"] == pytest.approx(0.84, rel=0.01)

    sd = tmp_path / "sim"
    code = main(["simulate", "--trace", str(trace), "--ctr", "1", "--z", "0",
                 "--out-dir", str(sd)])
    assert code == 0
    rows = (sd / "sim_result.csv").read_text().splitlines()
    assert rows[0].startswith("config,")
    assert rows[1].startswith("1Ctr,")


def test_simulate_with_periodic_z(tmp_path):
    wd = tmp_path / "wl"
    main(["workload-gen", "--horizon-days", "6", "--seed", "5", "--out-dir", str(wd)])
    sd = tmp_path / "sim"
    code = main(["simulate", "--trace", str(wd / "trace.txt"), "--ctr", "1",
                 "--z", "1", "--duty-factor", "0.5", "--out-dir", str(sd),
                 "--event-log", str(sd / "events.ndjson")])
    assert code == 0
    assert (sd / "events.ndjson").exists()


def test_simulate_z_without_schedule_exits_2(tmp_path):
    wd = tmp_path / "wl"
    main(["workload-gen", "--horizon-days", "4", "--seed", "5", "--out-dir", str(wd)])
    code = main(["simulate", "--trace", str(wd / "trace.txt"), "--ctr", "1",
                 "--z", "1", "--out-dir", str(tmp_path / "s")])
    assert code == 2


def test_tco_baseline(tmp_path):
    code = main(["tco", "--ctr", "1", "--z", "0", "--out-dir", str(tmp_path)])
    assert code == 0
    report = read_json(tmp_path / "tco_report.json")
    assert report["total_musd_per_year"] == pytest.approx(44.9)
    lines = (tmp_path / "tco_breakdown.csv").read_text().splitlines()
    assert lines[0] == "component,musd_per_year"
    assert lines[-1].startswith("total,")


def test_tco_mixed_one_plus_one(tmp_path):
    code = main(["tco", "--ctr", "1", "--z", "1", "--out-dir", str(tmp_path)])
    assert code == 0
    report = read_json(tmp_path / "tco_report.json")
    assert report["total_musd_per_year"] == pytest.approx(69.4)
    assert report["components_musd_per_year"]["power"] == pytest.approx(2.1)


def test_tco_bad_params_file_exits_2(tmp_path):
    bad = tmp_path / "params.json"
    bad.write_text(json.dumps({"c_compute": 21.0, "c_power": 9.9,
                               "power_price": 60.0}))
    code = main(["tco", "--params", str(bad), "--out-dir", str(tmp_path)])
    assert code == 2


def test_project_2022(tmp_path):
    code = main(["project", "--year", "2022", "--out-dir", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "generations.csv").read_text().splitlines()
    doe_2022 = [ln for ln in lines if ln.startswith("2022,doe")]
    assert doe_2022 and ",4000.0,39" in doe_2022[0]


def test_project_with_budget(tmp_path):
    code = main(["project", "--year", "2022", "--budget", "250",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    header = (tmp_path / "generations.csv").read_text().splitlines()[0]
    assert "stranded_pflops" in header


def test_storage_gap(tmp_path):
    md = tmp_path / "m"
    main(["synth-market", "--family", "lmp", "--threshold", "0",
          "--horizon-days", "20", "--seed", "6", "--out-dir", str(md)])
    code = main(["storage-gap", "--market", str(md / "market_synth-lmp0.csv"),
                 "--family", "lmp", "--threshold", "0", "--load-mw", "4",
                 "--battery-price-kwh", "350", "--out-dir", str(tmp_path)])
    assert code == 0
    out = read_json(tmp_path / "storage_gap.json")
    assert out["longest_gap_h"] > 0
    assert out["bridge_cost_usd"] == pytest.approx(
        out["longest_gap_h"] * 4 * 1000 * 350)


def test_sweep_empty_space_exits_2(tmp_path):
    space = tmp_path / "space.json"
    space.write_text("")
    code = main(["sweep", "--space", str(space), "--out-dir", str(tmp_path)])
    assert code == 2


def test_sweep_tiny_space(tmp_path):
    space = tmp_path / "space.json"
    space.write_text(json.dumps({
        "n_units": [1], "compute_price_factors": [1.0],
        "power_prices": [60.0], "densities": [1.0],
        "sp_models": ["np5"], "seed": 1,
    }))
    out = tmp_path / "out"
    code = main(["sweep", "--space", str(space), "--horizon-days", "20",
                 "--out-dir", str(out)])
    assert code == 0
    for name in ("sweep_grid.csv", "sweep_power_price.csv",
                 "sweep_compute_price.csv", "sweep_density.csv"):
        assert (out / name).exists()
    grid = (out / "sweep_grid.csv").read_text().splitlines()
    assert len(grid) == 3       # header + 2 rows (one per system)


def _hash_outputs(manifest_path):
    import hashlib
    manifest = load_manifest(manifest_path)
    digests = {}
    for path in manifest["outputs"]:
        with open(path, "rb") as fh:
            digests[os.path.basename(path)] = hashlib.sha256(fh.read()).hexdigest()
    return manifest, digests


def test_rerun_from_manifest_is_byte_identical(tmp_path):
    first = tmp_path / "a"
    assert main(["synth-market", "--horizon-days", "15", "--seed", "9",
                 "--out-dir", str(first)]) == 0
    manifest, digests = _hash_outputs(first / "synth-market_manifest.json")

    second = tmp_path / "b"
    assert main(replay_argv(manifest, out_dir=second)) == 0
    _, digests2 = _hash_outputs(second / "synth-market_manifest.json")
    assert digests == digests2
