import csv
from dataclasses import replace

import numpy as np
import pytest

from sparsebf.beamformer import optimal_sinr
from sparsebf.config import ScenarioConfig
from sparsebf.experiments import (
    ExperimentKind,
    ExperimentSpec,
    compare_methods,
    derive_seed,
    load_experiment,
    run_experiment,
)
from sparsebf.numerics import ValidationError

SCEN = ScenarioConfig(m=8, soi_doa_deg=0.0, snr_db=0.0, inr_db=20.0, interferer_doas_deg=(-40.0, 30.0),
                      snapshots=60, L=3, rho=1e3)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def spec(tmp_path, kind, grid, **kw):
    return ExperimentSpec(kind=kind, scenario=kw.pop("scenario", SCEN), grid=tuple(grid),
                          output_dir=str(tmp_path / kw.pop("name", "out")), **kw)


def test_derive_seed_stable_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert len({derive_seed(1, t, 0) for t in range(50)}) == 50


def test_compare_methods_sorted_and_sandwiched(sixth_example, quiet_rho):
    from sparsebf.admm import AdmmConfig

    rows = compare_methods(sixth_example, 4, use_true_cov=True, cfg=AdmmConfig(lam=1.0, rho=1e3))
    vals = [r.sinr_db for r in rows]
    assert vals == sorted(vals, reverse=True)
    by = {r.method: r.sinr_db for r in rows}
    assert by["WholeULA"] == pytest.approx(optimal_sinr(sixth_example), abs=1e-9)
    assert by["WorstEnum"] - 1e-9 <= by["ADMM"] <= by["BestEnum"] + 1e-9


def test_compare_methods_skips_unrealizable(sixth_example):
    rows = compare_methods(sixth_example, 10, methods=("SparseULA", "CompactULA"))
    assert [r.method for r in rows] == ["CompactULA"]


def test_unknown_method_rejected(tmp_path):
    with pytest.raises(ValidationError):
        spec(tmp_path, ExperimentKind.SINR_VS_SNR, [0], methods=("ADMM", "SDR"))
    with pytest.raises(ValidationError):
        spec(tmp_path, ExperimentKind.SINR_VS_SNR, [])
    with pytest.raises(ValidationError):
        spec(tmp_path, ExperimentKind.SINR_VS_SNR, [0], trials=0)


def test_sinr_sweep_serial_equals_parallel_and_repeat(tmp_path, quiet_rho):
    base = spec(tmp_path, ExperimentKind.SINR_VS_SNR, [-10, 0, 10], trials=3, master_seed=4,
                methods=("ADMM", "BestEnum", "Random", "WholeULA"), name="a")
    run_experiment(base, threads=1)
    run_experiment(replace(base, output_dir=str(tmp_path / "b")), threads=3)
    run_experiment(replace(base, output_dir=str(tmp_path / "c")), threads=1)
    a = (tmp_path / "a" / "sinr_vs_snr.csv").read_bytes()
    assert a == (tmp_path / "b" / "sinr_vs_snr.csv").read_bytes()
    assert a == (tmp_path / "c" / "sinr_vs_snr.csv").read_bytes()
    rows = read(tmp_path / "a" / "sinr_vs_snr.csv")
    assert rows[0] == ["x", "ADMM", "BestEnum", "Random", "WholeULA", "Optimal"]
    assert len(rows) == 4
    assert b"\r\n" in a


def test_manifest_regenerates_bit_exact(tmp_path, quiet_rho):
    s = spec(tmp_path, ExperimentKind.SINR_VS_DOA, [-20, 20], trials=2, master_seed=11,
             methods=("ADMM", "Nested"), name="orig")
    run_experiment(s)
    again = load_experiment(tmp_path / "orig" / "manifest.txt")
    again = replace(again, output_dir=str(tmp_path / "regen"))
    assert again == replace(s, output_dir=again.output_dir)
    run_experiment(again)
    assert (tmp_path / "orig" / "sinr_vs_doa.csv").read_bytes() == (tmp_path / "regen" / "sinr_vs_doa.csv").read_bytes()


def test_sinr_vs_l_converges_at_full(tmp_path, quiet_rho):
    sc = replace(SCEN, use_true_cov=True)
    s = spec(tmp_path, ExperimentKind.SINR_VS_L, [2, 8], scenario=sc)
    run_experiment(s)
    rows = read(tmp_path / "out" / "sinr_vs_l.csv")
    assert rows[0][1:] == ["ADMM", "BestEnum", "WorstEnum", "CompactULA", "Random", "WholeULA", "Optimal"]
    last = np.array(rows[-1][1:], dtype=float)
    assert np.ptp(last) <= 1e-9


def test_convergence_trace_nonincreasing_plain_l1(tmp_path):
    sc = replace(SCEN, rho=None, k_max=200)
    s = spec(tmp_path, ExperimentKind.CONVERGENCE_TRACE, [1.0], scenario=sc, variants=("l1",))
    run_experiment(s)
    rows = read(tmp_path / "out" / "convergence_trace.csv")
    assert rows[0] == ["trial", "lambda", "variant", "k", "lagrangian", "primal_residual", "feasibility_gap"]
    lag = np.array([float(r[4]) for r in rows[1:]])
    assert np.all(np.diff(lag) <= 1e-9 * abs(lag[0]))


def test_sparsity_vs_lambda_shape(tmp_path, quiet_rho):
    s = spec(tmp_path, ExperimentKind.SPARSITY_VS_LAMBDA, [1, 100, 1e4], snr_list_db=(0.0, 10.0), trials=2)
    run_experiment(s)
    rows = read(tmp_path / "out" / "sparsity_vs_lambda.csv")
    assert rows[0] == ["snr_db", "lambda", "mean_active_l1", "mean_active_reweighted"]
    assert len(rows) == 1 + 2 * 3
    for r in rows[1:]:
        assert 0 <= float(r[2]) <= 8 and 0 <= float(r[3]) <= 8


def test_cpu_time_columns(tmp_path, quiet_rho):
    s = spec(tmp_path, ExperimentKind.CPU_TIME_VS_M, [6, 8], trials=2)
    paths = run_experiment(s)
    rows = read(tmp_path / "out" / "cpu_time_vs_m.csv")
    assert rows[0] == ["x", "mean_time_s", "median_time_s", "mean_solves"]
    assert all(float(r[1]) > 0 and float(r[2]) > 0 for r in rows[1:])
    assert [p.name for p in paths] == ["cpu_time_vs_m.csv", "manifest.txt"]


def test_beampattern_compare_outputs(tmp_path, quiet_rho):
    s = spec(tmp_path, ExperimentKind.BEAMPATTERN_COMPARE, [-40, 0, 30], methods=("ADMM", "CompactULA"))
    run_experiment(s)
    rows = read(tmp_path / "out" / "beampattern_compare.csv")
    assert rows[0] == ["method", "angle_deg", "gain_db"] and len(rows) == 7
    sel = read(tmp_path / "out" / "selection_report.csv")
    assert sel[0] == ["method", "support", "lambda", "sinr_db"]
    assert {r[0] for r in sel[1:]} == {"ADMM", "CompactULA"}


def test_experiment_file_and_errors(tmp_path):
    (tmp_path / "s.txt").write_text("m = 6\nsoi_doa_deg = 0\nsnr_db = 0\n")
    (tmp_path / "e.txt").write_text("kind = sinr_vs_snr\nscenario = s.txt\ngrid = 0, 5\ntrials = 2\n")
    e = load_experiment(tmp_path / "e.txt")
    assert e.kind is ExperimentKind.SINR_VS_SNR and e.grid == (0.0, 5.0) and e.trials == 2
    (tmp_path / "bad.txt").write_text("kind = nonsense\nscenario = s.txt\ngrid = 0\n")
    with pytest.raises(ValidationError):
        load_experiment(tmp_path / "bad.txt")
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ValidationError):
        run_experiment(replace(e, output_dir=str(blocker / "sub")))
