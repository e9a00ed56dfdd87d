"""End-to-end command-line driver tests (in-process, tiny grids)."""

import json
import math

import numpy as np
import pytest

from rnls.checkpoint import read_checkpoint
from rnls.cli import main

# a deliberately small resolution so every run is fast
_TINY = [
    "--N-hermite", "4", "--M-quad", "8", "--N-z", "16", "--L-z", "30.0",
    "--N-theta", "16",
]
# the ground-state grid: marginal but converged (see the solver tests)
_GS_GRID = [
    "--N-hermite", "6", "--M-quad", "10", "--N-z", "96", "--L-z", "75.0",
    "--N-theta", "24",
]


@pytest.fixture(scope="module")
def gs_run(tmp_path_factory):
    """One `ground-state` CLI run shared by the chained tests."""
    root = tmp_path_factory.mktemp("gs")
    q_ckpt = root / "q.ckpt"
    code = main(
        ["ground-state", "--sigma", "2.5", *_GS_GRID, "--out", str(q_ckpt), "--tol", "1e-9"]
    )
    assert code == 0
    with open(root / "q.json", "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    return {"root": root, "q_ckpt": q_ckpt, "q_json": root / "q.json", "summary": summary}


# ------------------------------------------------------------- exit codes


def test_missing_config_file_exits_2(capsys):
    assert main(["simulate", "--config", "/definitely/not/here.cfg"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_missing_sigma_exits_2(capsys):
    assert main(["simulate", *_TINY]) == 2
    err = capsys.readouterr().err
    assert "configuration error" in err and "sigma" in err


def test_corrupt_checkpoint_exits_4(tmp_path, capsys):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"this is not a checkpoint")
    code = main(
        ["simulate", "--sigma", "2.5", *_TINY, "--init", "checkpoint",
         "--init-path", str(bad), "--output-dir", str(tmp_path / "out")]
    )
    assert code == 4
    assert "I/O error" in capsys.readouterr().err


def test_time_grid_mismatch_exits_3(tmp_path, capsys):
    code = main(
        ["simulate", "--sigma", "2.5", *_TINY, "--dt", "3e-3", "--T", "1e-2",
         "--output-dir", str(tmp_path / "out")]
    )
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_unknown_flag_is_an_argparse_error():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--no-such-flag", "1"])
    assert exc.value.code == 2


# ------------------------------------------------------------ simulate


def test_simulate_T0_writes_all_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(
        ["simulate", "--sigma", "2.5", *_TINY, "--T", "0.0",
         "--output-dir", str(out)]
    )
    assert code == 0
    assert "completed at t = 0" in capsys.readouterr().out

    text = (out / "diagnostics.csv").read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# one row per diagnostic record")
    for col in ("time", "M", "E", "G", "K", "S", "I", "P", "B1_sq", "pot"):
        assert any(ln.startswith(f"#   {col}:") for ln in lines)
    data = [ln for ln in lines if not ln.startswith("#")]
    assert data[0] == "time,M,E,G,K,S,I,P,B1_sq,pot"
    assert len(data) == 2  # header + the single t = 0 record
    assert data[1].startswith("0.0,")

    with open(out / "summary.json", "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["termination"] == "completed"
    assert summary["final_time"] == 0.0
    assert summary["classification"] is None and summary["d_if_computed"] is None
    assert set(summary["max_drifts"]) == {"M", "K", "E", "G", "S"}
    assert all(v == 0.0 for v in summary["max_drifts"].values())

    final, params = read_checkpoint(out / "final.ckpt")
    assert final.time == 0.0
    assert (params.sigma, params.lam) == (2.5, -1.0)


def test_simulate_reruns_are_bit_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(
            ["simulate", "--sigma", "2.5", *_TINY, "--dt", "1e-3", "--T", "0.01",
             "--diagnostics-every", "5", "--output-dir", str(out)]
        )
        assert code == 0
        outs.append(out)
    a, b = outs
    assert (a / "diagnostics.csv").read_bytes() == (b / "diagnostics.csv").read_bytes()
    assert (a / "final.ckpt").read_bytes() == (b / "final.ckpt").read_bytes()
    # three records: steps 0, 5, 10
    rows = [
        ln for ln in (a / "diagnostics.csv").read_text().splitlines()
        if ln and not ln.startswith("#")
    ]
    assert len(rows) == 1 + 3
    times = [float(r.split(",")[0]) for r in rows[1:]]
    assert times == pytest.approx([0.0, 0.005, 0.01])


def test_flags_win_over_the_config_file(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "sigma = 2.5\nN_hermite = 4\nM_quad = 8\nN_z = 16\nL_z = 30.0\n"
        "N_theta = 16\ndt = 1e-3\nT = 0.002\n"
    )
    out = tmp_path / "out"
    code = main(
        ["simulate", "--config", str(cfgfile), "--T", "0.004", "--output-dir", str(out)]
    )
    assert code == 0
    with open(out / "summary.json", "r", encoding="utf-8") as fh:
        assert json.load(fh)["final_time"] == pytest.approx(0.004)
    # an override that violates validation is rejected exactly like a file key
    assert main(["simulate", "--config", str(cfgfile), "--sigma", "9.0"]) == 2


# ------------------------------------------------------------- virial


def test_virial_adds_documented_columns(tmp_path):
    out = tmp_path / "v"
    code = main(
        ["virial", "--sigma", "2.5", *_TINY, "--dt", "2e-3", "--T", "0.004",
         "--diagnostics-every", "1", "--output-dir", str(out)]
    )
    assert code == 0
    lines = (out / "diagnostics.csv").read_text().splitlines()
    header = next(ln for ln in lines if ln and not ln.startswith("#"))
    assert header == "time,M,E,G,K,S,I,P,B1_sq,pot,W,Wp,Wpp"
    for col in ("W", "Wp", "Wpp"):
        assert any(ln.startswith(f"#   {col}:") for ln in lines)
    # the z^2 identity Wpp = 4 P holds row by row
    for row in lines[lines.index(header) + 1 :]:
        vals = dict(zip(header.split(","), map(float, row.split(","))))
        assert vals["Wpp"] == pytest.approx(4.0 * vals["P"], rel=1e-10)


def test_virial_weight_flag_validation(tmp_path, capsys):
    assert main(["virial", "--sigma", "2.5", *_TINY, "--weight", "bogus"]) == 2
    # a radius that cannot fit the box is a configuration error
    assert main(["virial", "--sigma", "2.5", *_TINY, "--weight", "truncated:8"]) == 2
    capsys.readouterr()


def test_virial_truncated_build_abort_exits_3(tmp_path, capsys):
    # on a grid that resolves the transition region the truncated weight's
    # curvature bound fails and the build aborts -> numerical failure
    code = main(
        ["virial", "--sigma", "2.5", "--N-hermite", "4", "--M-quad", "8",
         "--N-z", "64", "--L-z", "30.0", "--N-theta", "16",
         "--weight", "truncated:5", "--dt", "2e-3", "--T", "0.004",
         "--output-dir", str(tmp_path / "out")]
    )
    assert code == 3
    assert "bound violation" in capsys.readouterr().err


# ------------------------------------------------------------ diagnose


def test_diagnose_scatter_sections(tmp_path):
    out = tmp_path / "d"
    code = main(
        ["diagnose", "--scatter", "--sigma", "2.5", *_TINY, "--dt", "2e-3",
         "--T", "0.012", "--diagnostics-every", "2", "--output-dir", str(out)]
    )
    assert code == 0
    with open(out / "summary.json", "r", encoding="utf-8") as fh:
        s = json.load(fh)
    assert s["stnorm"] > 0.0
    assert s["aux_L4LinfL2"] > 0.0
    assert len(s["profile_times"]) >= 3
    assert all(t2 > t1 for t1, t2 in zip(s["profile_times"], s["profile_times"][1:]))
    assert len(s["cauchy_defects"]) == len(s["profile_times"]) - 1
    assert isinstance(s["cauchy_monotone"], bool)


def test_diagnose_scatter_outside_index_range(tmp_path):
    # sigma = 2 has no scattering exponents; the space-time norm is omitted
    # but the auxiliary norm still accumulates
    out = tmp_path / "d2"
    code = main(
        ["diagnose", "--scatter", "--sigma", "2.0", *_TINY, "--dt", "2e-3",
         "--T", "0.008", "--diagnostics-every", "2", "--output-dir", str(out)]
    )
    assert code == 0
    with open(out / "summary.json", "r", encoding="utf-8") as fh:
        s = json.load(fh)
    assert s["stnorm"] is None
    assert s["aux_L4LinfL2"] > 0.0


def test_diagnose_without_scatter_flag_matches_simulate(tmp_path):
    out = tmp_path / "d3"
    code = main(
        ["diagnose", "--sigma", "2.5", *_TINY, "--T", "0.0", "--output-dir", str(out)]
    )
    assert code == 0
    with open(out / "summary.json", "r", encoding="utf-8") as fh:
        s = json.load(fh)
    assert "stnorm" not in s


# ------------------------------------------- ground-state and classify


def test_ground_state_writes_solution_and_summary(gs_run):
    s = gs_run["summary"]
    assert s["sigma"] == 2.5
    assert s["d"] > 0.0 and math.isfinite(s["d"])
    assert s["residual"] < 1e-9
    assert s["iterations"] > 0
    assert s["quotient"] > 0.0
    q, params = read_checkpoint(gs_run["q_ckpt"])
    assert (params.sigma, params.lam) == (2.5, -1.0)
    assert q.basis.spec.N_z == 96


def test_classify_scaled_ground_state(gs_run, capsys):
    base = ["classify", "--sigma", "2.5", *_GS_GRID,
            "--init", "ground_state_scaled", "--init-path", str(gs_run["q_ckpt"]),
            "--d-from", str(gs_run["q_json"])]
    assert main([*base, "--init-amplitude-factor", "1.1"]) == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["classification"] == "Kminus"
    assert verdict["d"] == pytest.approx(gs_run["summary"]["d"])
    assert verdict["S"] < verdict["d"]
    assert verdict["I"] < 0.0

    assert main([*base, "--init-amplitude-factor", "0.5"]) == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["classification"] == "Kplus"
    assert verdict["I"] > 0.0


def test_classify_requires_a_threshold(capsys):
    assert main(["classify", "--sigma", "2.5", *_TINY]) == 2
    assert "--d VALUE or --d-from" in capsys.readouterr().err


def test_classify_unreadable_threshold_exits_4(tmp_path, capsys):
    assert main(
        ["classify", "--sigma", "2.5", *_TINY, "--d-from", str(tmp_path / "no.json")]
    ) == 4
    assert "I/O error" in capsys.readouterr().err


def test_simulated_ground_state_is_stationary(gs_run, tmp_path):
    # phi(t) = e^{i t} Q on the discrete system too: over T = 0.05 every
    # coefficient modulus is preserved to solver precision
    out = tmp_path / "stationary"
    code = main(
        ["simulate", "--sigma", "2.5", *_GS_GRID,
         "--init", "ground_state_scaled", "--init-path", str(gs_run["q_ckpt"]),
         "--dt", "2.5e-3", "--T", "0.05", "--diagnostics-every", "5",
         "--output-dir", str(out)]
    )
    assert code == 0
    q, _ = read_checkpoint(gs_run["q_ckpt"])
    final, _ = read_checkpoint(out / "final.ckpt")
    assert final.time == pytest.approx(0.05)
    drift = float(np.max(np.abs(np.abs(final.coeffs) - np.abs(q.coeffs))))
    assert drift < 1e-9
    with open(out / "summary.json", "r", encoding="utf-8") as fh:
        drifts = json.load(fh)["max_drifts"]
    # the scheme's conservation floor at this dt is ~dt^4 ~ 4e-11
    assert drifts["M"] < 1e-9 and drifts["K"] < 1e-9 and drifts["E"] < 1e-9


# ------------------------------------------------------- resonant-check


def test_resonant_check_passes_at_tolerance(capsys):
    code = main(
        ["resonant-check", "--n-hermite", "3", "--n-z", "16", "--l-z", "12.0",
         "--count", "2", "--tol", "1e-10"]
    )
    assert code == 0
    assert "max coefficient discrepancy" in capsys.readouterr().out


def test_resonant_check_reports_failure_for_absurd_tolerance(capsys):
    code = main(
        ["resonant-check", "--n-hermite", "3", "--n-z", "16", "--l-z", "12.0",
         "--count", "1", "--tol", "1e-30"]
    )
    assert code == 3
    capsys.readouterr()
