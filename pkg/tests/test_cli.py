import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rswmaxwell import io
from rswmaxwell.cli import main

FIX = Path(__file__).parent / "fixtures"
CONFIGS = FIX / "configs"
MUTATIONS = sorted((FIX / "mutations").glob("*.json"))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_algebra_passes(capsys):
    code, out, err = run(capsys, "verify", "algebra")
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["scope"] == "algebra"
    assert "pauli_square_x" in err


def test_verify_scope_flag_and_output(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--scope", "algebra", "--seed", "3", "--output", tmp_path)
    assert code == 0
    assert (tmp_path / "verify_report.json").read_text() == out


def test_verify_is_byte_identical(capsys):
    _, a, _ = run(capsys, "verify", "all", "--seed", "11")
    _, b, _ = run(capsys, "verify", "all", "--seed", "11")
    assert a == b


def test_verify_unknown_scope(capsys):
    code, _, err = run(capsys, "verify", "physics")
    assert code == 2 and "unknown scope" in err


def test_verify_bad_mutation_file(capsys, tmp_path):
    (tmp_path / "m.json").write_text("{}")
    code, _, err = run(capsys, "verify", "--mutate", tmp_path / "m.json")
    assert code == 2 and "--mutate" in err


def test_verify_all_catches_sign_flipped_m0x(capsys):
    code, out, _ = run(capsys, "verify", "all", "--mutate", FIX / "mutations" / "m0x_sign.json")
    assert code != 0
    assert "m0_anticommute_xy" in json.loads(out)["failed"]


def test_evolve_vacuum_plane_wave(capsys, tmp_path):
    code, out, _ = run(capsys, "evolve", "--config", CONFIGS / "vacuum_plane_wave.yaml", "--output", tmp_path)
    assert code == 0
    assert "energy drift" in out and "max constraint residual" in out
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["energy_drift"] <= 1e-6 and s["phase_error"] <= 1e-8
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["run_record.jsonl", "slice_final.csv", "state_000000.bin", "state_000256.bin",
                     "state_000512.bin", "state_final.bin", "summary.json"]
    recs = io.read_jsonl(tmp_path / "run_record.jsonl")
    assert recs[0]["t"] == 0.0 and recs[-1]["t"] == pytest.approx(1.0)
    st, _, meta = io.read_state(tmp_path / "state_final.bin")
    assert meta["representation"] == "psi" and meta["t"] == pytest.approx(1.0)


def test_evolve_graded_oracle(capsys, tmp_path):
    code, out, _ = run(capsys, "evolve", "--config", CONFIGS / "graded_nz_oracle.yaml", "--output", tmp_path)
    s = json.loads((tmp_path / "summary.json").read_text())
    assert code == 0 and "oracle diff" in out
    assert s["oracle_diff"] <= 1e-10


def test_evolve_oracle_flag_off(capsys, tmp_path):
    code, out, _ = run(capsys, "evolve", "--config", CONFIGS / "graded_nz_oracle.yaml",
                       "--output", tmp_path, "--oracle", "off")
    assert code == 0 and "oracle" not in out


def test_evolve_zero_field_snapshots_are_zero(capsys, tmp_path):
    code, _, _ = run(capsys, "evolve", "--config", CONFIGS / "zero_field.yaml", "--output", tmp_path)
    assert code == 0
    snaps = sorted(tmp_path.glob("state_*.bin"))
    assert len(snaps) == 4
    for p in snaps:
        assert not np.any(io.read_state(p)[0])


def test_evolve_is_reproducible(capsys, tmp_path):
    for d in ("a", "b"):
        run(capsys, "evolve", "--config", CONFIGS / "graded_nz_oracle.yaml", "--output", tmp_path / d, "--seed", "4")
    for name in ("summary.json", "run_record.jsonl", "state_final.bin", "slice_final.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_evolve_exact_kspace_and_file_initial(capsys, tmp_path):
    (tmp_path / "c1.yaml").write_text(
        "grid: {n: [4, 4, 16]}\n"
        "initial: {plane_wave: {modes: [0, 1, 1], E0: [1, 0, 0]}}\n"
        "propagator: {kind: exact_kspace, steps: 10, diag_every: 5}\n")
    code, out, _ = run(capsys, "evolve", "--config", tmp_path / "c1.yaml", "--output", tmp_path / "o1")
    assert code == 0
    s = json.loads((tmp_path / "o1" / "summary.json").read_text())
    assert s["phase_error"] <= 1e-13 and s["energy_drift"] <= 1e-13
    # restart from the written state
    (tmp_path / "c2.yaml").write_text(
        f"grid: {{n: [4, 4, 16]}}\ninitial: {{file: {tmp_path / 'o1' / 'state_final.bin'}}}\n"
        "propagator: {kind: exact_kspace, steps: 10}\n")
    code, _, _ = run(capsys, "evolve", "--config", tmp_path / "c2.yaml", "--output", tmp_path / "o2")
    assert code == 0


def test_evolve_gaussian_packet(capsys, tmp_path):
    # coarse enough that RK4 dissipates ~1e-4 of the energy, hence the loosened drift tolerance
    (tmp_path / "c.yaml").write_text(
        "grid: {n: [16, 16, 32]}\n"
        "medium: {kind: constant, n: 1.5, eta: 1}\n"
        "initial: {gaussian_packet: {center: [0.5, 0.5, 0.5], width: 0.12, k0: [0, 0, 25.132741228718345], E0: [1, 0, 0]}}\n"
        "propagator: {steps: 40, diag_every: 20}\n"
        "tolerances: {energy_drift: 1.0e-3}\n")
    code, out, _ = run(capsys, "evolve", "--config", tmp_path / "c.yaml", "--output", tmp_path / "o")
    s = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert code == 0
    assert s["max_constraint_residual"] <= 1e-12 and s["max_null_norm"] <= 1e-12
    # every forward mode moves along z at (c/n) kz/|k|; the centroid follows the spectral average
    psi, g, _ = io.read_state(tmp_path / "o" / "state_final.bin")
    w = np.sum(np.abs(g.fft(psi)) ** 2, axis=0)
    kn = np.sqrt(np.where(g.k2 > 0, g.k2, 1.0))
    vz = np.sum(w * g.k[2] / kn) / np.sum(w) / 1.5
    dens = np.sum(np.abs(psi) ** 2, axis=0).sum(axis=(0, 1))
    z = np.arange(g.shape[2]) / g.shape[2]
    centre = np.angle(np.sum(dens * np.exp(2j * np.pi * z))) / (2 * np.pi) % 1.0
    assert centre == pytest.approx(0.5 + vz * s["t_end"], abs=2e-3)


def test_evolve_failed_check_exits_1(capsys, tmp_path):
    (tmp_path / "c.yaml").write_text(
        "grid: {n: [4, 4, 8]}\n"
        "initial: {plane_wave: {modes: [0, 0, 3], E0: [1, 0, 0]}}\n"
        "propagator: {steps: 100, cfl: 0.5}\n"
        "tolerances: {phase_error: 1.0e-12}\n")
    code, out, _ = run(capsys, "evolve", "--config", tmp_path / "c.yaml", "--output", tmp_path / "o")
    assert code == 1 and "FAILED:" in out and "phase_error" in out


@pytest.mark.parametrize("text,msg", [
    ("grid: {n: [4, 4, 4]}\npropagator: {cfl: 0.9}\n", "propagator.cfl"),
    ("grid: {n: [4, 4, 4]}\nmedium: {kind: analytic, n: 'sin(2*pi*x)', eta: 1}\n", "medium"),
    ("grid: {n: [4, 4, 4]}\nmedium: {kind: analytic, n: '1.5 + 0.1*sin(2*pi*x)', eta: 1}\n"
     "initial: {plane_wave: {modes: [0, 0, 1], E0: [1, 0, 0]}}\n", "initial.plane_wave"),
    ("grid: {n: [4, 4, 4]}\ninitial: {plane_wave: {modes: [0, 0, 2], E0: [1, 0, 0]}}\n", "initial.plane_wave"),
    ("grid: {n: [4, 4, 4]}\nmedium: {kind: analytic, n: '1.5 + 0.1*sin(2*pi*x)', eta: 1}\n"
     "propagator: {kind: exact_kspace}\n", "exact_kspace"),
    ("grid: {n: [4, 4, 4]}\npropagator: {dt: 1.0}\n", "CFL"),
])
def test_evolve_config_errors_exit_2(capsys, tmp_path, text, msg):
    (tmp_path / "c.yaml").write_text(text)
    code, _, err = run(capsys, "evolve", "--config", tmp_path / "c.yaml", "--output", tmp_path / "o")
    assert code == 2 and msg in err


@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_evolve_runtime_abort_exits_3(capsys, tmp_path):
    from rswmaxwell.grid import Grid
    g = Grid((4, 4, 4))
    s = np.zeros((8,) + g.shape, complex)
    s[0, 0, 0, 0] = np.inf
    io.write_state(tmp_path / "s.bin", s, g, "psi")
    (tmp_path / "c.yaml").write_text("grid: {n: [4, 4, 4]}\ninitial: {file: s.bin}\npropagator: {steps: 5}\n")
    code, _, err = run(capsys, "evolve", "--config", tmp_path / "c.yaml", "--output", tmp_path / "o")
    assert code == 3 and "step 1" in err


def test_dispersion_command(capsys, tmp_path):
    code, out, err = run(capsys, "dispersion", "--config", CONFIGS / "dispersion_vacuum.yaml", "--output", tmp_path)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 11
    assert max(float(l.split(",")[-1]) for l in lines[1:]) <= 1e-10
    assert (tmp_path / "dispersion.csv").read_text() == out
    assert "max rel err" in err


def test_dispersion_needs_constant_medium(capsys, tmp_path):
    (tmp_path / "c.yaml").write_text("grid: {n: [4, 4, 4]}\nmedium: {kind: analytic, eps: '2 + sin(2*pi*x)', mu: 1}\n")
    code, _, err = run(capsys, "dispersion", "--config", tmp_path / "c.yaml")
    assert code == 2 and "constant medium" in err


def test_dispersion_rejects_nyquist_mode(capsys, tmp_path):
    (tmp_path / "c.yaml").write_text("grid: {n: [4, 4, 4]}\ndispersion: {modes: [[2, 0, 0]]}\n")
    code, _, err = run(capsys, "dispersion", "--config", tmp_path / "c.yaml")
    assert code == 2 and "Nyquist" in err


def test_beam_homogeneous(capsys):
    code, out, _ = run(capsys, "beam", "--config", CONFIGS / "beam_homogeneous.yaml")
    rep = json.loads(out)
    assert code == 0 and rep["refractive_part"]["norm"] <= 1e-13


def test_beam_fiber_profile(capsys):
    code, out, _ = run(capsys, "beam", "--config", CONFIGS / "beam_fiber.yaml")
    rep = json.loads(out)
    assert code == 0
    assert rep["BE_minus_EB"]["norm"] <= 1e-13 and rep["BO_plus_OB"]["norm"] <= 1e-13
    assert rep["monochromatic_residual"]["norm"] <= 1e-10
    assert rep["refractive_part"]["norm"] > 0


def test_beam_report_reproducible_and_written(capsys, tmp_path):
    _, a, _ = run(capsys, "beam", "--config", CONFIGS / "beam_fiber.yaml", "--seed", "9", "--output", tmp_path)
    _, b, _ = run(capsys, "beam", "--config", CONFIGS / "beam_fiber.yaml", "--seed", "9")
    assert a == b == (tmp_path / "beam_report.json").read_text()


def test_beam_needs_static_medium(capsys, tmp_path):
    (tmp_path / "c.yaml").write_text("grid: {n: [4, 4, 4]}\nmedium: {kind: analytic, eps: '2 + sin(t)', mu: 1}\n")
    code, _, err = run(capsys, "beam", "--config", tmp_path / "c.yaml")
    assert code == 2 and "time-independent" in err


def test_missing_config_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "beam", "--config", tmp_path / "nope.yaml")
    assert code == 2 and "does not exist" in err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rswmaxwell.cli", "verify", "algebra"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["passed"]
