import json
import math
import shutil

import numpy as np
import pytest
from scipy.special import i0

from lindbladkit.cli import bundled_models, fmt17, main, resolve_state
from lindbladkit.models import d_photon


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    lines = text.strip().splitlines()
    assert lines[0] == "re,im"
    return [tuple(float(v) for v in line.split(",")) for line in lines[1:]]


# ---------------------------------------------------------------------------
# spectrum


def test_spectrum_dephasing(capsys):
    code, out, _ = run(capsys, "spectrum", "dephasing")
    assert code == 0
    assert csv_rows(out) == [(0, 0), (0, 0), (-4, 0), (-4, 0)]


def test_spectrum_unitary_rows(capsys):
    code, out, _ = run(capsys, "spectrum", "unitary_z")
    assert code == 0
    rows = csv_rows(out)
    assert len(rows) == 4
    assert sorted(rows) == [(0, -2), (0, 0), (0, 0), (0, 2)]
    assert all(abs(re) < 1e-12 for re, _ in rows)


def test_spectrum_two_photon_to_file(tmp_path, capsys):
    target = tmp_path / "spec.csv"
    code, out, _ = run(capsys, "spectrum", "d_photon", "--param", "d=2", "--param", "dim=20",
                       "--csv", str(target))
    assert code == 0 and out == ""
    rows = csv_rows(target.read_text())
    assert len(rows) == 400
    assert max(re for re, _ in rows) <= 1e-9


def test_spectrum_uses_seventeen_digits(capsys):
    _, out, _ = run(capsys, "spectrum", "driven_two_qubit")
    for line in out.strip().splitlines()[1:]:
        for field in line.split(","):
            assert field == fmt17(float(field))


def test_fmt17_normalizes_negative_zero():
    assert fmt17(-0.0) == "0"
    assert fmt17(0.1) == "0.10000000000000001"


# ---------------------------------------------------------------------------
# analyze


def test_analyze_two_qubit(capsys):
    code, out, _ = run(capsys, "analyze", "two_qubit")
    assert code == 0
    rep = json.loads(out)
    assert rep["steady_dimension"] == 4
    assert rep["gap"] > 0
    assert [(b["n"], b["m"]) for b in rep["blocks"]] == [(2, 1)]
    assert rep["residuals"]["block_reconstruction"]["tolerance"] == 1e-8
    assert len(rep["hash"]) == 64


def test_analyze_dephasing_from_file(capsys):
    code, out, _ = run(capsys, "analyze", str(bundled_models()["dephasing"]))
    rep = json.loads(out)
    assert code == 0 and rep["steady_dimension"] == 2
    assert [(b["n"], b["m"]) for b in rep["blocks"]] == [(1, 1), (1, 1)]


def test_analyze_undamped_model_reports_no_gap(capsys):
    code, out, _ = run(capsys, "analyze", "unitary_z")
    rep = json.loads(out)
    assert code == 0 and rep["gap"] is None and rep["gap_note"]


def test_analyze_is_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "analyze", "driven_two_qubit", "--out", str(a))[0] == 0
    assert run(capsys, "analyze", "driven_two_qubit", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_batch_mode_keeps_input_order(tmp_path, capsys):
    for name in ("two_qubit", "dephasing", "unitary_z"):
        shutil.copy(bundled_models()[name], tmp_path / f"{name}.json")
    code, out, _ = run(capsys, "analyze", "--models", str(tmp_path / "*.json"), "--workers", "2")
    assert code == 0
    reports = json.loads(out)
    assert [r["model"] for r in reports] == ["dephasing", "two_qubit", "unitary_z"]
    single = json.loads(run(capsys, "analyze", str(tmp_path / "two_qubit.json"))[1])
    assert reports[1] == single


def test_malformed_model_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "jump_operators": []}')
    code, out, err = run(capsys, "analyze", str(bad))
    assert code == 2 and "spaces" in err and out == ""
    bad.write_text('{"name": "x", "spaces": [{"kind": "qubit"}], "jump_operators": ["Z1 $"]}')
    code, _, err = run(capsys, "spectrum", str(bad))
    assert code == 2 and "column 4" in err


def test_input_errors_exit_2(capsys):
    assert run(capsys, "analyze", "no_such_model")[0] == 2
    assert run(capsys, "analyze", "missing.json")[0] == 2
    assert run(capsys, "spectrum", "dephasing", "--param", "omega=1")[0] == 2
    assert run(capsys, "spectrum", "driven_two_qubit", "--param", "omega")[0] == 2
    assert run(capsys, "predict", "dephasing", "--state", "ket(01)")[0] == 2
    assert run(capsys, "predict", "dephasing", "--state", "bogus")[0] == 2
    assert run(capsys, "bogus-command")[0] == 2


def test_catalog_parameters(capsys):
    _, out, _ = run(capsys, "analyze", "driven_two_qubit", "--param", "omega=0.5")
    assert json.loads(out)["steady_dimension"] == 4


# ---------------------------------------------------------------------------
# predict


def test_predict_two_qubit_ket00(capsys):
    code, out, _ = run(capsys, "predict", "two_qubit", "--state", "ket(00)", "--format", "json")
    assert code == 0
    rho = np.array(json.loads(out)["rho"])
    rho = rho[..., 0] + 1j * rho[..., 1]
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.allclose(rho, expected, atol=1e-10)


def test_predict_two_photon_coherent(capsys):
    code, out, _ = run(capsys, "predict", "d_photon", "--param", "dim=30", "--state",
                       "coherent(1,0)", "--format", "json")
    assert code == 0
    rho = np.array(json.loads(out)["rho"])
    rho = rho[..., 0] + 1j * rho[..., 1]
    assert rho[0, 0].real == pytest.approx(0.5 * (1 + math.exp(-2)), abs=1e-8)
    assert rho[0, 1].real == pytest.approx(math.exp(-1) * i0(1.0), abs=1e-8)


def test_predict_text_dephasing(capsys):
    code, out, _ = run(capsys, "predict", "dephasing", "--state", "ket(0)")
    assert code == 0
    assert "rho_ss:" in out and "coefficients" in out
    assert "-0" not in out


def test_predict_limit_cycle_time(capsys):
    _, out, _ = run(capsys, "predict", "unitary_z", "--state", "ket(0)", "--time", "0.3",
                    "--format", "json")
    assert json.loads(out)["time"] == 0.3


def test_predict_state_files(tmp_path, capsys):
    rho = np.diag([0.25, 0.75]).astype(complex)
    np.save(tmp_path / "s.npy", rho)
    (tmp_path / "s.json").write_text(json.dumps({"real": rho.real.tolist()}))
    for f in ("s.npy", "s.json"):
        assert run(capsys, "predict", "dephasing", "--state", str(tmp_path / f))[0] == 0
    np.save(tmp_path / "bad.npy", np.diag([1.0, 1.0]))
    assert run(capsys, "predict", "dephasing", "--state", str(tmp_path / "bad.npy"))[0] == 2


def test_coherent_truncation_guard():
    model = d_photon(2, 10).model
    with pytest.raises(ValueError, match="truncation"):
        resolve_state("coherent(3,0)", model)


# ---------------------------------------------------------------------------
# verify


@pytest.mark.parametrize("name", ["dephasing", "two_qubit", "driven_two_qubit", "d_photon"])
def test_verify_passes_at_horizon(capsys, name):
    state = "coherent(1,0.5)" if name == "d_photon" else ("ket(0)" if name == "dephasing" else "ket(11)")
    code, out, _ = run(capsys, "verify", name, "--state", state)
    assert code == 0, out
    assert "residual" in out and "tolerance" in out


def test_verify_too_early_fails(capsys):
    code, out, _ = run(capsys, "verify", "two_qubit", "--state", "ket(11)", "--t-final", "0.01",
                       "--tol", "1e-9")
    assert code == 1
    assert ">= tolerance" in out


def test_verify_steady_input_any_time(capsys):
    assert run(capsys, "verify", "two_qubit", "--state", "ket(01)", "--t-final", "0.01")[0] == 0


def test_verify_without_decay_is_skipped(capsys):
    code, out, _ = run(capsys, "verify", "unitary_z", "--state", "ket(0)")
    assert code == 0 and "skipped" in out


# ---------------------------------------------------------------------------
# structure and symmetries


def test_structure_driven(capsys):
    code, out, _ = run(capsys, "structure", "driven_two_qubit")
    assert code == 0
    lines = out.splitlines()
    row = lines[2].split()
    assert row[:3] == ["0", "2", "2"]
    assert "T[0] (2x2):" in out


def test_structure_three_photon(capsys):
    code, out, _ = run(capsys, "structure", "d_photon", "--param", "d=3", "--param", "dim=30")
    assert code == 0
    assert out.splitlines()[2].split()[:3] == ["0", "3", "1"]
    assert "capacity sum n^2 = 9" in out


def test_symmetries_dephasing(capsys):
    code, out, _ = run(capsys, "symmetries", "dephasing")
    assert code == 0
    rows = [line.split() for line in out.splitlines()[2:]]
    z_rows = [r for r in rows if "|1><1|" in " ".join(r) and r[1] == "True"]
    assert z_rows


def test_symmetries_size_guard(capsys):
    code, _, err = run(capsys, "symmetries", "d_photon")
    assert code == 2 and "16" in err


def test_version(capsys):
    assert main(["--version"]) == 0
