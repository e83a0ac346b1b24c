import csv
import io
import json
import subprocess
import sys

import pytest

from qgalton.cli import main, shot_seed

pytestmark = pytest.mark.filterwarnings("ignore:.*headroom:UserWarning")

THREE_STAGE = {"mu_hat": 8, "sigma_hat_sq": 11.75, "x0": 0, "l": 16, "n1": 2, "nm": 4, "c": 2}
NINE_QUBIT = {"mu_hat": 256, "sigma_hat_sq": 2154.25, "x0": 0, "l": 512, "n1": 5, "nm": 9, "c": 4}


@pytest.fixture
def spec(tmp_path):
    def write(d, name="spec.json"):
        p = tmp_path / name
        p.write_text(json.dumps(d))
        return str(p)

    return write


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_plan_nine_qubit(spec, capsys):
    code, out, _ = run(["plan", "--spec", spec(NINE_QUBIT)], capsys)
    d = json.loads(out)
    assert code == 0 and d["t"] == [32, 4, 4, 4, 4]
    assert d["predicted_variance"] == 2154.25 and d["shift"] == -38


def test_plan_three_stage(spec, capsys):
    code, out, _ = run(["plan", "--spec", spec(THREE_STAGE)], capsys)
    assert code == 0 and json.loads(out)["t"] == [2, 2, 2]


def test_plan_infeasible(spec, capsys):
    code, out, err = run(["plan", "--spec", spec({**THREE_STAGE, "sigma_hat_sq": 1e-3})], capsys)
    assert code == 2 and out == ""
    assert json.loads(err)["minimal_variance"] == 1.25


def test_run_three_stage(spec, capsys):
    code, out, _ = run(["run", "--spec", spec(THREE_STAGE), "--shots", "2500", "--seed", "1"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2501
    s = json.loads(lines[-1])["summary"]
    assert s["theoretical_acceptance"] == pytest.approx(0.3186, abs=5e-4)
    assert abs(s["acceptance_rate"] - s["theoretical_acceptance"]) <= 3 * s["theoretical_sd"]
    assert s["predicted_variance"] == 11.75


def test_run_is_deterministic(spec, capsys, tmp_path):
    args = ["run", "--spec", spec(THREE_STAGE), "--shots", "40", "--seed", "9", "--epsilon", "0.01"]
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    first = json.loads(a.read_text().splitlines()[0])
    assert first["shot"] == 0 and "error_occurred" in first


def test_run_trivial_schedule(capsys):
    code, out, _ = run(["run", "--n1", "3", "--t", "0", "--shots", "1"], capsys)
    rec = json.loads(out.splitlines()[0])
    assert code == 0 and rec["accepted"] and rec["attempts"] == 1


def test_run_exhausted_exit_code(capsys):
    code, out, _ = run(["run", "--n1", "2", "--t", "40", "--shots", "2", "--seed", "3"], capsys)
    summary = json.loads(out.splitlines()[-1])["summary"]
    assert (code == 3) == (summary["accepted"] == 0)
    code, _, _ = run(["run", "--n1", "6", "--t", "60", "--shots", "1", "--seed", "0"], capsys)
    assert code == 3


def test_run_nine_qubit_summary(spec, capsys):
    code, out, _ = run(["run", "--spec", spec(NINE_QUBIT), "--shots", "1"], capsys)
    s = json.loads(out.splitlines()[-1])["summary"]
    assert s["mean_amp"] == pytest.approx(255.5, abs=1e-6)
    # the summary reads the physical 9-qubit register, where tails past 5.5 sd wrap
    assert s["var_amp"] == pytest.approx(2154.25, abs=1e-4)
    assert s["tv_to_gaussian"] < 1e-2


def test_selection_curve(capsys):
    code, out, _ = run(["selection-curve", "--n1", "2", "--t", "2,2,2"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["t", "stage", "n_qubits", "p0_theory", "p0_sim"]
    assert float(rows[0]["p0_sim"]) == pytest.approx(0.5)
    assert float(rows[1]["p0_sim"]) == pytest.approx(0.75)
    for r in rows:
        assert float(r["p0_sim"]) == pytest.approx(float(r["p0_theory"]), abs=1e-10)
    assert [r["n_qubits"] for r in rows] == ["2", "2", "3", "3", "4", "4"]


def test_noise_sweep(capsys):
    code, out, _ = run(["noise-sweep", "--t", "25", "--j", "0,7"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["t", "j", "kind", "p1_err", "p1_clean"]
    assert len(rows) == 4
    z0 = next(r for r in rows if r["j"] == "0" and r["kind"] == "Z")
    assert float(z0["p1_err"]) == pytest.approx(float(z0["p1_clean"]), abs=1e-12)


def test_resources(spec, capsys):
    code, out, _ = run(["resources", "--spec", spec(NINE_QUBIT)], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["method", "variant", "total_qubits", "ancilla_qubits"]
    assert ["exact", "mcmr", "10", "1"] in rows
    assert ["exact", "mcmr-free", "8626", "8617"] in rows
    code, out, _ = run(["resources", "--spec", spec(NINE_QUBIT), "--format", "json"], capsys)
    assert json.loads(out.splitlines()[0])["method"] == "approximate"


def test_export_circuit(capsys):
    code, out, _ = run(["export-circuit", "--n1", "2", "--t", "2,2,2"], capsys)
    assert code == 0 and "// measurements: 10" in out
    assert out.count("= measure a;") == 6


def test_missing_schedule_arguments(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--shots", "1"])


def test_shot_seeds_are_distinct():
    assert len({shot_seed(0, i) for i in range(1000)}) == 1000


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "qgalton.cli", "export-circuit", "--n1", "1", "--t", "1"],
        capture_output=True,
        text=True,
        check=True,
    ).stdout
    assert out.splitlines()[2] == "OPENQASM 3.0;"
