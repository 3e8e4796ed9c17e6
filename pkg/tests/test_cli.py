import json
import re
import subprocess
import sys
from fractions import Fraction

import pytest

from vcausality.behavior import uniform
from vcausality.certifier.lp import load_certificate
from vcausality.certifier.verify import verify_certificate
from vcausality.cli import fmt, main
from vcausality.fileio import dump_behavior
from vcausality.inequality import evaluate_s_quantum
from vcausality.quantum import QuantumModel, build_paper_model, state_from_amplitudes
from vcausality.vcausal import dc_behavior_fig3


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def quantity(text, name):
    m = re.search(rf"\] {re.escape(name)}\s+(\S+)", text)
    assert m, f"{name} not in output"
    return m.group(1)


class TestFormatting:
    def test_fraction(self):
        assert fmt(Fraction(7)) == "7/1"
        assert fmt(Fraction(-3, 4)) == "-3/4"

    def test_float(self):
        assert fmt(7.201389937007018) == "7.20138993701"


class TestQuantumS:
    def test_default(self, capsys):
        code, out, _ = run(capsys, "quantum-s")
        assert code == 0
        assert quantity(out, "S rounded") == "7.2"
        assert "PASS  S > 7" in out
        assert out.count("[quantum]") == 23

    def test_product_state_file(self, capsys, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps({"amplitudes": {"0000": 1}}))
        code, out, _ = run(capsys, "quantum-s", "--state-file", str(path))
        expected = evaluate_s_quantum(QuantumModel(state_from_amplitudes([("0000", 1)], 4),
                                                   build_paper_model().observables))
        assert float(quantity(out, "S (operator contraction)")) == pytest.approx(expected, abs=1e-11)
        assert code == (0 if expected > 7 else 1)

    def test_dump_and_recheck(self, capsys, tmp_path):
        path = tmp_path / "q.json"
        _, out, _ = run(capsys, "quantum-s", "--dump-behavior", str(path))
        s_dump = quantity(out, "S (behavior sum)")
        code, out, _ = run(capsys, "check-behavior", str(path))
        assert code == 0
        assert quantity(out, "S") == s_dump


class TestCheckBehavior:
    def test_uniform(self, capsys, tmp_path):
        path = tmp_path / "u.json"
        dump_behavior(uniform(4), path)
        code, out, _ = run(capsys, "check-behavior", str(path))
        assert code == 0
        assert quantity(out, "S") == "0/1"
        assert "FAIL" not in out

    def test_negative_probability(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"parties": 1, "settings": [1], "outcomes": [2], "table": {"0": [1.5, -0.5]}}))
        code, _, err = run(capsys, "check-behavior", str(path))
        assert code == 2 and "negative" in err

    def test_direct_cause_export_signals(self, capsys, tmp_path, paper_model):
        path = tmp_path / "dc.json"
        dump_behavior(dc_behavior_fig3(paper_model), path)
        code, out, _ = run(capsys, "check-behavior", str(path))
        assert code == 1
        assert "signalling: BCD marginal depends on input of A" in out
        assert "FAIL  no-signalling" in out

    def test_model_file(self, capsys, tmp_path):
        from test_fileio import TRIANGLE

        path = tmp_path / "m.json"
        path.write_text(json.dumps(TRIANGLE))
        code, out, _ = run(capsys, "check-behavior", "--model", str(path))
        assert code == 1 and "BC marginal depends on input of A" in out

    def test_rational_flag(self, capsys, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({"parties": 1, "settings": [1], "outcomes": [2], "table": {"0": [0.5, 0.5]}}))
        _, out, _ = run(capsys, "--rational", "check-behavior", str(path))
        assert quantity(out, "arithmetic") == "exact"


class TestGhzProtocol:
    def test_one_round(self, capsys):
        code, out, _ = run(capsys, "ghz-protocol", "--rounds", "1")
        assert code == 0
        assert quantity(out, "analytic success (equal priors)") == "3/4"

    def test_seeded_runs_identical(self, capsys):
        _, a, _ = run(capsys, "--seed", "5", "ghz-protocol", "--rounds", "3", "--trials", "1000")
        _, b, _ = run(capsys, "--seed", "5", "ghz-protocol", "--rounds", "3", "--trials", "1000")
        strip = lambda s: re.sub(r"wall time: .*", "", s)  # noqa: E731
        assert strip(a) == strip(b)


class TestSpeedBound:
    def test_km_scale_rest_frame(self, capsys):
        code, out, _ = run(capsys, "speed-bound", "--d", "18e3", "--dt", "3.6e-10")
        assert code == 0
        assert float(quantity(out, "v_min/c lab frame")) == pytest.approx(1.67e5, rel=0.01)

    def test_scan(self, capsys):
        code, out, _ = run(capsys, "speed-bound", "--d", "18e3", "--dt", "3.6e-10", "--scan", "--beta-max", "0.00123")
        assert code == 0
        assert out.count("<- minimum") == 1
        assert float(quantity(out, "minimum v_min/c over frames")) < float(quantity(out, "v_min/c lab frame"))


FOUR_PARTY = {
    "v_over_c": 10,
    "events": [{"label": "A", "t": 0.0, "r": [0.0]}, {"label": "D", "t": 1.0, "r": [1.49896229e9]},
               {"label": "B", "t": 2.0, "r": [4.197094412e9]}, {"label": "C", "t": 2.0, "r": [-1.0492736e9]}],
    "required": [["A", "D", True], ["A", "B", True], ["A", "C", True], ["D", "B", True], ["D", "C", True],
                 ["B", "C", False], ["C", "B", False]],
}


class TestValidateConfig:
    def test_valid(self, capsys, tmp_path):
        path = tmp_path / "four.json"
        path.write_text(json.dumps(FOUR_PARTY))
        code, out, _ = run(capsys, "validate-config", str(path), "--speed")
        assert code == 0, out
        # B and C are 17.5 light-seconds apart here, so reporting at c is the bottleneck
        assert 0 < float(quantity(out, "message speed / c")) < 1

    def test_elongated_layout_beats_light(self, capsys, tmp_path):
        c = 299792458.0
        cfg = {"v_over_c": 10,
               "events": [{"label": "A", "t": 0.0, "r": [0.0]}, {"label": "D", "t": 1.0, "r": [9 * c, 0.0]},
                          {"label": "B", "t": 1.0, "r": [9 * c, 1e3]}, {"label": "C", "t": 1.0, "r": [9 * c, -1e3]}],
               "required": [["A", "B", True], ["A", "C", True], ["A", "D", True], ["B", "C", False]]}
        path = tmp_path / "elongated.json"
        path.write_text(json.dumps(cfg))
        code, out, _ = run(capsys, "validate-config", str(path), "--speed")
        assert code == 0
        assert 1 < float(quantity(out, "message speed / c")) < 10

    def test_violation(self, capsys, tmp_path):
        bad = json.loads(json.dumps(FOUR_PARTY))
        bad["events"][2]["r"] = [4.79671e9]  # B at 1.6 v: too far from D
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        code, out, _ = run(capsys, "validate-config", str(path))
        assert code == 1 and "D->B should be connected" in out

    def test_parse_error(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        code, _, err = run(capsys, "validate-config", str(path))
        assert code == 2 and "line 1" in err


class TestUsage:
    def test_unknown_command(self, capsys):
        assert main(["nonsense"]) == 2

    def test_report_file(self, capsys, tmp_path):
        path = tmp_path / "r.json"
        run(capsys, "--report", str(path), "ghz-protocol", "--trials", "100")
        report = json.loads(path.read_text())
        assert report["command"] == "ghz-protocol"
        assert all(q["module"] == "vcausal" for q in report["quantities"])
        assert len(report["inputs_sha256"]) == 64

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "vcausality", "ghz-protocol", "--trials", "100"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "3/4" in proc.stdout


@pytest.mark.slow
class TestCertifyBound:
    def test_ns_only_export(self, capsys, tmp_path):
        path = tmp_path / "cert.json"
        code, out, _ = run(capsys, "certify-bound", "--ns-only", "--export", str(path))
        assert code == 0
        assert quantity(out, "optimum") == "9/1"
        lp, cert = load_certificate(path)
        assert verify_certificate(lp, cert)
