import json

import pytest

from cyclecast.cli import main
from cyclecast.overlay import Overlay


class TestChurn:
    def test_random_churn_writes_valid_dump(self, tmp_path):
        out = tmp_path / "overlay.txt"
        assert main(["churn", "--n", "50", "--m", "2", "--ops", "300",
                     "--seed", "7", "--out", str(out)]) == 0
        overlay = Overlay.from_text(out.read_text())
        assert overlay.validate().passed

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        args = ["churn", "--n", "40", "--m", "3", "--ops", "200", "--seed", "9"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_script_mode(self, tmp_path):
        script = tmp_path / "ops.txt"
        script.write_text("join 3\njoin 4\nleave 3\n")
        out = tmp_path / "overlay.txt"
        assert main(["churn", "--script", str(script), "--out", str(out)]) == 0
        assert Overlay.from_text(out.read_text()).peers == {1, 2, 4}

    def test_script_removing_source_fails(self, tmp_path, capsys):
        script = tmp_path / "ops.txt"
        script.write_text("join 3\nleave 1\n")
        assert main(["churn", "--script", str(script)]) == 1
        assert "churn failed" in capsys.readouterr().err


class TestStream:
    def test_reference_configuration_passes(self, tmp_path):
        out = tmp_path / "rx.csv"
        gen = tmp_path / "gen.csv"
        code = main([
            "stream", "--n", "6", "--m", "2", "--k", "3", "--lam", "1,1,2",
            "--horizon", "200", "--seed", "3",
            "--out", str(out), "--generated-out", str(gen),
        ])
        assert code == 0
        assert out.read_text().splitlines()[0] == "peer,chunk_t,color,rx_slot"
        assert gen.read_text().splitlines()[0] == "chunk_t,color"

    def test_auto_horizon(self):
        assert main(["stream", "--n", "30", "--m", "3", "--k", "4",
                     "--lam", "1,2,1,3", "--seed", "5"]) == 0

    def test_malformed_schedule_rejected(self, capsys):
        assert main(["stream", "--n", "6", "--m", "2", "--k", "3",
                     "--lam", "1,1,1"]) == 2
        assert "bad stream configuration" in capsys.readouterr().err

    def test_overlay_roundtrip(self, tmp_path):
        dump = tmp_path / "overlay.txt"
        assert main(["churn", "--n", "20", "--m", "2", "--ops", "100",
                     "--seed", "2", "--out", str(dump)]) == 0
        assert main(["stream", "--overlay-in", str(dump), "--m", "2",
                     "--k", "3", "--seed", "2"]) == 0

    def test_overlay_layer_mismatch(self, tmp_path):
        dump = tmp_path / "overlay.txt"
        main(["churn", "--n", "10", "--m", "3", "--ops", "50", "--seed", "1",
              "--out", str(dump)])
        assert main(["stream", "--overlay-in", str(dump), "--m", "2", "--k", "3"]) == 2


class TestFgc:
    def test_trace_csv(self, tmp_path):
        out = tmp_path / "trace.csv"
        assert main(["fgc", "--n", "32", "--q", "0.5", "--seed", "4",
                     "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,z,F,tau,c1_count,c2_count"
        assert len(lines) == 33

    def test_graph_export(self, tmp_path):
        graph = tmp_path / "graph.txt"
        assert main(["fgc", "--n", "16", "--q", "1.0", "--seed", "4",
                     "--out", str(tmp_path / "t.csv"), "--graph-out", str(graph)]) == 0
        lines = graph.read_text().strip().splitlines()
        assert lines[0] == "# source=1"
        assert len(lines) == 1 + 32  # two full cycles at q=1


class TestVerify:
    def test_quick_uniformity(self, capsys):
        assert main(["verify", "uniformity", "--profile", "quick", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert out.count("result: PASS") == 2

    def test_quick_expansion_with_report_file(self, tmp_path):
        out = tmp_path / "reports.json"
        assert main(["verify", "expansion", "--profile", "quick", "--seed", "2",
                     "--out", str(out)]) == 0
        reports = json.loads(out.read_text())
        assert len(reports) == 1 and reports[0]["passed"]

    def test_quick_topology(self):
        assert main(["verify", "topology", "--profile", "quick", "--seed", "3"]) == 0

    def test_quick_dissemination(self):
        assert main(["verify", "dissemination", "--profile", "quick", "--seed", "4"]) == 0

    def test_scaling_negative_control_is_expected_fail(self, tmp_path, capsys):
        out = tmp_path / "reports.json"
        assert main(["verify", "scaling", "--profile", "quick", "--seed", "5",
                     "--q", "0", "--out", str(out)]) == 0
        reports = json.loads(out.read_text())
        assert reports[0]["expected_fail"] is True
        assert "negative control" in capsys.readouterr().out

    def test_unknown_suite_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "bogus"])
        assert exc.value.code == 2


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"n": 24, "ops": 120, "seed": 5}))
        out = tmp_path / "overlay.txt"
        assert main(["churn", "--config", str(cfg), "--out", str(out)]) == 0
        # 120 ops biased 3:1 toward joins reach the 24-peer target
        assert Overlay.from_text(out.read_text()).n >= 20

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"seed": 5, "n": 10}))
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        assert main(["churn", "--config", str(cfg), "--seed", "6", "--ops", "80",
                     "--out", str(a)]) == 0
        assert main(["churn", "--seed", "6", "--ops", "80", "--n", "10",
                     "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
