from bzmarble import PotentialTrace, write_trace_csv
from bzmarble.cli import main

SMALL = """
domain.radius = 30
electrode1.rect = 17 3 6 10
electrode2.rect = 37 3 6 10
source1.center = 55 30
source1.period = 400
source1.lifetime = 1200
source1.birth_step = 0
run.total_steps = 1500
run.snapshot_every = 0
run.seed = 5
"""


def write_config(tmp_path, text=SMALL):
    path = tmp_path / "scenario.cfg"
    path.write_text(text)
    return str(path)


class TestRunCommand:
    def test_successful_run(self, tmp_path, capsys):
        code = main(["run", write_config(tmp_path), "--out-dir", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "trace:" in out
        assert (tmp_path / "out" / "trace.csv").exists()
        assert (tmp_path / "out" / "effective_config.cfg").exists()
        assert (tmp_path / "out" / "firing_log.csv").exists()

    def test_config_error_exits_1(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("domain.radius = 185\nrun.seed = 1\n")  # no total_steps
        assert main(["run", str(path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_file_exits_1(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.cfg")]) == 1

    def test_blow_up_exits_2(self, tmp_path, capsys):
        text = SMALL + "schedule.segment1 = 0 100 400.0\n"
        code = main(["run", write_config(tmp_path, text), "--out-dir", str(tmp_path / "o")])
        assert code == 2
        assert "blow-up" in capsys.readouterr().err

    def test_seed_flag_lands_in_echo(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", write_config(tmp_path), "--seed", "99", "--out-dir", str(out)]) == 0
        assert "run.seed = 99" in (out / "effective_config.cfg").read_text()


class TestAnalyzeCommand:
    def synthetic_trace(self, tmp_path, with_light=False):
        # spikes every 400 steps, suppressed inside the lit window [2000, 4000)
        trace = PotentialTrace(record_every=10)
        for k in range(600):
            step = 10 * k
            lit = with_light and 2000 <= step < 4000
            pot = 2.0 if (k % 40 == 20 and not lit) else 0.0
            trace.samples.append((step, pot, 0.13 if lit else 0.05))
        path = tmp_path / "trace.csv"
        write_trace_csv(trace, path, dt_per_step=0.001)
        return str(path)

    def test_stats_csv_on_stdout(self, tmp_path, capsys):
        code = main(["analyze", self.synthetic_trace(tmp_path), "--hi", "1.0", "--lo", "0.5"])
        assert code == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == "n_spikes,mean_period,sigma,classification"
        assert lines[1].split(",")[0] == "15"

    def test_response_report_when_lit_window_present(self, tmp_path, capsys):
        code = main(
            ["analyze", self.synthetic_trace(tmp_path, with_light=True), "--hi", "1.0", "--lo", "0.5"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert '"halted": true' in out
        assert '"group":' in out


class TestScanPhiCommand:
    def test_degenerate_scan(self, tmp_path, capsys):
        text = "domain.radius = 60\nrun.total_steps = 1\nrun.seed = 0\n"
        path = tmp_path / "scan.cfg"
        path.write_text(text)
        code = main(["scan-phi", str(path), "--lo", "0.05", "--hi", "0.2", "--tol", "0.2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "phi = 0.05: propagates" in out
        assert "phi = 0.2: blocked" in out
        assert "phi_c = 0.125" in out

    def test_invalid_bracket_exits_1(self, tmp_path, capsys):
        path = tmp_path / "scan.cfg"
        path.write_text("domain.radius = 60\nrun.total_steps = 1\nrun.seed = 0\n")
        code = main(["scan-phi", str(path), "--lo", "0.05", "--hi", "0.05", "--tol", "0.01"])
        assert code == 1
