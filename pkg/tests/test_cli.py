"""End-to-end command-line behavior: outputs, determinism, exit codes."""

import json
import math

import numpy as np
import pytest

from metricmi.cli import main


def run_cli(argv):
    return main(argv)


class TestGenToy:
    def test_writes_expected_rows(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run_cli(["gen-toy", "--ns", "10", "--nd", "3", "--nt", "10",
                        "--seed", "1", "-o", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 100
        assert all(len(line.split(",")) == 4 for line in lines)

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run_cli(["gen-toy", "--ns", "3", "--nd", "2", "--nt", "5",
                     "--seed", "7", "-o", str(path)])
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_spec_exits_one(self, tmp_path, capsys):
        code = run_cli(["gen-toy", "--ns", "1", "--nd", "3", "--nt", "10",
                        "-o", str(tmp_path / "d.csv")])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestDistances:
    def test_matrix_csv(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("0,0.0\n0,1.0\n1,3.0\n1,6.0\n")
        out = tmp_path / "dm.csv"
        assert run_cli(["distances", "--input", str(data), "--metric", "euclidean",
                        "-o", str(out)]) == 0
        rows = [[float(v) for v in line.split(",")] for line in out.read_text().splitlines()]
        m = np.array(rows)
        assert m.shape == (4, 4)
        assert np.array_equal(m, m.T)
        assert m[0, 2] == 3.0

    def test_spike_metric(self, tmp_path):
        data = tmp_path / "d.txt"
        data.write_text("0 1 0.1\n0 1 0.2\n1 1 0.5\n1 0\n")
        out = tmp_path / "dm.csv"
        code = run_cli(["distances", "--input", str(data), "--format", "spike-text",
                        "--metric", "victor-purpura", "--q", "1.0", "-o", str(out)])
        assert code == 0
        m = np.array([[float(v) for v in r.split(",")] for r in out.read_text().splitlines()])
        assert m[0, 1] == pytest.approx(0.1, abs=1e-12)
        assert m[0, 3] == 1.0

    def test_spike_without_metric_is_usage_error(self, tmp_path):
        data = tmp_path / "d.txt"
        data.write_text("0 1 0.1\n1 0\n")
        with pytest.raises(SystemExit) as exc:
            run_cli(["distances", "--input", str(data), "--format", "spike-text",
                     "-o", str(tmp_path / "dm.csv")])
        assert exc.value.code == 2


class TestEstimate:
    def _gen(self, tmp_path, sigma2="1e-12", seed="1"):
        data = tmp_path / "d.csv"
        run_cli(["gen-toy", "--ns", "10", "--nd", "3", "--nt", "10",
                 "--sigma2", sigma2, "--seed", seed, "-o", str(data)])
        return data

    def test_defaults_recover_stimulus_entropy_exactly(self, tmp_path, capsys):
        data = self._gen(tmp_path)
        assert run_cli(["estimate", "--input", str(data)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["estimator"] == "kernel"
        assert out["config"]["n_h"] == 10
        assert out["bits"] == math.log2(10)

    def test_kernel_bits_within_bounds(self, tmp_path, capsys):
        data = self._gen(tmp_path, sigma2="0.25")
        assert run_cli(["estimate", "--input", str(data), "--format", "csv-vectors",
                        "--metric", "euclidean", "--kernel", "--nh", "10"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert math.log2(10 / 10) <= out["bits"] <= math.log2(10)

    def test_ksg_and_histogram(self, tmp_path, capsys):
        data = self._gen(tmp_path, sigma2="0.1")
        assert run_cli(["estimate", "--input", str(data), "--ksg", "--nk", "3"]) == 0
        ksg = json.loads(capsys.readouterr().out)
        assert ksg["estimator"] == "ksg" and math.isfinite(ksg["bits"])
        assert run_cli(["estimate", "--input", str(data), "--histogram",
                        "--bin-width", "5.0"]) == 0
        hist = json.loads(capsys.readouterr().out)
        assert hist["estimator"] == "histogram"
        assert 0.0 <= hist["bits"] <= math.log2(10) + 1e-12

    def test_bias_correct_payload(self, tmp_path, capsys):
        data = self._gen(tmp_path, sigma2="0.05")
        assert run_cli(["estimate", "--input", str(data), "--bias-correct",
                        "--lambdas", "0.2,0.4,0.6,0.8,1.0", "--seed", "3"]) == 0
        out = json.loads(capsys.readouterr().out)
        for key in ("curve", "intercept_bits", "A_bits", "B_bits", "residual"):
            assert key in out
        assert len(out["curve"]) == 5
        assert out["curve"][-1][0] == 10

    def test_output_file_and_determinism(self, tmp_path):
        data = self._gen(tmp_path, sigma2="0.3")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            run_cli(["estimate", "--input", str(data), "--bias-correct",
                     "--seed", "5", "-o", str(path)])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_input_exits_one(self, tmp_path, capsys):
        code = run_cli(["estimate", "--input", str(tmp_path / "nope.csv")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unbalanced_input_exits_one(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("0,1.0\n0,2.0\n1,3.0\n")
        assert run_cli(["estimate", "--input", str(data)]) == 1
        assert "stimulus" in capsys.readouterr().err

    def test_ksg_without_nk_is_usage_error(self, tmp_path):
        data = self._gen(tmp_path)
        with pytest.raises(SystemExit) as exc:
            run_cli(["estimate", "--input", str(data), "--ksg"])
        assert exc.value.code == 2

    def test_conflicting_bandwidths_usage_error(self, tmp_path):
        data = self._gen(tmp_path)
        with pytest.raises(SystemExit) as exc:
            run_cli(["estimate", "--input", str(data), "--nh", "5", "--h-frac", "0.5"])
        assert exc.value.code == 2

    def test_unknown_flag_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["estimate", "--bogus"])
        assert exc.value.code == 2


class TestBenchmark:
    def _run(self, tmp_path, name, threads):
        out = tmp_path / name
        code = run_cli(["benchmark", "--ns", "3", "--nd", "2", "--nt", "12",
                        "--datasets", "10", "--seed", "4", "--mc-samples", "2000",
                        "--threads", str(threads), "-o", str(out)])
        assert code == 0
        return out

    def test_outputs_and_thread_independence(self, tmp_path, capsys):
        first = self._run(tmp_path, "run1", threads=1)
        second = self._run(tmp_path, "run2", threads=2)
        capsys.readouterr()
        records = (first / "records.csv").read_text().splitlines()
        assert records[0] == "seed,sigma2,true_bits,kernel_bits,hist_bits,hist_width"
        assert len(records) == 11  # header + one row per dataset
        summary = json.loads((first / "summary.json").read_text())
        assert summary["accepted"] == 10
        assert len((first / "scatter.dat").read_text().splitlines()) == 10
        for name in ("records.csv", "summary.json", "scatter.dat"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_summary_printed(self, tmp_path, capsys):
        self._run(tmp_path, "run3", threads=2)
        out = capsys.readouterr().out
        assert json.loads(out)["accepted"] == 10
