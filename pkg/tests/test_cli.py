"""End-to-end CLI behavior: outputs, exit codes, config plumbing."""

import json

import pytest

from conftest import CFG, can, sub
from lobmomentum.cli import (DEVIATIONS_HEADER, TRACED_HEADER, ZSCORE_HEADER,
                             main)
from lobmomentum.ingest import CANONICAL_HEADER, write_canonical_csv
from lobmomentum.pipeline import MOMENTUM_HEADER

SPIKED = [
    sub(10, "b0", "buy", 174, 100),
    sub(20, "s0", "sell", 175, 100),
    sub(150_000, "n2", "buy", 114, 10),
    sub(250_000, "n3", "buy", 114, 10),
    sub(350_000, "n4", "buy", 114, 10),
    sub(360_000, "sp", "buy", 114, 5000),
    sub(450_000, "n5", "buy", 114, 10),
    sub(550_000, "n6", "buy", 114, 10),
    can(560_000, "sp", "buy", 114, 5000),
]


@pytest.fixture
def stream(tmp_path):
    path = tmp_path / "stream.csv"
    write_canonical_csv(SPIKED, path, CFG)
    return str(path)


@pytest.fixture
def outdir(tmp_path):
    return str(tmp_path / "out")


class TestExitCodes:
    def test_help_is_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "analyze" in capsys.readouterr().out

    def test_unknown_command_is_one(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "No such command" in capsys.readouterr().err

    def test_missing_file_is_one(self, tmp_path, capsys):
        assert main(["analyze", str(tmp_path / "nope.csv")]) == 1

    def test_bad_config_value_is_one(self, stream, outdir, capsys):
        assert main(["analyze", stream, "--alpha", "zz", "-o", outdir]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_quotes_shape_is_one(self, stream, outdir, capsys):
        assert main(["analyze", stream, "--initial-quotes", "1.74",
                     "-o", outdir]) == 1
        assert "bid:ask" in capsys.readouterr().err

    def test_parse_error_is_two(self, tmp_path, outdir, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("00:00:01.000000,o1,add,buy,limit,1.74,1.000\n")
        assert main(["analyze", str(bad), "-o", outdir]) == 2
        assert "parse error" in capsys.readouterr().err

    def test_unsorted_stream_is_three(self, tmp_path, outdir, capsys):
        path = tmp_path / "unsorted.csv"
        path.write_text(
            "00:00:02.000000,a,open,buy,limit,1.74,1.000\n"
            "00:00:01.000000,b,open,sell,limit,1.75,1.000\n")
        assert main(["analyze", str(path), "-o", outdir]) == 3
        assert "contract violation" in capsys.readouterr().err


class TestAnalyze:
    def test_outputs(self, stream, outdir, tmp_path, capsys):
        assert main(["analyze", stream, "-o", outdir]) == 0
        mom = (tmp_path / "out" / "momentum.csv").read_text()
        assert mom.splitlines()[0] == MOMENTUM_HEADER
        assert len(mom.splitlines()) == 1 + 2 * 6       # two areas x 6 buckets
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["config"]["alpha_ticks"] == 50
        assert summary["events"]["analyzed"] == len(SPIKED)
        assert summary["buckets"]["total"] == 6
        out = capsys.readouterr().out
        assert "analyzed 9 events into 6 buckets" in out

    def test_plot_flag(self, stream, outdir, tmp_path):
        assert main(["analyze", stream, "-o", outdir, "--plot"]) == 0
        for name in ("momentum_active.svg", "momentum_passive.svg"):
            svg = (tmp_path / "out" / name).read_text()
            assert svg.startswith("<svg ")

    def test_config_file_defaults(self, stream, tmp_path, outdir):
        cfg_path = tmp_path / "conf.json"
        cfg_path.write_text('{"analyze": {"alpha": "0.25"}}')
        assert main(["--config", str(cfg_path), "analyze", stream,
                     "-o", outdir]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["config"]["alpha_ticks"] == 25

    def test_outdir_envvar(self, stream, tmp_path, monkeypatch):
        envdir = tmp_path / "envout"
        monkeypatch.setenv("LOBMOMENTUM_OUT", str(envdir))
        assert main(["analyze", stream]) == 0
        assert (envdir / "momentum.csv").exists()


class TestDetect:
    def test_outputs_and_content(self, stream, outdir, tmp_path, capsys):
        assert main(["detect", stream, "-o", outdir,
                     "--threshold", "0", "-k", "2"]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["area"] == "passive"
        assert [a["bucket_end_us"] for a in report["anomalies"]] == \
            [400_000, 600_000]

        dev = (tmp_path / "out" / "deviations.csv").read_text().splitlines()
        assert dev[0] == DEVIATIONS_HEADER
        assert len(dev) == 3
        assert dev[1].startswith("1,00:00:00.400000,")
        assert dev[2].startswith("2,00:00:00.600000,")

        traced = (tmp_path / "out" / "traced.csv").read_text().splitlines()
        assert traced[0] == TRACED_HEADER
        # submit row reports the order kind; cancel row reports the action
        assert "00:00:00.360000,1.14,limit,buy,5.000" in traced
        assert "00:00:00.560000,1.14,cancel,buy,5.000" in traced
        assert "traditional spoofing candidate" in capsys.readouterr().out

    def test_k_limits_rows(self, stream, outdir, tmp_path):
        assert main(["detect", stream, "-o", outdir,
                     "--threshold", "0", "-k", "1"]) == 0
        dev = (tmp_path / "out" / "deviations.csv").read_text().splitlines()
        assert len(dev) == 2

    def test_high_threshold_finds_nothing(self, stream, outdir, tmp_path, capsys):
        assert main(["detect", stream, "-o", outdir,
                     "--threshold", "50"]) == 0
        assert "0 anomalous buckets" in capsys.readouterr().out
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["anomalies"] == []


class TestCompare:
    def test_baseline_agreement_on_spoof(self, stream, outdir, tmp_path):
        assert main(["compare", stream, "-o", outdir,
                     "--threshold", "0", "-k", "3"]) == 0
        z = (tmp_path / "out" / "zscore.csv").read_text().splitlines()
        assert z[0] == ZSCORE_HEADER
        assert z[1].split(",")[2] == "sp"               # biggest submit
        comp = json.loads((tmp_path / "out" / "compare.json").read_text())
        assert "sp" in comp["overlap_order_ids"]
        assert comp["momentum_anomalies"][0]["top_order_ids"][0] == "sp"
        assert comp["zscore_top"][0]["order_id"] == "sp"


class TestValidate:
    def test_stdout_report(self, stream, capsys):
        assert main(["validate", stream]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["parsed"] == report["total_records"] == len(SPIKED)
        assert report["replay_counters"] == {}

    def test_report_to_file_and_reemit(self, stream, tmp_path, capsys):
        rep = tmp_path / "report.json"
        out = tmp_path / "canon.jsonl"
        assert main(["validate", stream, "--report", str(rep),
                     "--out", str(out)]) == 0
        assert json.loads(rep.read_text())["parsed"] == len(SPIKED)
        first = out.read_text().splitlines()[0]
        assert json.loads(first)["order_id"] == "b0"
        assert capsys.readouterr().out == ""            # quiet with --report

    def test_exchange_feed(self, capsys):
        import pathlib
        fixture = pathlib.Path(__file__).parent / "data" / "exchange_sample.jsonl"
        assert main(["validate", str(fixture)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["parsed"] == 4
        assert report["skipped_by_type"]["done_filled"] == 1


class TestGenerateInject:
    def test_generate_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["generate", "--seed", "5", "--duration", "5", "--rate", "40"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().splitlines()[0] == CANONICAL_HEADER
        assert "wrote" in capsys.readouterr().out

    def test_generate_jsonl(self, tmp_path):
        out = tmp_path / "s.jsonl"
        assert main(["generate", "--seed", "5", "--duration", "2",
                     "--rate", "40", "--out", str(out)]) == 0
        assert out.read_text().lstrip().startswith("{")

    def test_generate_validates_clean(self, tmp_path, capsys):
        out = tmp_path / "g.csv"
        assert main(["generate", "--seed", "9", "--duration", "10",
                     "--rate", "80", "--move-rate", "2", "--out",
                     str(out)]) == 0
        capsys.readouterr()
        assert main(["validate", str(out)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["parsed"] == report["total_records"]
        assert report["replay_counters"] == {}
        assert report["non_monotone_ts"] == 0

    def test_inject_and_detect_round_trip(self, tmp_path, outdir, capsys):
        bg = tmp_path / "bg.csv"
        assert main(["generate", "--seed", "3", "--duration", "30",
                     "--rate", "40", "--move-rate", "0",
                     "--start", "10:00:00", "--out", str(bg)]) == 0
        spec = tmp_path / "spoof.json"
        spec.write_text(json.dumps({
            "submit_ts": "10:00:10", "cancel_ts": "10:00:20",
            "size": "400", "side": "buy", "style": "traditional",
            "price_offset": "0.10"}))
        spiked = tmp_path / "spiked.csv"
        assert main(["inject", str(bg), "--spec", str(spec),
                     "--out", str(spiked)]) == 0
        labels = json.loads((tmp_path / "spiked.csv.labels.json").read_text())
        assert labels["order_ids"] == ["synthetic-spoof-1"]
        assert labels["quotes_at_submit"] == {"bid_ticks": 174,
                                              "ask_ticks": 175}
        capsys.readouterr()
        assert main(["detect", str(spiked), "-o", outdir,
                     "--threshold", "0", "-k", "2"]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        traced_ids = {t["order_id"]
                      for rows in report["traces"].values() for t in rows}
        assert "synthetic-spoof-1" in traced_ids

    def test_inject_warning_to_stderr(self, tmp_path, capsys):
        bg = tmp_path / "bg.csv"
        assert main(["generate", "--seed", "3", "--duration", "5",
                     "--rate", "40", "--move-rate", "0", "--out",
                     str(bg)]) == 0
        spec = tmp_path / "spoof.json"
        spec.write_text(json.dumps({
            "submit_ts": "10:00:02", "cancel_ts": "10:00:04",
            "size": "400", "price_offset": "0.90"}))    # far outside
        out = tmp_path / "sp.csv"
        capsys.readouterr()
        assert main(["inject", str(bg), "--spec", str(spec),
                     "--out", str(out)]) == 0
        assert "warning:" in capsys.readouterr().err

    def test_bad_spec_is_config_error(self, tmp_path, capsys):
        bg = tmp_path / "bg.csv"
        assert main(["generate", "--seed", "3", "--duration", "2",
                     "--rate", "40", "--out", str(bg)]) == 0
        spec = tmp_path / "spoof.json"
        spec.write_text('{"submit_ts": "10:00:01"}')
        assert main(["inject", str(bg), "--spec", str(spec),
                     "--out", str(tmp_path / "x.csv")]) == 1
        assert "error:" in capsys.readouterr().err
