import json

import pytest

from lcmdiv import fileio
from lcmdiv.cli import EXIT_COMPUTE, EXIT_INPUT, EXIT_OK, main, parse_args
from lcmdiv.divergence import power
from lcmdiv.inference import gof_statistic

from conftest import make_design


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParsing:
    def test_happy_path_gof(self, tmp_path, coleman_design, coleman_counts):
        design_path = tmp_path / "design.json"
        counts_path = tmp_path / "counts.csv"
        fileio.write_design(coleman_design, design_path)
        fileio.write_counts(coleman_counts, counts_path)
        cfg = parse_args([
            "gof", "--design", str(design_path), "--counts", str(counts_path),
            "--phi1", "power:a=0", "--phi2", "power:a=0.66667",
        ])
        assert cfg.subcommand == "gof"
        assert cfg.phi1.a == 0.0
        assert cfg.phi2.a == pytest.approx(0.66667)
        assert cfg.counts.N == 3398
        assert "sha256" in cfg.inputs["design"]

    def test_malformed_phi_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["gof", "--design", "x", "--counts", "y", "--phi1", "power:a=abc"])
        assert exc.value.code == 2
        assert "phi1" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["gof", "--design", "x", "--counts", "y", "--frobnicate"])
        assert exc.value.code == 2

    def test_missing_file_is_input_error(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "gof", "--design", str(tmp_path / "no.json"), "--counts", "bundled:coleman"
        )
        assert code == EXIT_INPUT
        assert "no.json" in err

    def test_bundled_scheme(self):
        cfg = parse_args(["fit", "--design", "bundled:coleman_m1", "--counts", "bundled:coleman"])
        assert cfg.design.k == 4 and cfg.counts.N == 3398

    def test_unknown_bundled_name(self, capsys):
        code, _, err = run_cli(capsys, "fit", "--design", "bundled:nonesuch", "--counts", "bundled:coleman")
        assert code == EXIT_INPUT and "nonesuch" in err

    def test_item_count_mismatch(self, capsys, tmp_path):
        design = make_design(seed=420, k=3, m=2, t=2, u=1)
        path = tmp_path / "d3.json"
        fileio.write_design(design, path)
        code, _, err = run_cli(capsys, "gof", "--design", str(path), "--counts", "bundled:coleman")
        assert code == EXIT_INPUT and "k = 4" in err

    def test_h_grammar(self):
        cfg = parse_args([
            "gof", "--design", "bundled:coleman_m1", "--counts", "bundled:coleman",
            "--h", "sharma-mittal:a=2,b=3",
        ])
        assert cfg.h.tag == "sharma_mittal" and cfg.h.a == 2.0 and cfg.h.b == 3.0

    def test_list_bundled(self, capsys):
        code, out, _ = run_cli(capsys, "fit", "--list-bundled")
        assert code == EXIT_OK and "coleman_m1" in out and "sim" in out


class TestGofCommand:
    @pytest.mark.parametrize("a,expected", [(0.0, 1.277), (2.0 / 3.0, 1.277), (1.0, 1.277)])
    def test_reproduces_worked_example_values(self, capsys, a, expected):
        code, out, _ = run_cli(
            capsys, "gof",
            "--design", "bundled:coleman_m1", "--counts", "bundled:coleman",
            "--phi1", f"power:a={a}", "--phi2", "power:a=0.6666666666666666",
            "--starts", "20", "--seed", "1", "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["test"]["statistic"] == pytest.approx(expected, abs=0.02)
        assert doc["test"]["dof"] == 4
        assert doc["decision"] == "no evidence against the model"

    def test_cli_matches_library(self, capsys, coleman_design, coleman_counts, coleman_fit_23):
        code, out, _ = run_cli(
            capsys, "gof",
            "--design", "bundled:coleman_m1", "--counts", "bundled:coleman",
            "--phi1", "power:a=1", "--phi2", "power:a=0.6666666666666666",
            "--starts", "30", "--seed", "1", "--format", "json",
        )
        doc = json.loads(out)
        library = gof_statistic(coleman_design, coleman_counts, power(1.0), coleman_fit_23)
        assert doc["test"]["statistic"] == pytest.approx(library.statistic, rel=1e-9)

    def test_h_transformed_run(self, capsys):
        code, out, _ = run_cli(
            capsys, "gof",
            "--design", "bundled:coleman_m1", "--counts", "bundled:coleman",
            "--phi1", "power:a=0.6666666666666666", "--phi2", "power:a=0.6666666666666666",
            "--h", "bhattacharyya", "--starts", "20", "--seed", "1", "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["test"]["h"] == "bhattacharyya"
        assert doc["test"]["statistic"] == pytest.approx(1.277, abs=0.05)

    def test_text_and_json_agree_to_full_precision(self, capsys, tmp_path):
        args = [
            "gof", "--design", "bundled:coleman_m1", "--counts", "bundled:coleman",
            "--phi1", "power:a=0", "--phi2", "power:a=0.6666666666666666",
            "--starts", "20", "--seed", "1",
        ]
        code, text_out, _ = run_cli(capsys, *args, "--format", "text")
        code2, json_out, _ = run_cli(capsys, *args, "--format", "json")
        doc = json.loads(json_out)
        stat_line = next(ln for ln in text_out.splitlines() if ln.startswith("test.statistic:"))
        assert float(stat_line.split(":", 1)[1]) == doc["test"]["statistic"]
        p_line = next(ln for ln in text_out.splitlines() if ln.startswith("test.p_value:"))
        assert float(p_line.split(":", 1)[1]) == doc["test"]["p_value"]

    def test_report_written_to_file(self, capsys, tmp_path):
        out_path = tmp_path / "report.json"
        code, out, _ = run_cli(
            capsys, "gof", "--design", "bundled:coleman_m1", "--counts", "bundled:coleman",
            "--phi1", "power:a=0", "--phi2", "power:a=0", "--starts", "10", "--seed", "1",
            "--format", "json", "--out", str(out_path),
        )
        assert code == EXIT_OK and out == ""
        doc = json.loads(out_path.read_text())
        assert doc["command"] == "gof"
        assert doc["conventions"]["divergence_arguments"].startswith("second")
        assert doc["inputs"]["design"]["sha256"]


class TestNestedAndSelect:
    def test_nested_runs_both_statistics(self, capsys, tmp_path):
        chain_design = tmp_path / "chain_basis.json"
        from lcmdiv.datasets import coleman_design_chain_basis

        fileio.write_design(coleman_design_chain_basis(), chain_design)
        code, out, _ = run_cli(
            capsys, "nested", "--design", str(chain_design), "--counts", "bundled:coleman",
            "--zero-lambda", "7,8",
            "--phi1", "power:a=0.6666666666666666", "--phi2", "power:a=0.6666666666666666",
            "--starts", "20", "--seed", "5", "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["options"]["h1"] == 12 and doc["options"]["h2"] == 10
        assert doc["tests"]["S"]["dof"] == 2 and doc["tests"]["T"]["dof"] == 2
        assert doc["tests"]["S"]["statistic"] == pytest.approx(3.754, abs=0.05)

    def test_nested_with_transform(self, capsys, tmp_path):
        from lcmdiv.datasets import coleman_design_chain_basis

        chain_design = tmp_path / "chain_basis.json"
        fileio.write_design(coleman_design_chain_basis(), chain_design)
        code, out, _ = run_cli(
            capsys, "nested", "--design", str(chain_design), "--counts", "bundled:coleman",
            "--zero-lambda", "7,8", "--h", "renyi:a=2",
            "--phi1", "power:a=0.6666666666666666", "--phi2", "power:a=0.6666666666666666",
            "--statistic", "T", "--starts", "15", "--seed", "5", "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["tests"]["T"]["h"] == "renyi:a=2.0"
        assert doc["tests"]["T"]["statistic"] > 0

    def test_select_reports_second_model(self, capsys):
        code, out, _ = run_cli(
            capsys, "select", "--chain", "bundled:coleman_chain", "--counts", "bundled:coleman",
            "--phi1", "power:a=0.6666666666666666", "--phi2", "power:a=0.6666666666666666",
            "--statistic", "S", "--starts", "25", "--seed", "5", "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["selected_model"] == 2
        assert doc["trail"][0]["reject"] is False
        assert doc["trail"][1]["reject"] is True
        assert doc["models"]["M2"]["free_params"] == 10


class TestSimulateCommand:
    def test_smoke_run_writes_outputs(self, capsys, tmp_path):
        plan_path = tmp_path / "plan.json"
        from lcmdiv.datasets import simulation_plan

        fileio.write_plan(
            simulation_plan(sample_sizes=(200,), a_values=(2.0 / 3.0,),
                            lambda8_grid=(0.0,), replications=3, seed=3),
            plan_path,
        )
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(
            capsys, "simulate", "--plan", str(plan_path), "--out-dir", str(out_dir),
            "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert (out_dir / "size_power.csv").exists()
        assert (out_dir / "power_N200.csv").exists()
        assert doc["cells"][0]["dof"] == 19

    def test_plan_overrides(self, capsys, tmp_path):
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(
            capsys, "simulate", "--plan", "bundled:sim",
            "--sizes", "200", "--lambda8", "0", "--a-values", "0.6666666666666666",
            "--replications", "2", "--seed", "11", "--out-dir", str(out_dir),
            "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["options"]["replications"] == 2
        assert doc["options"]["sample_sizes"] == [200]


class TestVerifyCommand:
    def test_full_rank_design_passes(self, capsys, tmp_path):
        design = make_design(seed=430, k=3, m=2, t=2, u=1)
        path = tmp_path / "small.json"
        fileio.write_design(design, path)
        code, out, _ = run_cli(
            capsys, "verify", "--design", str(path), "--zero-lambda", "2", "--format", "json"
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["all_pass"] is True
        assert all(item["pass"] for item in doc["identities"])

    def test_rank_deficient_design_fails_without_reduction(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--design", "bundled:sim_null")
        assert code == EXIT_COMPUTE
        assert "rank" in err

    def test_reduction_restores_full_rank(self, capsys):
        code, out, _ = run_cli(
            capsys, "verify", "--design", "bundled:sim_null", "--drop-eta", "1",
            "--format", "json",
        )
        assert code == EXIT_OK
        assert json.loads(out)["all_pass"] is True
