import json
from pathlib import Path

import numpy as np
import pytest

from fisheropt.cli import (
    SweepSpec,
    build_workspace,
    cmd_fim,
    cmd_report,
    cmd_solve,
    cmd_sweep,
    load_config,
    main,
    parse_report,
    run_sweep,
    write_sweep_outputs,
)
from fisheropt.errors import ConfigError, NoDataError

from conftest import write_kinetics_config


@pytest.fixture(scope="module")
def kinetics_config_path(tmp_path_factory):
    return write_kinetics_config(tmp_path_factory.mktemp("kin"))


class TestConfig:
    def test_load_valid(self, kinetics_config_path):
        cfg = load_config(kinetics_config_path)
        assert cfg.l_total == 10 and cfg.t_min == 10.0
        assert cfg.prior_epsilon == 1e-8

    def test_missing_covariance_pointer(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        cat = json.loads((tmp_path / "catalog.json").read_text())
        del cat["covariance"]
        (tmp_path / "catalog.json").write_text(json.dumps(cat))
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert exc.value.pointer == "/catalog/covariance"

    def test_unknown_sensitivity_kind_pointer(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        doc = json.loads(path.read_text())
        doc["sensitivities"]["kind"] = "oracle"
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert exc.value.pointer == "/sensitivities/kind"

    def test_bad_epsilon_pointer(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        doc = json.loads(path.read_text())
        doc["prior_fim_epsilon"] = 0.0
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert exc.value.pointer == "/prior_fim_epsilon"


class TestFim:
    def test_summary_lists_all_eigenvalues(self, tmp_path):
        path = write_kinetics_config(tmp_path, cache=True)
        out = cmd_fim(path)
        text = (out / "fim_summary.txt").read_text()
        assert "eigenvalues" in text
        assert len([ln for ln in text.splitlines() if ln.startswith("  ")]) == 4
        assert (out / "atoms.npz").exists()

    def test_rerun_hits_cache_with_same_key(self, tmp_path):
        path = write_kinetics_config(tmp_path, cache=True)
        cfg = load_config(path)
        ws1 = build_workspace(cfg)
        assert not ws1.cache_hit
        ws2 = build_workspace(cfg)
        assert ws2.cache_hit
        assert ws1.cache_key == ws2.cache_key
        assert np.array_equal(ws1.atoms.diag, ws2.atoms.diag)


class TestSolve:
    def test_dminlp_budget_zero(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        code = cmd_solve(path, "d-minlp", 0)
        assert code == 0
        doc = json.loads((tmp_path / "out" / "solution_d-minlp_0.json").read_text())
        assert doc["dcm_times"] == {"C_A_DCM": [], "C_B_DCM": [], "C_C_DCM": []}
        assert all(v == 0 for v in doc["items"].values())
        # log det of the 1e-8-scaled prior: 4 * ln(1e-8)
        assert doc["logdet"] == pytest.approx(4 * np.log(1e-8), rel=1e-9)

    def test_a_lp_dominates_a_milp(self, kinetics_config_path):
        cfg = load_config(kinetics_config_path)
        ws = build_workspace(cfg)
        from fisheropt.cli import _solve_one

        lp_sol, _ = _solve_one(ws, "a-lp", 2200)
        milp_sol, _ = _solve_one(ws, "a-milp", 2200)
        assert lp_sol.trace_value >= milp_sol.trace_value - 1e-9

    def test_check_file_written(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        assert cmd_solve(path, "a-milp", 1000) == 0
        assert (tmp_path / "out" / "check_a-milp_1000.txt").exists()


class TestSweep:
    def test_records_and_outputs(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        spec = SweepSpec(
            budgets=(1000, 1800, 2600),
            objectives=("a-lp", "a-milp"),
            output_dir=tmp_path / "sweep",
        )
        records = cmd_sweep(path, spec)
        assert len(records) == 6
        assert (tmp_path / "sweep" / "pareto.csv").exists()
        assert (tmp_path / "sweep" / "pareto_trace.dat").exists()
        assert (tmp_path / "sweep" / "pareto_logdet.dat").exists()
        sols = sorted((tmp_path / "sweep").glob("solution_*.json"))
        assert len(sols) == 6

    def test_single_budget_single_objective(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        spec = SweepSpec(
            budgets=(1400,), objectives=("a-milp",), output_dir=tmp_path / "s1"
        )
        records = cmd_sweep(path, spec)
        assert len(records) == 1

    def test_warm_chain_objective_invariance(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        cfg = load_config(path)
        ws = build_workspace(cfg)
        budgets = (1000, 1800)
        on = run_sweep(ws, SweepSpec(budgets=budgets, objectives=("a-milp", "d-minlp"),
                                     warm_chain=True, output_dir=tmp_path / "on"))[0]
        off = run_sweep(ws, SweepSpec(budgets=budgets, objectives=("a-milp", "d-minlp"),
                                      warm_chain=False, output_dir=tmp_path / "off"))[0]
        for r_on, r_off in zip(on, off):
            assert r_on.objective == r_off.objective and r_on.budget == r_off.budget
            if r_on.objective == "a-milp":
                assert r_on.trace == pytest.approx(r_off.trace, abs=1e-8)
            else:
                assert r_on.logdet == pytest.approx(r_off.logdet, abs=1e-6)

    def test_budgets_must_ascend(self, tmp_path):
        with pytest.raises(ConfigError):
            SweepSpec(budgets=(2000, 1000))

    def test_pareto_csv_deterministic(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        cfg = load_config(path)
        ws = build_workspace(cfg)
        spec1 = SweepSpec(budgets=(1000, 1400), objectives=("a-lp", "a-milp"),
                          output_dir=tmp_path / "r1")
        spec2 = SweepSpec(budgets=(1000, 1400), objectives=("a-lp", "a-milp"),
                          output_dir=tmp_path / "r2")
        rec1, sols1 = run_sweep(ws, spec1)
        rec2, sols2 = run_sweep(ws, spec2)
        write_sweep_outputs(rec1, sols1, spec1.output_dir)
        write_sweep_outputs(rec2, sols2, spec2.output_dir)
        b1 = (spec1.output_dir / "pareto.csv").read_bytes()
        b2 = (spec2.output_dir / "pareto.csv").read_bytes()
        assert b1 == b2


class TestReport:
    def test_report_and_parse_back(self, tmp_path):
        path = write_kinetics_config(tmp_path)
        spec = SweepSpec(
            budgets=(1000, 2200), objectives=("a-milp",), output_dir=tmp_path / "sw"
        )
        cmd_sweep(path, spec)
        outputs = cmd_report(tmp_path / "sw")
        assert "a-milp" in outputs
        parsed = parse_report(outputs["a-milp"])
        docs = {
            b: json.loads((tmp_path / "sw" / f"solution_a-milp_{b}.json").read_text())
            for b in (1000, 2200)
        }
        for b in (1000, 2200):
            for name, v in docs[b]["items"].items():
                assert parsed[b]["items"][name] == v
            for name, ts in docs[b]["dcm_times"].items():
                assert parsed[b]["dcm_times"][name] == sorted(ts)

    def test_empty_dir_raises(self, tmp_path):
        with pytest.raises(NoDataError):
            cmd_report(tmp_path)


class TestMain:
    def test_cli_end_to_end(self, tmp_path, capsys):
        path = write_kinetics_config(tmp_path)
        assert main(["fim", str(path), "--out", str(tmp_path / "fimout")]) == 0
        assert main([
            "solve", str(path), "--objective", "a-milp", "--budget", "1000",
            "--out", str(tmp_path / "solveout"),
        ]) == 0
        assert main([
            "sweep", str(path), "--budgets", "1000,1400",
            "--objectives", "a-milp", "--out", str(tmp_path / "sweepout"),
        ]) == 0
        assert main(["report", str(tmp_path / "sweepout")]) == 0

    def test_budget_range_parsing(self, tmp_path):
        from fisheropt.cli import _parse_budgets

        assert _parse_budgets("1000:5000:400") == tuple(range(1000, 5001, 400))
        assert _parse_budgets("100,200") == (100, 200)
