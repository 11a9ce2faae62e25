import itertools
import json

import numpy as np
import pytest

from fisheropt.catalog import (
    ErrorCovariance,
    Measurement,
    MeasurementCatalog,
    build_item_index,
)
from fisheropt.errors import InvalidInputError
from fisheropt.fimatoms import pairs_from_items
from fisheropt.milp import feasible_binary
from fisheropt.moproblem import (
    A_OPT,
    D_OPT,
    build_problem,
    check_solution,
    make_solution,
    problem_size,
    problem_to_lp_text,
    solution_from_json,
    solution_to_json,
)

from conftest import build_kinetics_atoms, make_kinetics_catalog, make_toy


@pytest.fixture(scope="module")
def kinetics_problem(request):
    from conftest import KINETICS_NOMINAL
    from fisheropt.sensmodel import KineticsConfig, kinetics_sensitivities

    cat = make_kinetics_catalog()
    q = kinetics_sensitivities(KineticsConfig(**KINETICS_NOMINAL))
    atoms = build_kinetics_atoms(cat, q)
    idx = atoms.idx

    def build(budget, objective=A_OPT, relax=False):
        return build_problem(
            cat, idx, atoms, objective, budget,
            l_total=10, l_d=5, t_min=10.0, relax=relax,
        )

    return build


def named_solution(p, items=(), dcm_times=None):
    doc = {"items": {n: 1 for n in items}, "dcm_times": dcm_times or {}}
    return solution_from_json(p, doc)


class TestBuild:
    def test_mccormick_row_count_on_pair_toy(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(
            rng, n_scm=2, n_dcm=0, n_times=2
        )
        assert atoms.n_pairs == 1
        p = build_problem(cat, idx, atoms, A_OPT, budget=1e6)
        mc_rows = [t for t in p.row_tags if t[0].startswith("mccormick")]
        assert len(mc_rows) == 3

    def test_negative_budget_rejected(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng)
        with pytest.raises(InvalidInputError):
            build_problem(cat, idx, atoms, A_OPT, budget=-1.0)

    def test_t_min_spanning_horizon_warns(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng, n_times=3)
        with pytest.warns(UserWarning):
            build_problem(cat, idx, atoms, A_OPT, budget=1e6, t_min=1e4)

    def test_budget_zero_forces_empty_selection(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng)
        p = build_problem(cat, idx, atoms, A_OPT, budget=0.0)
        # every single-item selection costs money here, so none is feasible
        for i in range(idx.n_items):
            x = np.zeros(idx.n_items)
            x[i] = 1.0
            assert not feasible_binary(p, x)
        assert feasible_binary(p, np.zeros(idx.n_items))

    def test_kinetics_windows_forbid_adjacent_times(self, kinetics_problem):
        p = kinetics_problem(5000)
        sol = named_solution(p, dcm_times={"C_B_DCM": [45.0, 52.5]})
        report = check_solution(p, sol)
        assert not report.categories["windows"][0]
        ok = named_solution(p, dcm_times={"C_B_DCM": [45.0, 60.0]})
        assert check_solution(p, ok).categories["windows"][0]


class TestCheckSolution:
    def test_published_low_budget_solution_feasible_exact_cost(self, kinetics_problem):
        # two C_B samples at 45 and 60 min: installation plus two samples
        # lands exactly on the 1000 budget
        p = kinetics_problem(1000)
        sol = named_solution(p, dcm_times={"C_B_DCM": [45.0, 60.0]})
        assert sol.achieved_cost == pytest.approx(1000.0, abs=1e-9)
        report = check_solution(p, sol)
        assert report.ok, report.violations()

    def test_published_mid_budget_solution_feasible(self, kinetics_problem):
        p = kinetics_problem(1800)
        sol = named_solution(
            p, dcm_times={"C_A_DCM": [7.5, 22.5], "C_B_DCM": [60.0]}
        )
        assert sol.achieved_cost == pytest.approx(1600.0, abs=1e-9)
        assert check_solution(p, sol).ok

    def test_window_violation_flagged(self, kinetics_problem):
        p = kinetics_problem(5000)
        sol = named_solution(p, dcm_times={"C_B_DCM": [7.5, 15.0]})
        report = check_solution(p, sol)
        assert not report.ok
        assert not report.categories["windows"][0]

    def test_per_dcm_cap_violation_flagged(self, kinetics_problem):
        p = kinetics_problem(5000)
        sol = named_solution(p, dcm_times={"C_B_DCM": [0.0, 15.0, 30.0, 45.0, 60.0, 22.5]})
        report = check_solution(p, sol)
        assert not report.categories["sample_counts"][0]

    def test_total_cap_violation_flagged(self, kinetics_problem):
        p = kinetics_problem(20000)
        sol = named_solution(
            p,
            dcm_times={
                "C_A_DCM": [0.0, 15.0, 30.0, 45.0],
                "C_B_DCM": [0.0, 15.0, 30.0, 45.0],
                "C_C_DCM": [0.0, 15.0, 30.0],
            },
        )
        report = check_solution(p, sol)
        assert not report.categories["sample_counts"][0]

    def test_budget_violation_flagged(self, kinetics_problem):
        p = kinetics_problem(900)
        sol = named_solution(p, dcm_times={"C_B_DCM": [45.0, 60.0]})
        report = check_solution(p, sol)
        assert not report.categories["budget"][0]

    def test_objectives_recomputed(self, kinetics_problem):
        p = kinetics_problem(1000)
        sol = named_solution(p, dcm_times={"C_B_DCM": [45.0, 60.0]})
        sol.trace_value += 1.0
        report = check_solution(p, sol)
        assert not report.categories["objectives"][0]


class TestProblemSize:
    def test_kinetics_size_report(self, kinetics_problem):
        p = kinetics_problem(3000)
        size = problem_size(p)
        assert size.n_items == 30
        assert size.n_params == 4
        assert size.n_units == 3
        assert size.formula_variables == 465 + 10 + 3 + 2
        assert size.formula_equalities == 12
        assert size.formula_inequalities == 3 * 435 + 2 + 6 + 54

    def test_empty_catalog(self):
        cat = MeasurementCatalog(scms=(), dcms=())
        idx = build_item_index(cat)
        from fisheropt.fimatoms import FimAtoms

        atoms = FimAtoms(
            n_params=2, idx=idx, diag=np.zeros((0, 2, 2)), pairs=(),
            pair_mats=np.zeros((0, 2, 2)), prior=np.eye(2),
        )
        p = build_problem(cat, idx, atoms, A_OPT, budget=100.0)
        size = problem_size(p)
        assert size.n_items == 0 and size.n_pairs_retained == 0
        assert size.n_inequalities == 1  # just the budget row

    def test_pruning_changes_inequalities_by_three_per_pair(self, rng):
        from fisheropt.fimatoms import build_atoms, invert_covariance

        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng)
        sigma_inv = invert_covariance(sigma)
        unpruned = build_atoms(q_stacked, layout, sigma_inv, idx, atoms.prior, prune=False)
        p1 = build_problem(cat, idx, atoms, A_OPT, budget=1e6)
        p2 = build_problem(cat, idx, unpruned, A_OPT, budget=1e6)
        n_pruned = unpruned.n_pairs - atoms.n_pairs
        assert n_pruned > 0
        assert len(p2.senses) - len(p1.senses) == 3 * n_pruned


class TestMcCormickExactness:
    def test_binary_points_force_conjunction(self, rng):
        # on every binary item vector, the three inequalities pin the pair
        # variable interval to exactly the logical AND
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(
            rng, n_scm=2, n_dcm=2, n_times=3
        )
        assert idx.n_items <= 12
        for bits in itertools.product((0.0, 1.0), repeat=idx.n_items):
            x = np.array(bits)
            for a, b in atoms.pairs:
                lo = max(0.0, x[a] + x[b] - 1.0)
                hi = min(x[a], x[b])
                assert lo == hi == (x[a] and x[b])


class TestWindowSemantics:
    def test_enumerated_feasible_sets_on_four_point_grid(self):
        dcm = Measurement("D", "c", 0.0, 0.0, (0.0, 5.0, 10.0, 15.0), "dcm")
        cov = ErrorCovariance(channels=("c",), matrix=np.array([[1.0]]))
        cat = MeasurementCatalog(scms=(), dcms=(dcm,), covariance=cov)
        idx = build_item_index(cat)
        from fisheropt.fimatoms import build_atoms, invert_covariance
        from fisheropt.catalog import assemble_covariance, build_row_layout

        layout = build_row_layout(cat)
        sigma_inv = invert_covariance(assemble_covariance(cat, cov))
        atoms = build_atoms(np.ones((4, 1)), layout, sigma_inv, idx, np.eye(1))
        p = build_problem(cat, idx, atoms, A_OPT, budget=1e6, t_min=10.0)
        feasible = set()
        for bits in itertools.product((0, 1), repeat=4):
            x = np.array(bits, dtype=float)
            if feasible_binary(p, x):
                feasible.add(tuple(int(t) for t, b in zip((0, 5, 10, 15), bits) if b))
        assert feasible == {
            (), (0,), (5,), (10,), (15,), (0, 10), (0, 15), (5, 15),
        }

    def test_feasible_set_monotone_in_limits(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(
            rng, n_scm=1, n_dcm=2, n_times=3
        )
        base = dict(l_total=2, l_d=1, t_min=5.0)
        p_small = build_problem(cat, idx, atoms, A_OPT, budget=1500.0, **base)
        p_big = build_problem(
            cat, idx, atoms, A_OPT, budget=2500.0, l_total=3, l_d=2, t_min=5.0
        )
        for bits in itertools.product((0.0, 1.0), repeat=idx.n_items):
            x = np.array(bits)
            if feasible_binary(p_small, x):
                assert feasible_binary(p_big, x)


class TestSerialization:
    def test_solution_json_roundtrip(self, kinetics_problem):
        p = kinetics_problem(1800)
        sol = named_solution(p, items=["C_B_SCM"], dcm_times={"C_A_DCM": [7.5]})
        doc = solution_to_json(p, sol)
        sol2 = solution_from_json(p, json.loads(doc))
        assert np.array_equal(sol.x_items, sol2.x_items)
        assert sol2.trace_value == pytest.approx(sol.trace_value)

    def test_lp_text_export_contains_all_rows(self, kinetics_problem):
        p = kinetics_problem(1000)
        text = problem_to_lp_text(p)
        assert text.count("\n r") == len(p.senses)

    def test_make_solution_consistency(self, kinetics_problem):
        p = kinetics_problem(2200)
        x = np.zeros(p.n_items)
        x[p.idx.n_scm] = 1.0  # first DCM sample
        sol = make_solution(p, x, status="optimal")
        assert sol.x_pairs == pytest.approx(pairs_from_items(p.atoms, x))
        assert sol.achieved_cost == pytest.approx(p.selection_cost(x))
