import io

import numpy as np
import pytest

from fisheropt.catalog import (
    ErrorCovariance,
    Measurement,
    MeasurementCatalog,
    assemble_covariance,
    build_item_index,
    build_row_layout,
)
from fisheropt.errors import InvalidInputError
from fisheropt.fimatoms import build_atoms, eval_fim, invert_covariance, pairs_from_items
from fisheropt.milp import (
    BnbConfig,
    enumerate_bruteforce,
    solve_milp,
    solve_relaxed_trace,
    trace_cost_vector,
)
from fisheropt.moproblem import A_OPT, build_problem, check_solution

from conftest import make_toy


def single_channel_problem(values, budget, per_sample=100.0, **kwargs):
    """One DCM channel, identity covariance, scalar parameter."""
    times = tuple(5.0 * t for t in range(len(values)))
    dcm = Measurement("D", "c", 0.0, per_sample, times, "dcm")
    cov = ErrorCovariance(channels=("c",), matrix=np.array([[1.0]]))
    cat = MeasurementCatalog(scms=(), dcms=(dcm,), covariance=cov)
    idx = build_item_index(cat)
    layout = build_row_layout(cat)
    sigma_inv = invert_covariance(assemble_covariance(cat, cov))
    atoms = build_atoms(
        np.asarray(values, dtype=float).reshape(-1, 1), layout, sigma_inv, idx,
        prior=np.array([[1.0]]),
    )
    return build_problem(cat, idx, atoms, A_OPT, budget=budget, **kwargs)


class TestTraceObjective:
    def test_single_scm_unit_rows(self):
        scm = Measurement("S", "c", 10.0, 0.0, (0.0, 1.0, 2.0), "scm")
        cov = ErrorCovariance(channels=("c",), matrix=np.array([[1.0]]))
        cat = MeasurementCatalog(scms=(scm,), dcms=(), covariance=cov)
        idx = build_item_index(cat)
        layout = build_row_layout(cat)
        sigma_inv = invert_covariance(assemble_covariance(cat, cov))
        atoms = build_atoms(np.ones((3, 1)), layout, sigma_inv, idx, np.zeros((1, 1)))
        obj = trace_cost_vector(atoms)
        assert obj.c_items[0] == pytest.approx(3.0)

    def test_constant_is_prior_trace(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng, n_params=4, prior_eps=0.25)
        obj = trace_cost_vector(atoms)
        assert obj.constant == pytest.approx(1.0)

    def test_unit_vector_probing(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng)
        obj = trace_cost_vector(atoms)
        const = obj.constant
        for i in range(idx.n_items):
            x = np.zeros(idx.n_items)
            x[i] = 1.0
            probe = float(np.trace(eval_fim(atoms, x, pairs_from_items(atoms, x)).matrix))
            assert obj.c_items[i] == pytest.approx(probe - const, rel=1e-10, abs=1e-12)

    def test_objective_affine_identity(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng)
        obj = trace_cost_vector(atoms)
        x = rng.uniform(size=idx.n_items)
        y = rng.uniform(size=atoms.n_pairs)
        assert obj.value(x, y) == pytest.approx(
            float(np.trace(eval_fim(atoms, x, y).matrix)), rel=1e-12
        )


class TestBruteForce:
    def test_single_item_selected_iff_improving(self):
        p = single_channel_problem([2.0], budget=100.0)
        sol = enumerate_bruteforce(p)
        assert sol.x_items.tolist() == [1.0]
        p0 = single_channel_problem([0.0], budget=100.0)
        sol0 = enumerate_bruteforce(p0)
        assert sol0.x_items.tolist() == [0.0]  # tie resolves to the empty set

    def test_tie_breaks_lexicographically(self):
        # two identical items but only one sample allowed: the vector-wise
        # smallest optimum keeps the later item unset-first pattern
        p = single_channel_problem([1.0, 1.0], budget=1000.0, l_d=1)
        sol = enumerate_bruteforce(p)
        assert sol.x_items.tolist() == [0.0, 1.0]

    def test_better_than_random_sampling(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng, n_scm=1, n_dcm=2, n_times=4)
        p = build_problem(cat, idx, atoms, A_OPT, budget=2500.0, l_total=4, t_min=7.0)
        from fisheropt.milp import feasible_binary

        best = enumerate_bruteforce(p)
        obj = trace_cost_vector(p.atoms)
        for _ in range(1000):
            x = rng.integers(0, 2, idx.n_items).astype(float)
            if feasible_binary(p, x):
                val = obj.value(x, pairs_from_items(p.atoms, x))
                assert val <= best.trace_value + 1e-9

    def test_cap_refusal(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng, n_dcm=3, n_times=8)
        p = build_problem(cat, idx, atoms, A_OPT, budget=1e6)
        with pytest.raises(InvalidInputError):
            enumerate_bruteforce(p, cap=20)


class TestSolveMilp:
    def test_budget_zero_empty_selection(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng, prior_eps=0.5)
        p = build_problem(cat, idx, atoms, A_OPT, budget=0.0)
        sol = solve_milp(p)
        assert sol.status == "optimal"
        assert not sol.x_items.any()
        assert sol.trace_value == pytest.approx(float(np.trace(atoms.prior)))

    def test_matches_bruteforce_over_budgets(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(
            rng, n_scm=1, n_dcm=2, n_times=4
        )
        budgets = [0, 700, 1500, 2600, 5000]
        prev = float("-inf")
        for b in budgets:
            p = build_problem(
                cat, idx, atoms, A_OPT, budget=b, l_total=5, l_d=3, t_min=7.0
            )
            sol = solve_milp(p)
            ref = enumerate_bruteforce(p)
            assert sol.trace_value == pytest.approx(ref.trace_value, abs=1e-8)
            assert check_solution(p, sol).ok
            # budget monotonicity along the sweep
            assert sol.trace_value >= prev - 1e-9
            prev = sol.trace_value

    def test_selection_matches_bruteforce_when_unique(self, rng):
        for seed in range(5):
            local = np.random.default_rng(1000 + seed)
            cat, idx, layout, q_stacked, sigma, atoms = make_toy(
                local, n_scm=1, n_dcm=2, n_times=3
            )
            p = build_problem(cat, idx, atoms, A_OPT, budget=2000.0, l_total=4)
            sol = solve_milp(p)
            ref = enumerate_bruteforce(p)
            assert sol.trace_value == pytest.approx(ref.trace_value, abs=1e-9)
            if abs(sol.trace_value - ref.trace_value) < 1e-9:
                second = _second_best(p, ref)
                if ref.trace_value - second > 1e-9:
                    assert np.array_equal(sol.x_items, ref.x_items)

    def test_lp_relaxation_dominates(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng, n_scm=1, n_dcm=2)
        for b in (500, 1200, 2400, 4000):
            p = build_problem(cat, idx, atoms, A_OPT, budget=b, l_total=4, t_min=7.0)
            lp_sol = solve_relaxed_trace(p)
            milp_sol = solve_milp(p)
            assert lp_sol.trace_value >= milp_sol.trace_value - 1e-9

    def test_warm_start_same_objective(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng, n_scm=2, n_dcm=2)
        p = build_problem(cat, idx, atoms, A_OPT, budget=3000.0, l_total=5)
        cold = solve_milp(p)
        warm = solve_milp(p, BnbConfig(warm_start=cold.x_items))
        assert warm.trace_value == pytest.approx(cold.trace_value, abs=1e-9)

    def test_node_log_csv(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng)
        p = build_problem(cat, idx, atoms, A_OPT, budget=1500.0)
        log = io.StringIO()
        solve_milp(p, BnbConfig(node_log=log))
        lines = [ln for ln in log.getvalue().splitlines() if ln]
        assert lines, "expected at least the root node logged"
        assert all(len(ln.split(",")) == 5 for ln in lines)

    def test_rejects_d_objective(self, rng):
        cat, idx, layout, q_stacked, sigma, atoms = make_toy(rng)
        from fisheropt.moproblem import D_OPT

        p = build_problem(cat, idx, atoms, D_OPT, budget=100.0)
        with pytest.raises(InvalidInputError):
            solve_milp(p)


def _second_best(p, best):
    """Best objective among feasible subsets differing from the optimum."""
    from fisheropt.milp import feasible_binary

    n = p.n_items
    obj = trace_cost_vector(p.atoms)
    second = float("-inf")
    for mask in range(1 << n):
        x = np.array([(mask >> i) & 1 for i in range(n)], dtype=float)
        if np.array_equal(x, best.x_items) or not feasible_binary(p, x):
            continue
        val = obj.value(x, pairs_from_items(p.atoms, x))
        second = max(second, val)
    return second
