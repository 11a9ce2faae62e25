"""Batch front end: configuration, single solves, budget sweeps, reports.

One JSON document fully determines a run: the measurement catalog, the
sensitivity source (built-in kinetics simulation or an ingested CSV),
sampling constraints, the prior-information regularization, and solver
tolerances. On top of that the module offers four commands:

* ``fim``    -- assemble the information atoms, cache them, summarize;
* ``solve``  -- one objective at one budget, with a full solution check;
* ``sweep``  -- the epsilon-constraint budget sweep behind Pareto fronts,
  optionally chaining warm starts from budget to budget and seeding the
  D-objective solvers with the A-objective selections at the same budget;
* ``report`` -- selection tables (SCM 0/1 rows, DCM sample-time rows, one
  column per budget) rendered from sweep results.

Budgets are integer dollars to keep constraint boundaries exact.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import catalog as cat_mod
from .catalog import MeasurementCatalog, build_item_index, build_row_layout
from .doptsolve import CutPool, FwConfig, OaConfig, solve_minlp_dopt, solve_relaxed_dopt
from .errors import ConfigError, FisheroptError, NoDataError
from .fimatoms import (
    FimAtoms,
    atoms_content_key,
    build_atoms,
    eval_fim,
    invert_covariance,
    load_atoms,
    save_atoms,
)
from .lp import OPTIMAL
from .milp import BnbConfig, solve_milp, solve_relaxed_trace
from .moproblem import (
    A_OPT,
    D_OPT,
    MoProblem,
    Solution,
    build_problem,
    check_solution,
    solution_to_json,
)
from .sensmodel import KineticsConfig, Manifest, ingest_sensitivities, kinetics_sensitivities
from .symmat import eig_sym

__all__ = [
    "RunConfig",
    "SweepSpec",
    "ParetoRecord",
    "load_config",
    "build_workspace",
    "cmd_fim",
    "cmd_solve",
    "cmd_sweep",
    "cmd_report",
    "parse_report",
    "main",
]

OBJECTIVES = ("a-lp", "a-milp", "d-nlp", "d-minlp")


def _require(doc: dict, key: str, pointer: str):
    if key not in doc:
        raise ConfigError("missing required field", pointer=f"{pointer}/{key}")
    return doc[key]


@dataclass
class RunConfig:
    """Validated run configuration."""

    catalog: MeasurementCatalog
    sens_kind: str
    kinetics: KineticsConfig | None
    csv_path: str | None
    manifest: Manifest | None
    l_total: int | None
    l_d: object
    t_min: float | None
    prior_epsilon: float
    output_dir: Path
    cache_dir: Path | None
    solver: dict = field(default_factory=dict)

    def bnb_config(self, **overrides) -> BnbConfig:
        s = self.solver
        kw = dict(
            int_tol=s.get("int_tol", 1e-6),
            rel_gap=s.get("milp_gap", 1e-9),
            node_cap=s.get("node_cap", 200_000),
        )
        kw.update(overrides)
        return BnbConfig(**kw)

    def fw_config(self, **overrides) -> FwConfig:
        s = self.solver
        kw = dict(
            max_iter=s.get("fw_max_iter", 500),
            gap_tol=s.get("fw_gap_tol", 1e-7),
        )
        kw.update(overrides)
        return FwConfig(**kw)

    def oa_config(self, **overrides) -> OaConfig:
        s = self.solver
        kw = dict(
            gap_tol=s.get("oa_gap_tol", 1e-6),
            max_iter=s.get("oa_max_iter", 60),
            fw=self.fw_config(),
            master=self.bnb_config(),
        )
        kw.update(overrides)
        return OaConfig(**kw)


def load_config(source) -> RunConfig:
    """Parse and validate a run configuration document.

    ``source`` may be a path, a JSON string, or a dict. Violations raise
    :class:`ConfigError` carrying a JSON-pointer path.
    """
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        base = Path(str(source)).parent
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        base = Path(".")
        doc = json.loads(source) if isinstance(source, str) else dict(source)

    def resolve(p):
        q = Path(p)
        return q if q.is_absolute() else base / q

    cat_src = _require(doc, "catalog", "")
    try:
        cat = cat_mod.load_catalog(resolve(cat_src) if isinstance(cat_src, str) else cat_src)
    except FisheroptError as exc:
        raise ConfigError(str(exc), pointer="/catalog") from exc
    if cat.covariance is None:
        raise ConfigError("missing required field", pointer="/catalog/covariance")

    sens = _require(doc, "sensitivities", "")
    kind = _require(sens, "kind", "/sensitivities")
    kin = None
    csv_path = None
    manifest = None
    if kind == "kinetics":
        kcfg = _require(sens, "config", "/sensitivities")
        try:
            kin = KineticsConfig(**kcfg)
        except (TypeError, FisheroptError) as exc:
            raise ConfigError(str(exc), pointer="/sensitivities/config") from exc
    elif kind == "csv":
        csv_path = str(resolve(_require(sens, "path", "/sensitivities")))
        man_src = _require(sens, "manifest", "/sensitivities")
        try:
            manifest = Manifest.from_json(
                resolve(man_src) if isinstance(man_src, str) else man_src
            )
        except (KeyError, FisheroptError) as exc:
            raise ConfigError(str(exc), pointer="/sensitivities/manifest") from exc
    else:
        raise ConfigError(f"unknown kind {kind!r}", pointer="/sensitivities/kind")

    cons = doc.get("constraints", {})
    l_total = cons.get("l_total")
    l_d = cons.get("l_d")
    t_min = cons.get("t_min")
    if l_total is not None and l_total < 0:
        raise ConfigError("l_total must be nonnegative", pointer="/constraints/l_total")

    eps = float(doc.get("prior_fim_epsilon", 1e-8))
    if eps <= 0:
        raise ConfigError("must be positive", pointer="/prior_fim_epsilon")

    out_dir = resolve(doc.get("output_dir", "out"))
    cache_dir = doc.get("cache_dir")
    return RunConfig(
        catalog=cat,
        sens_kind=kind,
        kinetics=kin,
        csv_path=csv_path,
        manifest=manifest,
        l_total=l_total,
        l_d=l_d,
        t_min=t_min,
        prior_epsilon=eps,
        output_dir=Path(out_dir),
        cache_dir=Path(resolve(cache_dir)) if cache_dir else None,
        solver=dict(doc.get("solver", {})),
    )


@dataclass
class Workspace:
    """Everything derived from a configuration, ready to build problems."""

    cfg: RunConfig
    idx: object
    layout: object
    q_stacked: np.ndarray
    sigma: object
    atoms: FimAtoms
    cache_key: str
    cache_hit: bool = False

    def problem(self, objective: str, budget: float, relax: bool) -> MoProblem:
        return build_problem(
            self.cfg.catalog,
            self.idx,
            self.atoms,
            objective,
            budget,
            l_total=self.cfg.l_total,
            l_d=self.cfg.l_d,
            t_min=self.cfg.t_min,
            relax=relax,
        )


def build_workspace(cfg: RunConfig) -> Workspace:
    """Resolve sensitivities, assemble covariance and atoms (cache-aware)."""
    if cfg.sens_kind == "kinetics":
        q = kinetics_sensitivities(cfg.kinetics)
    else:
        q = ingest_sensitivities(cfg.csv_path, cfg.manifest)
    cat = cfg.catalog
    idx = build_item_index(cat)
    layout = build_row_layout(cat)
    q_stacked = cat_mod.stack_sensitivities(cat, q)
    sigma = cat_mod.assemble_covariance(cat, cat.covariance)
    prior = cfg.prior_epsilon * np.eye(len(q.parameters))
    key = atoms_content_key(cat, q_stacked, sigma.dense(), prior)
    cache_hit = False
    atoms = None
    if cfg.cache_dir is not None:
        cache_file = cfg.cache_dir / f"atoms_{key}.npz"
        if cache_file.exists():
            atoms = load_atoms(cache_file, idx)
            cache_hit = True
    if atoms is None:
        sigma_inv = invert_covariance(sigma)
        atoms = build_atoms(q_stacked, layout, sigma_inv, idx, prior)
        if cfg.cache_dir is not None:
            cfg.cache_dir.mkdir(parents=True, exist_ok=True)
            save_atoms(atoms, cfg.cache_dir / f"atoms_{key}.npz")
    return Workspace(
        cfg=cfg, idx=idx, layout=layout, q_stacked=q_stacked, sigma=sigma,
        atoms=atoms, cache_key=key, cache_hit=cache_hit,
    )


def cmd_fim(config_source, out_dir: Path | None = None) -> Path:
    """Assemble atoms, cache them, and write a readable FIM summary."""
    cfg = load_config(config_source)
    ws = build_workspace(cfg)
    out = Path(out_dir) if out_dir else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    save_atoms(ws.atoms, out / "atoms.npz")
    m_full = ws.atoms.full_information()
    w, _ = eig_sym(m_full)
    fim = eval_fim(
        ws.atoms, np.ones(ws.atoms.n_items), np.ones(ws.atoms.n_pairs)
    )
    lines = [
        f"content key: {ws.cache_key}",
        f"items: {ws.atoms.n_items}  pairs retained: {ws.atoms.n_pairs}  "
        f"parameters: {ws.atoms.n_params}",
        f"full-selection trace: {fim.trace!r}",
        f"full-selection logdet: {float(np.sum(np.log(w)))!r}",
        "full-selection eigenvalues (descending):",
    ]
    lines += [f"  {v!r}" for v in w]
    (out / "fim_summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def _solve_one(
    ws: Workspace,
    objective: str,
    budget: int,
    bnb: BnbConfig | None = None,
    fw: FwConfig | None = None,
    oa: OaConfig | None = None,
) -> tuple[Solution, MoProblem]:
    cfg = ws.cfg
    if objective == "a-lp":
        p = ws.problem(A_OPT, budget, relax=True)
        sol = solve_relaxed_trace(p)
    elif objective == "a-milp":
        p = ws.problem(A_OPT, budget, relax=False)
        sol = solve_milp(p, bnb or cfg.bnb_config())
    elif objective == "d-nlp":
        p = ws.problem(D_OPT, budget, relax=True)
        sol = solve_relaxed_dopt(p, fw or cfg.fw_config())
    elif objective == "d-minlp":
        p = ws.problem(D_OPT, budget, relax=False)
        sol = solve_minlp_dopt(p, oa or cfg.oa_config())
    else:
        raise ConfigError(f"unknown objective {objective!r}", pointer="/objective")
    return sol, p


def cmd_solve(config_source, objective: str, budget: int, out_dir=None) -> int:
    """Run one solver at one budget; verify and write the solution.

    Returns a process exit code: nonzero when the solve is infeasible or
    the independent check finds violations.
    """
    cfg = load_config(config_source)
    ws = build_workspace(cfg)
    sol, p = _solve_one(ws, objective, budget)
    out = Path(out_dir) if out_dir else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report = check_solution(p, sol)
    (out / f"solution_{objective}_{budget}.json").write_text(
        solution_to_json(p, sol), encoding="utf-8"
    )
    (out / f"check_{objective}_{budget}.txt").write_text(str(report) + "\n", encoding="utf-8")
    if sol.status == "infeasible":
        return 2
    if not report.ok and not p.relax:
        return 3
    return 0


@dataclass(frozen=True)
class SweepSpec:
    """A budget sweep request."""

    budgets: tuple[int, ...]
    objectives: tuple[str, ...] = OBJECTIVES
    warm_chain: bool = True
    output_dir: Path = Path("out")
    parallel: bool = False
    threads: int | None = None

    def __post_init__(self):
        budgets = tuple(int(b) for b in self.budgets)
        if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
            raise ConfigError("budgets must be strictly ascending", pointer="/budgets")
        if not budgets:
            raise ConfigError("at least one budget required", pointer="/budgets")
        bad = [o for o in self.objectives if o not in OBJECTIVES]
        if bad or not self.objectives:
            raise ConfigError(
                f"objectives must be a nonempty subset of {OBJECTIVES}, got {bad}",
                pointer="/objectives",
            )
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "objectives", tuple(self.objectives))
        object.__setattr__(self, "output_dir", Path(self.output_dir))


@dataclass
class ParetoRecord:
    budget: int
    objective: str
    trace: float
    logdet: float
    cost: float
    status: str
    nodes: int
    iters: int

    def row(self) -> list[str]:
        return [
            str(self.budget),
            self.objective,
            repr(self.trace),
            repr(self.logdet),
            repr(self.cost),
            self.status,
            str(self.nodes),
            str(self.iters),
        ]


def _record(budget: int, objective: str, sol: Solution) -> ParetoRecord:
    stats = sol.stats
    nodes = int(stats.get("nodes", stats.get("master_nodes", 0)))
    iters = int(
        stats.get(
            "lp_iterations",
            stats.get("oa_iterations", stats.get("fw_iterations", 0)),
        )
    )
    return ParetoRecord(
        budget=budget,
        objective=objective,
        trace=sol.trace_value,
        logdet=sol.logdet_value,
        cost=sol.achieved_cost,
        status=sol.status,
        nodes=nodes,
        iters=iters,
    )


def run_sweep(ws: Workspace, spec: SweepSpec):
    """Solve the requested objectives over ascending budgets.

    With ``warm_chain`` each solve seeds from the previous budget's
    solution of the same objective, and D-objective solves additionally
    seed from the A-objective selection at the same budget. Parallel mode
    solves budgets concurrently and therefore forces the chain off.
    """
    cfg = ws.cfg
    records: list[ParetoRecord] = []
    solutions: dict[tuple[str, int], tuple[Solution, MoProblem]] = {}
    warm_chain = spec.warm_chain and not spec.parallel
    a_sel: dict[int, np.ndarray] = {}
    # hypograph cuts are budget-independent majorants, so one pool serves
    # the whole chained sweep; parallel solves keep their own pools
    oa_pool = CutPool() if warm_chain else None
    first_budget = spec.budgets[0]

    def solve(objective: str, budget: int, prev: Solution | None):
        if objective == "a-lp":
            return _solve_one(ws, objective, budget)
        if objective == "a-milp":
            bnb = cfg.bnb_config(
                warm_start=prev.x_items if prev is not None else None
            )
            return _solve_one(ws, objective, budget, bnb=bnb)
        if objective == "d-nlp":
            fw = cfg.fw_config()
            if prev is not None:
                p_rel = ws.problem(D_OPT, budget, relax=True)
                x0 = np.concatenate([prev.x_items, prev.x_pairs, prev.w])
                if x0.shape == (p_rel.n_vars,):
                    fw.x0 = x0
            return _solve_one(ws, objective, budget, fw=fw)
        warm: list[np.ndarray] = []
        if budget in a_sel:
            warm.append(a_sel[budget])
        if prev is not None:
            warm.append(prev.x_items)
        oa = cfg.oa_config(
            warm_starts=tuple(warm),
            cut_pool=oa_pool,
            seed_relaxed=(oa_pool is None) or budget == first_budget,
        )
        return _solve_one(ws, objective, budget, oa=oa)

    for objective in [o for o in OBJECTIVES if o in spec.objectives]:
        results: dict[int, tuple[Solution, MoProblem]] = {}
        if spec.parallel:
            workers = spec.threads or int(os.environ.get("FISHEROPT_THREADS", "0")) or None
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futs = {
                    b: pool.submit(solve, objective, b, None) for b in spec.budgets
                }
                results = {b: f.result() for b, f in futs.items()}
        else:
            prev = None
            for b in spec.budgets:
                sol, p = solve(objective, b, prev if warm_chain else None)
                results[b] = (sol, p)
                prev = sol
        for b in spec.budgets:
            sol, p = results[b]
            if objective == "a-milp":
                a_sel[b] = sol.x_items
            solutions[(objective, b)] = (sol, p)
            records.append(_record(b, objective, sol))

    _assert_sweep_monotone(records)
    return records, solutions


def _assert_sweep_monotone(records: list[ParetoRecord]) -> None:
    """Within one objective, its own metric must not decrease with budget."""
    by_obj: dict[str, list[ParetoRecord]] = {}
    for r in records:
        by_obj.setdefault(r.objective, []).append(r)
    for obj, recs in by_obj.items():
        recs = sorted(recs, key=lambda r: r.budget)
        metric = (lambda r: r.trace) if obj.startswith("a") else (lambda r: r.logdet)
        for r1, r2 in zip(recs, recs[1:]):
            m1, m2 = metric(r1), metric(r2)
            tol = 1e-9 * max(1.0, abs(m1))
            if np.isfinite(m1) and m2 < m1 - tol:
                raise FisheroptError(
                    f"sweep monotonicity violated for {obj}: metric fell from "
                    f"{m1!r} at budget {r1.budget} to {m2!r} at budget {r2.budget}"
                )


def write_sweep_outputs(records, solutions, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["budget", "objective", "trace", "logdet", "cost", "status", "nodes", "iters"]
    ordered = sorted(records, key=lambda r: (OBJECTIVES.index(r.objective), r.budget))
    with open(out_dir / "pareto.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in ordered:
            fh.write(",".join(r.row()) + "\n")
    for (objective, budget), (sol, p) in sorted(
        solutions.items(), key=lambda kv: (OBJECTIVES.index(kv[0][0]), kv[0][1])
    ):
        path = out_dir / f"solution_{objective}_{budget}.json"
        path.write_text(solution_to_json(p, sol), encoding="utf-8")
    budgets = sorted({r.budget for r in records})
    objs = [o for o in OBJECTIVES if any(r.objective == o for r in records)]
    for metric in ("trace", "logdet"):
        lines = ["# budget " + " ".join(objs)]
        for b in budgets:
            vals = []
            for o in objs:
                rec = next((r for r in records if r.budget == b and r.objective == o), None)
                vals.append(repr(getattr(rec, metric)) if rec else "nan")
            lines.append(" ".join([str(b)] + vals))
        (out_dir / f"pareto_{metric}.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_sweep(config_source, spec: SweepSpec):
    """Run a sweep and write pareto.csv, solution files, and plot data."""
    cfg = load_config(config_source)
    ws = build_workspace(cfg)
    records, solutions = run_sweep(ws, spec)
    write_sweep_outputs(records, solutions, spec.output_dir)
    return records


def cmd_report(results_dir) -> dict[str, Path]:
    """Render per-objective selection tables from sweep solution files.

    Each table has one column per budget, SCM rows holding 0/1, and DCM
    rows listing the selected sample times, mirroring how selection tables
    are usually published.
    """
    results_dir = Path(results_dir)
    files = sorted(results_dir.glob("solution_*.json"))
    if not files:
        raise NoDataError(f"no solution_*.json files under {results_dir}")
    by_obj: dict[str, dict[int, dict]] = {}
    for f in files:
        stem = f.stem[len("solution_") :]
        obj, _, budget = stem.rpartition("_")
        doc = json.loads(f.read_text(encoding="utf-8"))
        by_obj.setdefault(obj, {})[int(budget)] = doc
    outputs = {}
    for obj, by_budget in sorted(by_obj.items()):
        budgets = sorted(by_budget)
        scm_names = sorted(
            {name for doc in by_budget.values() for name in doc["items"]}
        )
        dcm_names = sorted(
            {name for doc in by_budget.values() for name in doc["dcm_times"]}
        )
        rows = []
        for name in scm_names:
            rows.append(
                [name] + [str(int(round(by_budget[b]["items"].get(name, 0)))) for b in budgets]
            )
        for name in dcm_names:
            rows.append(
                [name]
                + [
                    ";".join(f"{t:g}" for t in sorted(by_budget[b]["dcm_times"].get(name, [])))
                    for b in budgets
                ]
            )
        csv_path = results_dir / f"report_{obj}.csv"
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["name"] + [str(b) for b in budgets])
            writer.writerows(rows)
        txt_path = results_dir / f"report_{obj}.txt"
        widths = [max(len(str(r[i])) for r in [["name"] + [str(b) for b in budgets]] + rows) for i in range(len(budgets) + 1)]
        with open(txt_path, "w", encoding="utf-8") as fh:
            head = ["name"] + [str(b) for b in budgets]
            fh.write("  ".join(h.ljust(w) for h, w in zip(head, widths)) + "\n")
            for r in rows:
                fh.write("  ".join(str(v).ljust(w) for v, w in zip(r, widths)) + "\n")
        outputs[obj] = csv_path
    return outputs


def parse_report(csv_path) -> dict[int, dict]:
    """Parse a report CSV back into per-budget selections (round-trip aid)."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        budgets = [int(b) for b in header[1:]]
        out: dict[int, dict] = {b: {"items": {}, "dcm_times": {}} for b in budgets}
        for row in reader:
            name, cells = row[0], row[1:]
            for b, cell in zip(budgets, cells):
                if cell in ("0", "1"):
                    out[b]["items"][name] = int(cell)
                else:
                    out[b]["dcm_times"][name] = (
                        [float(t) for t in cell.split(";")] if cell else []
                    )
    return out


def _parse_budgets(text: str) -> tuple[int, ...]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("budget range must be a:b:step", pointer="/budgets")
        a, b, step = (int(p) for p in parts)
        return tuple(range(a, b + 1, step))
    return tuple(int(p) for p in text.split(","))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fisheropt",
        description="Fisher-information measurement selection under budget constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fim = sub.add_parser("fim", help="assemble and summarize the information atoms")
    p_fim.add_argument("config")
    p_fim.add_argument("--out", default=None)

    p_solve = sub.add_parser("solve", help="solve one objective at one budget")
    p_solve.add_argument("config")
    p_solve.add_argument("--objective", required=True, choices=OBJECTIVES)
    p_solve.add_argument("--budget", required=True, type=int)
    p_solve.add_argument("--out", default=None)

    p_sweep = sub.add_parser("sweep", help="epsilon-constraint budget sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--budgets", required=True, help="a:b:step or comma list")
    p_sweep.add_argument(
        "--objectives", default=",".join(OBJECTIVES), help="comma list of objectives"
    )
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--no-warm-chain", action="store_true")
    p_sweep.add_argument(
        "--parallel", action="store_true", help="solve budgets concurrently (chain off)"
    )

    p_rep = sub.add_parser("report", help="selection tables from sweep results")
    p_rep.add_argument("results_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "fim":
            out = cmd_fim(args.config, args.out)
            print(f"wrote atoms and summary under {out}")
            return 0
        if args.command == "solve":
            code = cmd_solve(args.config, args.objective, args.budget, args.out)
            if code:
                print("solve failed verification or was infeasible", file=sys.stderr)
            return code
        if args.command == "sweep":
            cfg = load_config(args.config)
            spec = SweepSpec(
                budgets=_parse_budgets(args.budgets),
                objectives=tuple(args.objectives.split(",")),
                warm_chain=not args.no_warm_chain,
                output_dir=Path(args.out) if args.out else cfg.output_dir,
                parallel=args.parallel,
                threads=int(os.environ["FISHEROPT_THREADS"])
                if "FISHEROPT_THREADS" in os.environ
                else None,
            )
            records = cmd_sweep(args.config, spec)
            print(f"{len(records)} records -> {spec.output_dir / 'pareto.csv'}")
            return 0
        if args.command == "report":
            outputs = cmd_report(args.results_dir)
            for obj, path in outputs.items():
                print(f"{obj}: {path}")
            return 0
    except FisheroptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
