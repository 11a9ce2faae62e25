"""The measurement-selection optimization problem.

Variables, in one flat vector:

* ``x_items`` -- one binary per selectable item (SCMs, then DCM samples);
* ``x_pairs`` -- one auxiliary binary per retained off-diagonal item pair,
  tied to the item binaries by McCormick rows so that at binary points
  ``x_ab = x_a AND x_b``;
* ``w`` -- one installation binary per DCM unit, charged in the budget and
  linked by ``x_{d,t} <= w_d``. No reverse link is needed: an optimal
  solution never pays for an unused installation.

All constraints are linear: one budget row, a total and a per-unit sample
cap, sliding-window rows enforcing a minimum time between samples of the
same unit (at most one sample in any half-open window [t, t + T_min)),
linking rows, and three McCormick rows per retained pair. The information
matrix itself is handled by the solvers through the affine atom map, so no
equality rows appear here.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .catalog import DCM, SCM, ItemIndex, MeasurementCatalog, item_cost_vector
from .errors import InvalidInputError, ShapeError
from .fimatoms import FimAtoms, eval_fim, pairs_from_items
from .lp import LpInstance, export_lp_text
from .symmat import logdet

__all__ = [
    "A_OPT",
    "D_OPT",
    "MoProblem",
    "Solution",
    "CheckReport",
    "SizeReport",
    "build_problem",
    "check_solution",
    "problem_size",
    "solution_to_json",
    "solution_from_json",
    "problem_to_lp_text",
]

A_OPT = "A"
D_OPT = "D"

COST_TOL = 1e-6
ROW_TOL = 1e-7


@dataclass
class MoProblem:
    """Immutable description of one measurement-selection instance."""

    cat: MeasurementCatalog
    idx: ItemIndex
    atoms: FimAtoms
    objective: str
    budget: float
    l_total: int | None
    l_d: np.ndarray  # per DCM unit
    t_min: float | None
    relax: bool
    per_item_cost: np.ndarray
    install_cost: np.ndarray
    a: sp.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    row_tags: tuple[tuple, ...]
    windows: tuple[tuple[int, float, tuple[int, ...]], ...]  # (unit, t, item ids)

    @property
    def n_items(self) -> int:
        return self.idx.n_items

    @property
    def n_pairs(self) -> int:
        return self.atoms.n_pairs

    @property
    def n_units(self) -> int:
        return len(self.idx.units)

    @property
    def n_vars(self) -> int:
        return self.n_items + self.n_pairs + self.n_units

    def var_slices(self):
        n, p, u = self.n_items, self.n_pairs, self.n_units
        return slice(0, n), slice(n, n + p), slice(n + p, n + p + u)

    def dcm_item_ids(self) -> np.ndarray:
        return np.array(
            [i for i, it in enumerate(self.idx.items) if it.kind == DCM], dtype=int
        )

    def split(self, z: np.ndarray):
        si, sp_, sw = self.var_slices()
        return z[si], z[sp_], z[sw]

    def lp_instance(self, c: np.ndarray, lb=None, ub=None, name: str = "mo") -> LpInstance:
        """LP over this problem's polytope with an arbitrary linear objective."""
        if c.shape != (self.n_vars,):
            raise ShapeError(f"objective length {c.shape} != {self.n_vars} variables")
        lo = np.zeros(self.n_vars) if lb is None else np.asarray(lb, dtype=float)
        hi = np.ones(self.n_vars) if ub is None else np.asarray(ub, dtype=float)
        return LpInstance(
            c=c, a=self.a, senses=self.senses, rhs=self.rhs, lb=lo, ub=hi, name=name
        )

    def selection_cost(self, x_items, w=None) -> float:
        """Money spent by a selection; w defaults to its implied values."""
        x = np.asarray(x_items, dtype=float)
        ww = self.implied_w(x) if w is None else np.asarray(w, dtype=float)
        return float(self.per_item_cost @ x + self.install_cost @ ww)

    def implied_w(self, x_items) -> np.ndarray:
        """Cheapest feasible installation binaries for given samples."""
        x = np.asarray(x_items, dtype=float)
        w = np.zeros(self.n_units)
        for u in range(self.n_units):
            ids = self.idx.items_of_unit(u)
            if ids and x[ids].max() > 0:
                w[u] = x[ids].max()
        return w

    def evaluate(self, x_items, x_pairs=None):
        """Both design metrics for a selection (pairs implied if omitted)."""
        y = pairs_from_items(self.atoms, x_items) if x_pairs is None else x_pairs
        fim = eval_fim(self.atoms, x_items, y)
        return fim.trace, logdet(fim.matrix), fim


@dataclass
class Solution:
    """A solver outcome for one instance."""

    x_items: np.ndarray
    x_pairs: np.ndarray
    w: np.ndarray
    trace_value: float
    logdet_value: float
    achieved_cost: float
    status: str
    stats: dict = field(default_factory=dict)
    bound: float | None = None

    def selected_items(self, idx: ItemIndex, tol: float = 0.5) -> list[str]:
        return [idx.items[i].name for i in range(len(idx.items)) if self.x_items[i] > tol]

    def objective_value(self, objective: str) -> float:
        return self.trace_value if objective == A_OPT else self.logdet_value


def build_problem(
    cat: MeasurementCatalog,
    idx: ItemIndex,
    atoms: FimAtoms,
    objective: str,
    budget: float,
    l_total: int | None = None,
    l_d=None,
    t_min: float | None = None,
    relax: bool = False,
) -> MoProblem:
    """Assemble the constraint system for one instance.

    ``l_d`` may be a scalar applied to every DCM unit or a per-unit
    sequence. ``t_min`` of None (or 0) disables the spacing windows. A
    ``t_min`` longer than a unit's whole horizon is legal -- it simply
    allows at most one sample of that unit -- but is worth a warning.
    """
    if objective not in (A_OPT, D_OPT):
        raise InvalidInputError(f"objective must be '{A_OPT}' or '{D_OPT}'")
    if budget < 0:
        raise InvalidInputError("budget must be nonnegative")
    if atoms.idx is not idx and atoms.idx.items != idx.items:
        raise InvalidInputError("atoms were built for a different item index")
    n_units = len(idx.units)
    if l_d is None:
        l_d_arr = np.full(n_units, np.iinfo(np.int32).max, dtype=float)
    elif np.isscalar(l_d):
        l_d_arr = np.full(n_units, float(l_d))
    else:
        l_d_arr = np.asarray(l_d, dtype=float)
        if l_d_arr.shape != (n_units,):
            raise ShapeError(f"l_d must have one entry per DCM unit ({n_units})")

    per_item, install = item_cost_vector(cat, idx)
    n = idx.n_items
    n_pairs = atoms.n_pairs
    n_vars = n + n_pairs + n_units
    w_off = n + n_pairs

    data: list[float] = []
    rows: list[int] = []
    cols: list[int] = []
    senses: list[str] = []
    rhs: list[float] = []
    tags: list[tuple] = []

    def add_row(coefs: dict[int, float], sense: str, b: float, tag: tuple):
        r = len(senses)
        for j, v in coefs.items():
            rows.append(r)
            cols.append(j)
            data.append(v)
        senses.append(sense)
        rhs.append(b)
        tags.append(tag)

    # budget
    budget_coefs = {i: per_item[i] for i in range(n) if per_item[i] != 0.0}
    budget_coefs.update({w_off + u: install[u] for u in range(n_units) if install[u] != 0.0})
    add_row(budget_coefs, "<", float(budget), ("budget",))

    dcm_ids = [i for i, it in enumerate(idx.items) if it.kind == DCM]
    if l_total is not None:
        add_row({i: 1.0 for i in dcm_ids}, "<", float(l_total), ("l_total",))
    for u in range(n_units):
        if np.isfinite(l_d_arr[u]) and l_d_arr[u] < len(idx.units[u].times):
            add_row(
                {i: 1.0 for i in idx.items_of_unit(u)},
                "<",
                float(l_d_arr[u]),
                ("l_d", idx.units[u].name),
            )

    windows: list[tuple[int, float, tuple[int, ...]]] = []
    if t_min is not None and t_min > 0:
        for u, unit in enumerate(idx.units):
            ids = idx.items_of_unit(u)
            times = unit.times
            if times and t_min > times[-1] - times[0]:
                warnings.warn(
                    f"t_min {t_min:g} spans the whole horizon of {unit.name}; "
                    "at most one sample of this unit is feasible",
                    stacklevel=2,
                )
            for k, t in enumerate(times):
                in_window = tuple(
                    ids[j] for j, t2 in enumerate(times) if t <= t2 < t + t_min
                )
                windows.append((u, t, in_window))
                add_row(
                    {i: 1.0 for i in in_window}, "<", 1.0, ("window", unit.name, t)
                )

    for u, unit in enumerate(idx.units):
        for i in idx.items_of_unit(u):
            add_row({i: 1.0, w_off + u: -1.0}, "<", 0.0, ("link", unit.name, idx.items[i].time))

    for k, (a_id, b_id) in enumerate(atoms.pairs):
        y = n + k
        add_row({y: 1.0, a_id: -1.0}, "<", 0.0, ("mccormick_a", k))
        add_row({y: 1.0, b_id: -1.0}, "<", 0.0, ("mccormick_b", k))
        add_row({a_id: 1.0, b_id: 1.0, y: -1.0}, "<", 1.0, ("mccormick_and", k))

    a = sp.csr_matrix(
        (np.array(data), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
        shape=(len(senses), n_vars),
    )
    return MoProblem(
        cat=cat,
        idx=idx,
        atoms=atoms,
        objective=objective,
        budget=float(budget),
        l_total=l_total,
        l_d=l_d_arr,
        t_min=t_min,
        relax=relax,
        per_item_cost=per_item,
        install_cost=install,
        a=a,
        senses=tuple(senses),
        rhs=np.array(rhs),
        row_tags=tuple(tags),
        windows=tuple(windows),
    )


@dataclass
class CheckReport:
    """Per-category verification of a solution against its problem."""

    categories: dict

    @property
    def ok(self) -> bool:
        return all(passed for passed, _ in self.categories.values())

    def violations(self) -> list[str]:
        out = []
        for name, (passed, items) in self.categories.items():
            if not passed:
                out.extend(f"{name}: {msg}" for msg in items)
        return out

    def __str__(self) -> str:
        lines = []
        for name, (passed, items) in self.categories.items():
            lines.append(f"[{'PASS' if passed else 'FAIL'}] {name}")
            lines.extend(f"    {msg}" for msg in items)
        return "\n".join(lines)


def check_solution(p: MoProblem, s: Solution) -> CheckReport:
    """Independently verify a solution: every constraint family, integrality,
    pair consistency, cost arithmetic, and both objective values recomputed
    from the atom map."""
    cats: dict = {}
    x, y, w = s.x_items, s.x_pairs, s.w

    def category(name, violations):
        cats[name] = (len(violations) == 0, violations)

    v = []
    for name, arr in (("x_items", x), ("x_pairs", y), ("w", w)):
        if arr.size and (arr.min() < -ROW_TOL or arr.max() > 1 + ROW_TOL):
            v.append(f"{name} outside [0,1]: [{arr.min()}, {arr.max()}]")
    category("bounds", v)

    if not p.relax:
        v = []
        for name, arr in (("x_items", x), ("x_pairs", y), ("w", w)):
            frac = np.abs(arr - np.round(arr))
            if arr.size and frac.max() > 1e-9:
                j = int(np.argmax(frac))
                v.append(f"{name}[{j}] = {arr[j]} is not integral")
        category("integrality", v)

        v = []
        for k, (a_id, b_id) in enumerate(p.atoms.pairs):
            expect = x[a_id] * x[b_id]
            if abs(y[k] - expect) > 1e-9:
                v.append(
                    f"pair ({p.idx.items[a_id].name}, {p.idx.items[b_id].name}): "
                    f"x_ab={y[k]} but x_a*x_b={expect}"
                )
        category("pair_consistency", v)

    cost = p.selection_cost(x, w)
    v = []
    if cost > p.budget + COST_TOL:
        v.append(f"cost {cost} exceeds budget {p.budget}")
    if abs(cost - s.achieved_cost) > COST_TOL:
        v.append(f"stated cost {s.achieved_cost} != recomputed {cost}")
    category("budget", v)

    dcm_ids = p.dcm_item_ids()
    v = []
    if p.l_total is not None:
        total = float(x[dcm_ids].sum()) if dcm_ids.size else 0.0
        if total > p.l_total + ROW_TOL:
            v.append(f"total samples {total} > L_total {p.l_total}")
    for u, unit in enumerate(p.idx.units):
        cnt = float(sum(x[i] for i in p.idx.items_of_unit(u)))
        if cnt > p.l_d[u] + ROW_TOL:
            v.append(f"{unit.name}: {cnt} samples > L_d {p.l_d[u]}")
    category("sample_counts", v)

    v = []
    for u, t, ids in p.windows:
        total = float(sum(x[i] for i in ids))
        if total > 1 + ROW_TOL:
            v.append(
                f"{p.idx.units[u].name}: {total:g} samples within "
                f"[{t:g}, {t + p.t_min:g}) violates the minimum interval"
            )
    category("windows", v)

    v = []
    for u in range(p.n_units):
        for i in p.idx.items_of_unit(u):
            if x[i] > w[u] + ROW_TOL:
                v.append(
                    f"{p.idx.items[i].name} selected without installing {p.idx.units[u].name}"
                )
    category("linking", v)

    v = []
    for k, (a_id, b_id) in enumerate(p.atoms.pairs):
        if y[k] > x[a_id] + ROW_TOL or y[k] > x[b_id] + ROW_TOL:
            v.append(f"pair {k} exceeds an item weight")
        if x[a_id] + x[b_id] - 1 > y[k] + ROW_TOL:
            v.append(f"pair {k} below its McCormick floor")
    category("mccormick", v)

    trace, ld, _ = p.evaluate(x, y)
    v = []
    scale = max(1.0, abs(trace))
    if abs(trace - s.trace_value) > 1e-7 * scale:
        v.append(f"stated trace {s.trace_value} != recomputed {trace}")
    if np.isfinite(ld) or np.isfinite(s.logdet_value):
        if abs(ld - s.logdet_value) > 1e-6 * max(1.0, abs(ld)):
            v.append(f"stated logdet {s.logdet_value} != recomputed {ld}")
    category("objectives", v)

    return CheckReport(categories=cats)


@dataclass
class SizeReport:
    """Instance size next to the unpruned closed-form counts.

    The closed-form values take every item pair (no zero-block pruning) at
    face value: variables ``(N^2+N)/2 + (P^2+P)/2 + D + 2``, equalities
    ``(P^2+P)/2 + 2``, inequalities ``3(N^2-N)/2 + 2 + 2D + 2*sum(T_d)``.
    The actual instance eliminates the information-matrix variables and
    prunes structurally zero pairs, so its counts are smaller.
    """

    n_items: int
    n_params: int
    n_pairs_retained: int
    n_units: int
    n_variables: int
    n_binary: int
    n_inequalities: int
    n_equalities: int
    formula_variables: int
    formula_equalities: int
    formula_inequalities: int

    def __str__(self) -> str:
        return (
            f"items={self.n_items} params={self.n_params} pairs={self.n_pairs_retained} "
            f"units={self.n_units}\n"
            f"instance: {self.n_variables} vars ({self.n_binary} binary), "
            f"{self.n_inequalities} inequalities, {self.n_equalities} equalities\n"
            f"closed-form (unpruned): {self.formula_variables} vars, "
            f"{self.formula_inequalities} inequalities, {self.formula_equalities} equalities"
        )


def problem_size(p: MoProblem) -> SizeReport:
    n = p.n_items
    d = p.n_units
    n_params = p.atoms.n_params
    sum_td = sum(len(u.times) for u in p.idx.units)
    return SizeReport(
        n_items=n,
        n_params=n_params,
        n_pairs_retained=p.n_pairs,
        n_units=d,
        n_variables=p.n_vars,
        n_binary=p.n_vars if not p.relax else 0,
        n_inequalities=len(p.senses),
        n_equalities=0,
        formula_variables=(n * n + n) // 2 + (n_params * n_params + n_params) // 2 + d + 2,
        formula_equalities=(n_params * n_params + n_params) // 2 + 2,
        formula_inequalities=3 * (n * n - n) // 2 + 2 + 2 * d + 2 * sum_td,
    )


def solution_to_json(p: MoProblem, s: Solution) -> str:
    items = {
        it.name: int(round(s.x_items[i])) if not p.relax else float(s.x_items[i])
        for i, it in enumerate(p.idx.items)
        if it.kind == SCM
    }
    dcm_times = {}
    for u, unit in enumerate(p.idx.units):
        sel = [
            p.idx.items[i].time
            for i in p.idx.items_of_unit(u)
            if s.x_items[i] > 0.5
        ]
        dcm_times[unit.name] = sel
    doc = {
        "items": items,
        "dcm_times": dcm_times,
        "trace": s.trace_value,
        "logdet": s.logdet_value,
        "cost": s.achieved_cost,
        "status": s.status,
        "bound": s.bound,
        "stats": s.stats,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def solution_from_json(p: MoProblem, doc: str | dict) -> Solution:
    """Rebuild a binary Solution from its JSON document."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    x = np.zeros(p.n_items)
    for i, it in enumerate(p.idx.items):
        if it.kind == SCM:
            x[i] = float(doc["items"].get(it.name, 0))
    for u, unit in enumerate(p.idx.units):
        sel = set(float(t) for t in doc["dcm_times"].get(unit.name, []))
        for i in p.idx.items_of_unit(u):
            if p.idx.items[i].time in sel:
                x[i] = 1.0
    y = pairs_from_items(p.atoms, x)
    w = p.implied_w(x)
    trace, ld, _ = p.evaluate(x, y)
    return Solution(
        x_items=x,
        x_pairs=y,
        w=w,
        trace_value=trace,
        logdet_value=ld,
        achieved_cost=p.selection_cost(x, w),
        status=doc.get("status", "given"),
        stats=dict(doc.get("stats", {})),
        bound=doc.get("bound"),
    )


def make_solution(p: MoProblem, x_items, status: str, stats=None, bound=None) -> Solution:
    """Package a binary item selection as a full Solution."""
    x = np.asarray(x_items, dtype=float)
    y = pairs_from_items(p.atoms, x)
    w = p.implied_w(x)
    trace, ld, _ = p.evaluate(x, y)
    return Solution(
        x_items=x,
        x_pairs=y,
        w=w,
        trace_value=trace,
        logdet_value=ld,
        achieved_cost=p.selection_cost(x, w),
        status=status,
        stats=stats or {},
        bound=bound,
    )


def problem_to_lp_text(p: MoProblem, c: np.ndarray | None = None) -> str:
    """Full constraint system in a plain-text LP dialect for audits."""
    obj = c if c is not None else np.zeros(p.n_vars)
    return export_lp_text(p.lp_instance(obj, name=f"mo_{p.objective}_B{p.budget:g}"))
