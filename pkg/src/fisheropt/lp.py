"""Bounded-variable linear programming layer.

Every relaxation, branch-and-bound node, and outer-approximation master in
this package reduces to maximizing a linear objective over box-bounded
variables with sparse inequality/equality rows. Formulation, validation,
result reporting, warm-start plumbing, and the audit export live here;
the pivoting itself is delegated to HiGHS through
``scipy.optimize.linprog``, which is deterministic for identical instance
bytes and comfortably handles the sparse many-column instances the
measurement problems generate.

All instances are stated in max form. Rows carry senses '<', '>', or '='.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import InvalidInputError, NumericFailureError, ShapeError

__all__ = ["LpInstance", "LpResult", "solve_lp", "export_lp_text"]

FEAS_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LpInstance:
    """A max-sense LP with finite variable bounds.

    ``a`` is a (rows x n) matrix (dense or scipy.sparse), ``senses`` a
    string per row from {'<', '>', '='} (interpreted as <=, >=, ==), and
    ``lb``/``ub`` finite per-variable bounds.
    """

    c: np.ndarray
    a: object
    senses: tuple[str, ...]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    name: str = "lp"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.senses = tuple(self.senses)
        n = self.c.shape[0]
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ShapeError("bounds must match the number of variables")
        if not (np.isfinite(self.lb).all() and np.isfinite(self.ub).all()):
            raise InvalidInputError("all variable bounds must be finite")
        if np.any(self.lb > self.ub + 1e-15):
            raise InvalidInputError("lower bounds exceed upper bounds")
        m = len(self.senses)
        a = self.a
        if m == 0:
            self.a = sp.csr_matrix((0, n))
            if self.rhs.shape != (0,):
                raise ShapeError("rhs must be empty when there are no rows")
            return
        if not sp.issparse(a):
            a = sp.csr_matrix(np.atleast_2d(np.asarray(a, dtype=float)))
        else:
            a = a.tocsr()
        if a.shape != (m, n):
            raise ShapeError(f"row matrix shape {a.shape} != ({m}, {n})")
        if self.rhs.shape != (m,):
            raise ShapeError("rhs length must match row count")
        bad = set(self.senses) - {"<", ">", "="}
        if bad:
            raise InvalidInputError(f"unknown row senses: {sorted(bad)}")
        self.a = a

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return len(self.senses)


@dataclass
class LpResult:
    """Outcome of one LP solve (max sense).

    ``duals`` are shadow prices d(objective)/d(rhs) aligned with the
    instance's row order; nonnegative for binding '<' rows at a maximum.
    """

    status: str
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _split_rows(inst: LpInstance):
    """Partition rows into <= and == systems (>= rows negated)."""
    senses = np.array(inst.senses)
    le = np.where(senses == "<")[0]
    ge = np.where(senses == ">")[0]
    eq = np.where(senses == "=")[0]
    a = inst.a
    parts_ub = []
    rhs_ub = []
    if le.size:
        parts_ub.append(a[le])
        rhs_ub.append(inst.rhs[le])
    if ge.size:
        parts_ub.append(-a[ge])
        rhs_ub.append(-inst.rhs[ge])
    a_ub = sp.vstack(parts_ub).tocsr() if parts_ub else None
    b_ub = np.concatenate(rhs_ub) if rhs_ub else None
    a_eq = a[eq].tocsr() if eq.size else None
    b_eq = inst.rhs[eq] if eq.size else None
    return le, ge, eq, a_ub, b_ub, a_eq, b_eq


def solve_lp(inst: LpInstance, warm_basis=None) -> LpResult:
    """Maximize ``c @ x`` subject to the instance's rows and bounds.

    A warm basis from a structurally different instance is silently
    discarded; the HiGHS backend re-solves from presolve either way, which
    is what keeps results independent of solve history (and therefore
    reproducible).
    """
    del warm_basis  # accepted for interface stability; backend resolves cold
    le, ge, eq, a_ub, b_ub, a_eq, b_eq = _split_rows(inst)
    res = linprog(
        c=-inst.c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=np.column_stack([inst.lb, inst.ub]),
        method="highs",
        options={
            "presolve": True,
            "primal_feasibility_tolerance": FEAS_TOL,
            "dual_feasibility_tolerance": FEAS_TOL,
        },
    )
    iterations = int(res.get("nit", 0) or 0)
    if res.status == 2:
        return LpResult(INFEASIBLE, None, float("-inf"), None, iterations)
    if res.status == 3:
        return LpResult(UNBOUNDED, None, float("inf"), None, iterations)
    if res.status != 0:
        raise NumericFailureError(
            f"LP solve failed on {inst.name}: {res.message}", iterations=iterations
        )
    x = np.asarray(res.x, dtype=float)
    duals = np.zeros(inst.n_rows)
    # linprog minimizes -c, so marginals flip sign to become max-sense
    # shadow prices; '>' rows were negated on top of that.
    if inst.n_rows:
        marg_ub = res.ineqlin.marginals if (a_ub is not None) else np.zeros(0)
        n_le = le.size
        if le.size:
            duals[le] = -marg_ub[:n_le]
        if ge.size:
            duals[ge] = marg_ub[n_le:]
        if eq.size:
            duals[eq] = -res.eqlin.marginals
    return LpResult(OPTIMAL, x, float(-res.fun), duals, iterations)


def export_lp_text(inst: LpInstance) -> str:
    """Render the instance in a plain-text LP dialect for external audit."""
    lines = [f"\\ {inst.name}", "Maximize", " obj: " + _linear_expr(inst.c)]
    lines.append("Subject To")
    a = inst.a.tocoo() if inst.n_rows else None
    rows: list[dict[int, float]] = [dict() for _ in range(inst.n_rows)]
    if a is not None:
        for r, c, v in zip(a.row, a.col, a.data):
            rows[r][c] = rows[r].get(c, 0.0) + v
    op = {"<": "<=", ">": ">=", "=": "="}
    for r in range(inst.n_rows):
        expr = _linear_expr_sparse(rows[r])
        lines.append(f" r{r}: {expr} {op[inst.senses[r]]} {inst.rhs[r]:.17g}")
    lines.append("Bounds")
    for j in range(inst.n_vars):
        lines.append(f" {inst.lb[j]:.17g} <= x{j} <= {inst.ub[j]:.17g}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _linear_expr(c: np.ndarray) -> str:
    terms = [f"{v:+.17g} x{j}" for j, v in enumerate(c) if v != 0.0]
    return " ".join(terms) if terms else "0 x0"


def _linear_expr_sparse(row: dict[int, float]) -> str:
    terms = [f"{row[j]:+.17g} x{j}" for j in sorted(row) if row[j] != 0.0]
    return " ".join(terms) if terms else "0 x0"
