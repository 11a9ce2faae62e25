"""Log-determinant maximization: relaxed and mixed-integer solvers.

The relaxed problem maximizes the concave function log det(M(z)) over the
selection polytope with Frank-Wolfe: each step solves a linear program in
the current gradient (the lp module is the oracle), then an exact
one-dimensional concave line search moves along the segment. The
Frank-Wolfe gap certifies how far the iterate can be from the true relaxed
optimum.

The mixed-integer problem runs outer approximation. Concavity makes every
first-order expansion a global over-estimator, so affine hypograph cuts

    eta <= psi(z_j) + g_j . (z - z_j)

accumulated at previously visited points give a master MILP whose optimum
bounds the true optimum from above. At each master's integral solution the
objective is evaluated exactly -- with the selection fixed, the continuous
part of the model collapses to a closed-form information-matrix
evaluation, which doubles as the warm start for that fixed subproblem --
and a new cut is added there. Bounds decrease, incumbents increase, and
finitely many integral points guarantee termination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError
from .fimatoms import FimAtoms, eval_fim, pairs_from_items
from .lp import INFEASIBLE, OPTIMAL, LpInstance, solve_lp
from .milp import (
    TIE_EPS,
    BnbConfig,
    branch_and_bound,
    feasible_binary,
    rounding_repair,
    trace_cost_vector,
)
from .moproblem import D_OPT, MoProblem, Solution, make_solution
from .symmat import logdet, pinv_sym

__all__ = [
    "FwConfig",
    "OaConfig",
    "logdet_gradient_x",
    "solve_relaxed_dopt",
    "solve_minlp_dopt",
]


@dataclass
class FwConfig:
    """Frank-Wolfe controls for the relaxed log-det problem."""

    max_iter: int = 500
    gap_tol: float = 1e-7
    line_search_tol: float = 1e-10
    x0: np.ndarray | None = None  # full variable vector warm start

    def __post_init__(self):
        if self.gap_tol <= 0 or self.line_search_tol <= 0:
            raise InvalidInputError("tolerances must be positive")


@dataclass
class CutPool:
    """Hypograph cuts accumulated across solves.

    Cuts are global majorants of the concave objective, independent of the
    budget and sampling constraints, so a pool built at one budget remains
    valid at every other; chained sweeps exploit that.
    """

    cuts: list = field(default_factory=list)
    binary_keys: set = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.cuts)


@dataclass
class OaConfig:
    """Outer-approximation controls for the log-det MINLP."""

    gap_tol: float = 1e-6  # absolute, on log-det
    max_iter: int = 60
    seed_relaxed: bool = True
    fw: FwConfig = field(default_factory=FwConfig)
    master: BnbConfig = field(default_factory=BnbConfig)
    warm_starts: tuple = ()  # binary item selections to seed cuts/incumbent
    trace_log: object = None  # file-like; CSV rows per iteration
    cut_pool: CutPool | None = None  # shared across budgets when chaining
    seed_thresholds: tuple = (0.25, 0.5, 0.75)  # roundings of the relaxed point
    harvest_per_master: int = 8  # extra integral points cut per master solve


def logdet_gradient_x(atoms: FimAtoms, x_items, x_pairs):
    """Gradient of log det(M(x, y)) in the selection weights.

    Since M is affine in the weights, each component is the Frobenius inner
    product of the (pseudo-)inverse information matrix with that variable's
    atom: g_v = tr(M^+ A_v).
    """
    m = eval_fim(atoms, x_items, x_pairs).matrix
    m_plus = pinv_sym(m)
    g_items = np.einsum("ij,aji->a", m_plus, atoms.diag)
    g_pairs = (
        np.einsum("ij,aji->a", m_plus, atoms.pair_mats)
        if atoms.n_pairs
        else np.zeros(0)
    )
    return g_items, g_pairs


def _logdet_psd(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(m)
    if w[0] <= 0.0:
        return float("-inf")
    return float(np.sum(np.log(w)))


def _golden_max(f, tol: float):
    """Deterministic golden-section maximization of a concave f on [0, 1]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    g = 0.5 * (a + b)
    return g, f(g)


def _stack_gradient(p: MoProblem, g_items, g_pairs) -> np.ndarray:
    g = np.zeros(p.n_vars)
    si, sp_, _ = p.var_slices()
    g[si] = g_items
    g[sp_] = g_pairs
    return g


def _feasible_point(p: MoProblem, z: np.ndarray, tol: float = 1e-7) -> bool:
    if z.min() < -tol or z.max() > 1 + tol:
        return False
    resid = p.a @ z - p.rhs
    return bool(np.all(resid <= tol))


def solve_relaxed_dopt(p: MoProblem, cfg: FwConfig | None = None) -> Solution:
    """Frank-Wolfe maximization of log det over the relaxed polytope.

    Requires a strictly positive-definite prior in the atoms (the
    regularization that keeps log det finite at the empty selection). The
    returned solution carries the final Frank-Wolfe gap in its stats and a
    certified upper bound on the relaxed optimum in ``bound``.
    """
    if not p.relax:
        raise InvalidInputError("solve_relaxed_dopt expects a problem built with relax=True")
    cfg = cfg or FwConfig()
    if not np.isfinite(logdet(p.atoms.prior)):
        raise InvalidInputError("prior information matrix must be positive definite")

    z = np.zeros(p.n_vars)
    if cfg.x0 is not None and cfg.x0.shape == (p.n_vars,) and _feasible_point(p, cfg.x0):
        z = np.clip(cfg.x0.astype(float), 0.0, 1.0)
    si, sp_, sw = p.var_slices()
    m_z = eval_fim(p.atoms, z[si], z[sp_]).matrix
    val = _logdet_psd(m_z)
    bound = float("inf")
    gap = float("inf")
    status = "iteration-limit"
    iters = 0
    for iters in range(1, cfg.max_iter + 1):
        g_items, g_pairs = logdet_gradient_x(p.atoms, z[si], z[sp_])
        g = _stack_gradient(p, g_items, g_pairs)
        lp_res = solve_lp(p.lp_instance(g, name="fw_oracle"))
        if lp_res.status != OPTIMAL:
            raise InvalidInputError(f"Frank-Wolfe oracle LP returned {lp_res.status}")
        s = lp_res.x
        gap = float(g @ (s - z))
        bound = min(bound, val + max(gap, 0.0))
        if gap <= cfg.gap_tol:
            status = OPTIMAL
            break
        m_s = eval_fim(p.atoms, np.clip(s[si], 0, 1), np.clip(s[sp_], 0, 1)).matrix
        delta = m_s - m_z

        def h(t):
            return _logdet_psd(m_z + t * delta)

        t_star, val_star = _golden_max(h, cfg.line_search_tol)
        if not np.isfinite(val_star) or val_star <= val:
            # numerically flat segment; the gap certificate already bounds
            # whatever could remain
            if gap <= max(cfg.gap_tol, 1e-6):
                status = OPTIMAL
            break
        z = z + t_star * (s - z)
        m_z = m_z + t_star * delta
        val = val_star

    x_items, x_pairs = np.clip(z[si], 0.0, 1.0), np.clip(z[sp_], 0.0, 1.0)
    fim = eval_fim(p.atoms, x_items, x_pairs)
    return Solution(
        x_items=x_items,
        x_pairs=x_pairs,
        w=z[sw],
        trace_value=fim.trace,
        logdet_value=val,
        achieved_cost=float(p.per_item_cost @ x_items + p.install_cost @ z[sw]),
        status=status,
        stats={"fw_iterations": iters, "fw_gap": gap},
        bound=bound if np.isfinite(bound) else val,
    )


@dataclass
class _Cut:
    point: np.ndarray  # (x_items, x_pairs) stacked
    value: float
    grad: np.ndarray  # same stacking

    def offset(self) -> float:
        return self.value - float(self.grad @ self.point)

    def at(self, point: np.ndarray) -> float:
        return self.value + float(self.grad @ (point - self.point))


def _evaluate_fixed(p: MoProblem, x_items: np.ndarray):
    """Exact objective at a fixed binary selection (the fixed subproblem).

    With the binaries fixed, the information matrix is a closed-form affine
    evaluation; this is also the warm-start computation for it.
    """
    y = pairs_from_items(p.atoms, x_items)
    m = eval_fim(p.atoms, x_items, y).matrix
    return _logdet_psd(m), y


def _eta_upper_bound(p: MoProblem) -> float:
    tr_cap = float(np.trace(p.atoms.prior))
    tr_cap += float(np.maximum(np.trace(p.atoms.diag, axis1=1, axis2=2), 0.0).sum())
    if p.atoms.n_pairs:
        tr_cap += float(np.maximum(np.trace(p.atoms.pair_mats, axis1=1, axis2=2), 0.0).sum())
    # lambda_max <= trace for PSD matrices, so P * log(trace) caps log det
    return p.atoms.n_params * math.log(max(tr_cap, 1e-300)) + 10.0


def _master_instance(p: MoProblem, cuts: list[_Cut], eta_lo: float, eta_hi: float) -> LpInstance:
    n = p.n_vars
    c = np.zeros(n + 1)
    c[n] = 1.0
    rows = [sp.hstack([p.a, sp.csr_matrix((p.a.shape[0], 1))]).tocsr()]
    senses = list(p.senses)
    rhs = list(p.rhs)
    cut_rows = []
    si, sp_, _ = p.var_slices()
    for cut in cuts:
        row = np.zeros(n + 1)
        row[si] = -cut.grad[: p.n_items]
        row[sp_] = -cut.grad[p.n_items :]
        row[n] = 1.0
        cut_rows.append(row)
        senses.append("<")
        rhs.append(cut.offset())
    if cut_rows:
        rows.append(sp.csr_matrix(np.array(cut_rows)))
    a = sp.vstack(rows).tocsr()
    lb = np.zeros(n + 1)
    ub = np.ones(n + 1)
    lb[n] = eta_lo
    ub[n] = eta_hi
    return LpInstance(
        c=c, a=a, senses=tuple(senses), rhs=np.array(rhs), lb=lb, ub=ub, name="oa_master"
    )


def solve_minlp_dopt(p: MoProblem, cfg: OaConfig | None = None) -> Solution:
    """Globally maximize log det over binary selections by outer approximation.

    The first master is seeded with cuts at the empty selection, at any
    warm-start selections, and at the relaxed optimum found by Frank-Wolfe;
    each loop solves the cut-augmented master MILP, evaluates the objective
    exactly at its integral solution, and adds the gradient cut there.
    Terminates when the master bound meets the incumbent within
    ``cfg.gap_tol``.
    """
    if p.objective != D_OPT:
        raise InvalidInputError("solve_minlp_dopt expects a D-objective problem")
    cfg = cfg or OaConfig()
    prior_ld = logdet(p.atoms.prior)
    if not np.isfinite(prior_ld):
        raise InvalidInputError("prior information matrix must be positive definite")

    pool = cfg.cut_pool if cfg.cut_pool is not None else CutPool()
    cuts = pool.cuts
    inc_x: np.ndarray | None = None
    inc_val = float("-inf")
    ub = float("inf")

    def add_cut(x_items, x_pairs, value, key=None):
        g_items, g_pairs = logdet_gradient_x(p.atoms, x_items, x_pairs)
        cuts.append(
            _Cut(
                point=np.concatenate([x_items, x_pairs]),
                value=value,
                grad=np.concatenate([g_items, g_pairs]),
            )
        )
        if key is not None:
            pool.binary_keys.add(key)

    def consider(x_items) -> float:
        """Exact evaluation at a binary point: incumbent update plus a cut."""
        nonlocal inc_x, inc_val
        value, y = _evaluate_fixed(p, x_items)
        if value > inc_val + TIE_EPS:
            inc_x, inc_val = x_items.copy(), value
        key = tuple(int(v) for v in x_items)
        if np.isfinite(value) and key not in pool.binary_keys:
            add_cut(x_items, y, value, key=key)
        return value

    consider(np.zeros(p.n_items))
    for xw in cfg.warm_starts:
        xw = np.round(np.asarray(xw, dtype=float))
        if xw.shape == (p.n_items,) and feasible_binary(p, xw):
            consider(xw)
    trace_obj = trace_cost_vector(p.atoms)
    relaxed_stats = {}
    if cfg.seed_relaxed:
        rel = solve_relaxed_dopt(replace(p, relax=True), cfg.fw)
        relaxed_stats = {"relaxed_logdet": rel.logdet_value, "relaxed_bound": rel.bound}
        if rel.bound is not None:
            ub = min(ub, rel.bound)
        if np.isfinite(rel.logdet_value):
            add_cut(rel.x_items, rel.x_pairs, rel.logdet_value)
        # rounded repairs of the relaxed point give cheap strong seeds
        z_rel = np.concatenate([rel.x_items, rel.x_pairs, rel.w])
        for thresh in cfg.seed_thresholds:
            cand = rounding_repair(
                p, np.where(
                    np.concatenate([rel.x_items >= thresh, np.zeros(p.n_vars - p.n_items, bool)]),
                    1.0, 0.0,
                ),
                score=trace_obj.c_items,
            )
            if cand is not None:
                consider(cand)

    eta_hi = _eta_upper_bound(p)
    eta_lo = min(prior_ld, inc_val) - 1.0
    binary_ids = np.arange(p.n_items)
    seen: set = set()
    master_nodes = 0
    status = "gap-limit"
    it = 0
    force_exact = False

    def master_point(x_items, visited):
        """Feasible master point and its objective for a binary selection."""
        x = np.asarray(x_items, dtype=float)
        y = pairs_from_items(p.atoms, x)
        point = np.concatenate([x, y])
        eta = min(min(c_.at(point) for c_ in cuts), eta_hi)
        z = np.empty(p.n_vars + 1)
        si, sp_s, sw = p.var_slices()
        z[si] = x
        z[sp_s] = y
        z[sw] = p.implied_w(x)
        z[-1] = eta
        visited[tuple(int(v) for v in x)] = float(eta)
        return z, float(eta)

    def log_row(it_, bound_, inc_, gap_):
        if cfg.trace_log is not None:
            cfg.trace_log.write(f"{it_},{bound_!r},{inc_!r},{len(cuts)},{gap_!r}\n")

    # branch preferentially on items that move the objective the most
    weights = np.abs(trace_obj.c_items)
    weights = 1.0 + weights / max(weights.max(), 1e-300)

    for it in range(1, cfg.max_iter + 1):
        inst = _master_instance(p, cuts, eta_lo, eta_hi)
        visited: dict = {}

        def polish(z_lp, _v=visited):
            x = np.round(z_lp[: p.n_items])
            if not feasible_binary(p, x):
                return None
            return master_point(x, _v)

        def heuristic(z_lp, _v=visited):
            cand = rounding_repair(p, z_lp, score=trace_obj.c_items)
            if cand is None:
                return None
            return master_point(cand, _v)

        gap_now = ub - inc_val if np.isfinite(ub) else float("inf")
        master_gap = cfg.master.abs_gap
        if not force_exact and np.isfinite(gap_now):
            # early masters need only rough bounds; tighten as OA closes in
            master_gap = max(cfg.master.abs_gap, min(0.05, 0.2 * max(gap_now, 0.0)))
        master_cfg = replace(cfg.master, abs_gap=master_gap, node_log=None)
        warm = master_point(inc_x, visited) if inc_x is not None else None
        out = branch_and_bound(
            inst, binary_ids, master_cfg, polish,
            heuristic=heuristic, incumbent=warm, branch_weights=weights,
        )
        master_nodes += out.stats.get("nodes", 0)
        if out.x is None:
            status = INFEASIBLE if inc_x is None else "gap-limit"
            log_row(it, ub, inc_val, ub - inc_val)
            break
        ub = min(ub, out.bound)
        x_hat = np.round(out.x[: p.n_items])
        consider(x_hat)
        # harvest the best integral points the master search touched
        fresh = [
            (eta, key) for key, eta in visited.items() if key not in pool.binary_keys
        ]
        fresh.sort(key=lambda kv: (-kv[0], kv[1]))
        for _, key in fresh[: cfg.harvest_per_master]:
            consider(np.array(key, dtype=float))
        gap = ub - inc_val
        log_row(it, ub, inc_val, gap)
        if gap <= cfg.gap_tol:
            status = OPTIMAL
            break
        key = tuple(int(v) for v in x_hat)
        if key in seen and force_exact:
            # the exact master revisited a cut point, so its bound has
            # collapsed onto the incumbent up to LP tolerance
            status = OPTIMAL if gap <= max(cfg.gap_tol, 1e-6) else "gap-limit"
            break
        if key in seen:
            force_exact = True
        seen.add(key)

    if inc_x is None:
        raise InvalidInputError("outer approximation found no feasible selection")
    return make_solution(
        p,
        inc_x,
        status=status,
        stats={
            "oa_iterations": it,
            "cuts": len(cuts),
            "master_nodes": master_nodes,
            **relaxed_stats,
        },
        bound=ub,
    )
