"""Precomputed Fisher-information contributions per selectable item pair.

Selecting items a and b adds ``Q_a^T S_ab Q_b + Q_b^T S_ba Q_a`` to the
information matrix, where S is the corresponding block of the full inverse
error covariance. Precomputing these P x P "atoms" once makes the
information matrix an affine function of the selection weights

    M(x, y) = M0 + sum_a diag_atom[a] * x[a] + sum_{a<b} pair_atom[ab] * y[ab]

which every solver exploits. Atoms use elements of the full inverse
covariance, not the inverse of the selected submatrix; this matches the
optimization model exactly (the statistical distinction matters only for
interpreting relaxed fractional selections).

Because errors are independent across time points, pairs whose covariance
block is identically zero contribute nothing and are pruned by default.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import (
    BlockCovariance,
    ItemIndex,
    MeasurementCatalog,
    RowLayout,
    catalog_to_dict,
)
from .errors import DomainError, ShapeError
from .symmat import check_symmetric, sym_to_vec

__all__ = [
    "FimAtoms",
    "FimValue",
    "invert_covariance",
    "build_atoms",
    "eval_fim",
    "save_atoms",
    "load_atoms",
    "atoms_content_key",
]


@dataclass(frozen=True)
class FimValue:
    """An information matrix and its canonical triangle vector."""

    matrix: np.ndarray
    lower: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


@dataclass
class FimAtoms:
    """Affine map from selection weights to the information matrix."""

    n_params: int
    idx: ItemIndex
    diag: np.ndarray  # (n_items, P, P), PSD
    pairs: tuple[tuple[int, int], ...]  # a < b, item ids
    pair_mats: np.ndarray  # (n_pairs, P, P), symmetric
    prior: np.ndarray  # (P, P)

    def __post_init__(self):
        self.prior = check_symmetric(self.prior, tol=1e-9)
        n = self.idx.n_items
        if self.diag.shape != (n, self.n_params, self.n_params):
            raise ShapeError(f"diag atoms shape {self.diag.shape} != ({n}, P, P)")
        if self.pair_mats.shape[0] != len(self.pairs):
            raise ShapeError("pair atom count does not match pair list")
        self.pair_index = {p: k for k, p in enumerate(self.pairs)}

    @property
    def n_items(self) -> int:
        return self.idx.n_items

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    def full_information(self) -> np.ndarray:
        """Information of selecting everything (prior included)."""
        return self.prior + self.diag.sum(axis=0) + (
            self.pair_mats.sum(axis=0) if self.n_pairs else 0.0
        )


def invert_covariance(cov: BlockCovariance) -> np.ndarray:
    """Full inverse of the assembled error covariance.

    Inversion happens block by block, which is exact because distinct time
    points never correlate.
    """
    return cov.inverse_dense()


def build_atoms(
    q_stacked: np.ndarray,
    layout: RowLayout,
    sigma_inv: np.ndarray,
    idx: ItemIndex,
    prior: np.ndarray,
    prune: bool = True,
) -> FimAtoms:
    """Precompute every item and item-pair information contribution.

    ``q_stacked`` holds the stacked sensitivities (one row per layout row)
    and ``sigma_inv`` the full inverse covariance over the same rows. An
    SCM item covers its whole time series; a DCM item covers its unit's
    member rows at one time point. With ``prune`` enabled, off-diagonal
    pairs whose covariance block is exactly zero are dropped; diagonal
    atoms are always kept.
    """
    q = np.asarray(q_stacked, dtype=float)
    n_rows = layout.n_rows
    if q.shape[0] != n_rows:
        raise ShapeError(f"Q has {q.shape[0]} rows, layout expects {n_rows}")
    if sigma_inv.shape != (n_rows, n_rows):
        raise ShapeError(f"sigma_inv shape {sigma_inv.shape} != ({n_rows}, {n_rows})")
    p = q.shape[1]
    n = idx.n_items
    rows = [np.asarray(layout.rows_of_item(idx, i), dtype=int) for i in range(n)]

    diag = np.zeros((n, p, p))
    for a in range(n):
        ra = rows[a]
        s_aa = sigma_inv[np.ix_(ra, ra)]
        diag[a] = q[ra].T @ s_aa @ q[ra]

    pairs: list[tuple[int, int]] = []
    mats: list[np.ndarray] = []
    for a in range(n):
        ra = rows[a]
        qa = q[ra]
        for b in range(a + 1, n):
            rb = rows[b]
            s_ab = sigma_inv[np.ix_(ra, rb)]
            if prune and not s_ab.any():
                continue
            m = qa.T @ s_ab @ q[rb]
            mats.append(m + m.T)
            pairs.append((a, b))
    pair_mats = np.array(mats) if mats else np.zeros((0, p, p))
    return FimAtoms(
        n_params=p,
        idx=idx,
        diag=diag,
        pairs=tuple(pairs),
        pair_mats=pair_mats,
        prior=np.asarray(prior, dtype=float),
    )


def eval_fim(atoms: FimAtoms, x_items, x_pairs) -> FimValue:
    """Evaluate ``M(x, y) = M0 + sum diag*x + sum pair*y``.

    Selection weights must lie in [0, 1] (binary or relaxed); values
    outside by more than 1e-9 raise :class:`DomainError`.
    """
    x = np.asarray(x_items, dtype=float)
    y = np.asarray(x_pairs, dtype=float)
    if x.shape != (atoms.n_items,):
        raise ShapeError(f"x_items has shape {x.shape}, expected ({atoms.n_items},)")
    if y.shape != (atoms.n_pairs,):
        raise ShapeError(f"x_pairs has shape {y.shape}, expected ({atoms.n_pairs},)")
    for name, v in (("x_items", x), ("x_pairs", y)):
        if v.size and (v.min() < -1e-9 or v.max() > 1.0 + 1e-9):
            raise DomainError(f"{name} outside [0, 1]: range [{v.min()}, {v.max()}]")
    m = atoms.prior + np.tensordot(x, atoms.diag, axes=(0, 0))
    if atoms.n_pairs:
        m = m + np.tensordot(y, atoms.pair_mats, axes=(0, 0))
    m = 0.5 * (m + m.T)
    return FimValue(matrix=m, lower=sym_to_vec(m))


def pairs_from_items(atoms: FimAtoms, x_items) -> np.ndarray:
    """Pair weights implied by item weights at binary points (x_a * x_b)."""
    x = np.asarray(x_items, dtype=float)
    if not atoms.n_pairs:
        return np.zeros(0)
    a_idx = np.fromiter((a for a, _ in atoms.pairs), dtype=int, count=atoms.n_pairs)
    b_idx = np.fromiter((b for _, b in atoms.pairs), dtype=int, count=atoms.n_pairs)
    return x[a_idx] * x[b_idx]


def atoms_content_key(
    cat: MeasurementCatalog, q_stacked: np.ndarray, sigma: np.ndarray, prior: np.ndarray
) -> str:
    """Content hash identifying an atom set across runs."""
    h = hashlib.sha256()
    h.update(json.dumps(catalog_to_dict(cat), sort_keys=True).encode())
    for arr in (q_stacked, sigma, prior):
        a = np.ascontiguousarray(np.asarray(arr, dtype=float))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def save_atoms(atoms: FimAtoms, path) -> None:
    """Persist atoms to an .npz cache file."""
    np.savez_compressed(
        path,
        n_params=atoms.n_params,
        diag=atoms.diag,
        pairs=np.asarray(atoms.pairs, dtype=int).reshape(-1, 2),
        pair_mats=atoms.pair_mats,
        prior=atoms.prior,
    )


def load_atoms(path, idx: ItemIndex) -> FimAtoms:
    """Load a cached atom set; the item index must match the catalog used to build it."""
    data = np.load(Path(path))
    pairs = tuple((int(a), int(b)) for a, b in data["pairs"])
    return FimAtoms(
        n_params=int(data["n_params"]),
        idx=idx,
        diag=data["diag"],
        pairs=pairs,
        pair_mats=data["pair_mats"] if data["pair_mats"].size else np.zeros((0, int(data["n_params"]), int(data["n_params"]))),
        prior=data["prior"],
    )
