"""Measurement universe: sensors, samples, costs, and error covariance.

Two kinds of purchasable measurements exist. A static-cost measurement
(SCM) is bought once and then delivers its entire time series, so it is a
single selectable item. A dynamic-cost measurement (DCM) is paid per
sample, one selectable item per time point, plus a one-time installation
charge when any sample is taken. DCM channels may be grouped so that one
sample captures all member channels simultaneously.

The catalog fixes the item indexing and the stacked measurement-row layout
shared by every downstream module: items are all SCMs in catalog order,
then DCM samples in unit order, time-major within a unit; stacked rows are
slot-major (each SCM and each DCM channel is a slot) with the slot's grid
inside.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateItemError,
    InvalidInputError,
    NotPositiveDefiniteError,
    ShapeError,
)
from .symmat import cholesky_spd

__all__ = [
    "Measurement",
    "ErrorCovariance",
    "MeasurementCatalog",
    "DcmUnit",
    "Item",
    "ItemIndex",
    "RowLayout",
    "BlockCovariance",
    "build_item_index",
    "build_row_layout",
    "assemble_covariance",
    "item_cost_vector",
    "stack_sensitivities",
    "load_catalog",
    "catalog_to_dict",
]

SCM = "scm"
DCM = "dcm"


@dataclass(frozen=True)
class Measurement:
    """One purchasable measurement channel (SCM or DCM)."""

    name: str
    channel: str
    install: float
    per_sample: float
    times: tuple[float, ...]
    kind: str

    def __post_init__(self):
        if self.kind not in (SCM, DCM):
            raise InvalidInputError(f"kind must be '{SCM}' or '{DCM}', got {self.kind!r}")
        if self.install < 0 or self.per_sample < 0:
            raise InvalidInputError(f"costs for {self.name} must be nonnegative")
        grid = tuple(float(t) for t in self.times)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidInputError(f"time grid for {self.name} must be strictly increasing")
        object.__setattr__(self, "times", grid)


@dataclass(frozen=True)
class ErrorCovariance:
    """Per-time-point error covariance over channels.

    ``matrix`` is the symmetric positive definite channel covariance that
    applies at every shared time point; errors are independent across time
    points, so the assembled covariance is block-diagonal by time.
    ``scm_dcm_scale`` multiplies covariance entries between an SCM row and a
    DCM row of possibly the same physical channel (instrument pairing
    weakens the correlation; 1.0 means no distinction).
    """

    channels: tuple[str, ...]
    matrix: np.ndarray
    scm_dcm_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (len(self.channels), len(self.channels)):
            raise ShapeError(
                f"covariance matrix shape {m.shape} does not match {len(self.channels)} channels"
            )
        if not np.allclose(m, m.T, rtol=0, atol=1e-12):
            raise InvalidInputError("channel covariance must be symmetric")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))
        if self.scm_dcm_scale < 0:
            raise InvalidInputError("scm_dcm_scale must be nonnegative")

    def entry(self, channel_a: str, channel_b: str) -> float:
        ia = self.channels.index(channel_a)
        ib = self.channels.index(channel_b)
        return float(self.matrix[ia, ib])


@dataclass(frozen=True)
class MeasurementCatalog:
    """All candidate measurements plus the error model."""

    scms: tuple[Measurement, ...]
    dcms: tuple[Measurement, ...]
    groups: tuple[tuple[str, ...], ...] = ()
    covariance: ErrorCovariance | None = None

    def __post_init__(self):
        object.__setattr__(self, "scms", tuple(self.scms))
        object.__setattr__(self, "dcms", tuple(self.dcms))
        object.__setattr__(
            self, "groups", tuple(tuple(g) for g in self.groups)
        )
        names = [m.name for m in self.scms] + [m.name for m in self.dcms]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise DuplicateItemError(f"duplicate measurement names: {sorted(dupes)}")
        for m in self.scms:
            if m.kind != SCM:
                raise InvalidInputError(f"{m.name} listed under scm but has kind {m.kind}")
        for m in self.dcms:
            if m.kind != DCM:
                raise InvalidInputError(f"{m.name} listed under dcm but has kind {m.kind}")
        dcm_names = {m.name for m in self.dcms}
        grouped = [n for g in self.groups for n in g]
        if len(set(grouped)) != len(grouped):
            raise InvalidInputError("a DCM may belong to at most one group")
        for g in self.groups:
            if len(g) < 2:
                raise InvalidInputError("groups need at least two members")
            members = [self.dcm_by_name(n) for n in g if n in dcm_names]
            if len(members) != len(g):
                missing = [n for n in g if n not in dcm_names]
                raise InvalidInputError(f"group references unknown DCMs: {missing}")
            grids = {m.times for m in members}
            if len(grids) != 1:
                raise InvalidInputError(
                    f"grouped DCMs {g} must share an identical time grid"
                )
        if self.covariance is not None:
            declared = set(self.covariance.channels)
            for m in list(self.scms) + list(self.dcms):
                if m.channel not in declared:
                    raise InvalidInputError(
                        f"channel {m.channel!r} of {m.name} missing from covariance channels"
                    )

    def dcm_by_name(self, name: str) -> Measurement:
        for m in self.dcms:
            if m.name == name:
                return m
        raise InvalidInputError(f"unknown DCM {name!r}")

    @property
    def slots(self) -> tuple[Measurement, ...]:
        """Stacked-row slots: every SCM, then every DCM channel."""
        return self.scms + self.dcms


@dataclass(frozen=True)
class DcmUnit:
    """One sampling decision stream: a single DCM or a sampled-together group.

    ``members`` are slot indices into ``catalog.slots``; a sample of the
    unit at time t measures every member channel at t for one
    ``per_sample`` charge, and the first use incurs ``install`` once.
    """

    name: str
    members: tuple[int, ...]
    times: tuple[float, ...]
    install: float
    per_sample: float


@dataclass(frozen=True)
class Item:
    """One binary selection decision."""

    kind: str
    name: str
    unit: int  # SCM index or DcmUnit index
    time: float | None = None


@dataclass(frozen=True)
class ItemIndex:
    """Deterministic ordering of all selectable items."""

    items: tuple[Item, ...]
    units: tuple[DcmUnit, ...]
    n_scm: int

    def __len__(self) -> int:
        return len(self.items)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def scm_items(self) -> range:
        return range(self.n_scm)

    def items_of_unit(self, u: int) -> list[int]:
        return [i for i, it in enumerate(self.items) if it.kind == DCM and it.unit == u]


def build_item_index(cat: MeasurementCatalog) -> ItemIndex:
    """Index all selectable items: SCMs first, then DCM samples time-major.

    Grouped DCMs collapse into a single unit (one binary per shared time
    point); the unit keeps the position of its first member in catalog
    order.
    """
    grouped: dict[str, int] = {}
    units: list[DcmUnit] = []
    slot_of = {m.name: i for i, m in enumerate(cat.slots)}
    for g in cat.groups:
        grouped.update({name: len(units) for name in g})
        members = tuple(slot_of[name] for name in g)
        first = cat.dcm_by_name(g[0])
        units.append(
            DcmUnit(
                name="+".join(g),
                members=members,
                times=first.times,
                install=first.install,
                per_sample=first.per_sample,
            )
        )
    ordered_units: list[DcmUnit] = []
    emitted_groups: set[int] = set()
    for m in cat.dcms:
        if m.name in grouped:
            gi = grouped[m.name]
            if gi not in emitted_groups:
                emitted_groups.add(gi)
                ordered_units.append(units[gi])
        else:
            ordered_units.append(
                DcmUnit(
                    name=m.name,
                    members=(slot_of[m.name],),
                    times=m.times,
                    install=m.install,
                    per_sample=m.per_sample,
                )
            )
    items: list[Item] = [Item(kind=SCM, name=m.name, unit=i) for i, m in enumerate(cat.scms)]
    for u, unit in enumerate(ordered_units):
        items.extend(
            Item(kind=DCM, name=f"{unit.name}@{t:g}", unit=u, time=t) for t in unit.times
        )
    return ItemIndex(items=tuple(items), units=tuple(ordered_units), n_scm=len(cat.scms))


@dataclass(frozen=True)
class RowLayout:
    """Slot-major stacked measurement rows shared by Q and the covariance."""

    slots: tuple[Measurement, ...]
    rows: tuple[tuple[int, float], ...]  # (slot index, time)
    row_of: dict = field(repr=False, default_factory=dict)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def rows_of_item(self, idx: ItemIndex, item_id: int) -> list[int]:
        """Stacked rows covered by selecting one item."""
        it = idx.items[item_id]
        if it.kind == SCM:
            slot = it.unit
            return [self.row_of[(slot, t)] for t in self.slots[slot].times]
        unit = idx.units[it.unit]
        return [self.row_of[(s, it.time)] for s in unit.members]


def build_row_layout(cat: MeasurementCatalog) -> RowLayout:
    rows: list[tuple[int, float]] = []
    row_of: dict = {}
    for s, meas in enumerate(cat.slots):
        for t in meas.times:
            row_of[(s, t)] = len(rows)
            rows.append((s, t))
    return RowLayout(slots=cat.slots, rows=tuple(rows), row_of=row_of)


@dataclass
class BlockCovariance:
    """Assembled stacked-row covariance, block-diagonal by time point.

    ``blocks[k]`` is the SPD covariance among the slots listed in
    ``block_rows[k]`` (global stacked-row ids) at time ``times[k]``.
    """

    layout: RowLayout
    times: tuple[float, ...]
    block_rows: tuple[tuple[int, ...], ...]
    blocks: tuple[np.ndarray, ...]

    @property
    def n_rows(self) -> int:
        return self.layout.n_rows

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_rows))
        for rows, block in zip(self.block_rows, self.blocks):
            out[np.ix_(rows, rows)] = block
        return out

    def inverse_dense(self) -> np.ndarray:
        """Inverse assembled block by block (exact under block-diagonality)."""
        out = np.zeros((self.n_rows, self.n_rows))
        for t, rows, block in zip(self.times, self.block_rows, self.blocks):
            try:
                lower = cholesky_spd(block)
            except NotPositiveDefiniteError as exc:
                raise NotPositiveDefiniteError(
                    f"covariance block at time {t:g} is singular or indefinite",
                    pivot_index=exc.pivot_index,
                    context=t,
                ) from exc
            inv_l = np.linalg.inv(lower)
            out[np.ix_(rows, rows)] = inv_l.T @ inv_l
        return out


def assemble_covariance(cat: MeasurementCatalog, cov: ErrorCovariance) -> BlockCovariance:
    """Build the stacked-row covariance from the per-time channel model.

    For each time point shared by two slots, the entry is the channel
    covariance scaled by ``scm_dcm_scale`` when one slot is an SCM and the
    other a DCM. Slots never correlate across distinct time points. Each
    per-time block must be SPD.
    """
    layout = build_row_layout(cat)
    all_times = sorted({t for _, t in layout.rows})
    block_rows = []
    blocks = []
    for t in all_times:
        slots_here = [s for s, meas in enumerate(layout.slots) if t in meas.times]
        rows = tuple(layout.row_of[(s, t)] for s in slots_here)
        n = len(slots_here)
        block = np.zeros((n, n))
        for a in range(n):
            for b in range(n):
                ma = layout.slots[slots_here[a]]
                mb = layout.slots[slots_here[b]]
                v = cov.entry(ma.channel, mb.channel)
                if ma.kind != mb.kind:
                    v *= cov.scm_dcm_scale
                block[a, b] = v
        try:
            cholesky_spd(block)
        except NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(
                f"covariance block at time {t:g} is not positive definite",
                pivot_index=exc.pivot_index,
                context=t,
            ) from exc
        block_rows.append(rows)
        blocks.append(block)
    return BlockCovariance(
        layout=layout, times=tuple(all_times), block_rows=tuple(block_rows), blocks=tuple(blocks)
    )


def item_cost_vector(cat: MeasurementCatalog, idx: ItemIndex):
    """Per-item purchase costs and per-unit DCM installation costs.

    An SCM item buys its whole series: ``install + per_sample * T``. A DCM
    item costs its unit's ``per_sample``; installation is charged once per
    unit through a separate linking binary, so it is returned separately.
    """
    per_item = np.zeros(idx.n_items)
    for i, it in enumerate(idx.items):
        if it.kind == SCM:
            m = cat.scms[it.unit]
            per_item[i] = m.install + m.per_sample * len(m.times)
        else:
            per_item[i] = idx.units[it.unit].per_sample
    install = np.array([u.install for u in idx.units])
    return per_item, install


def stack_sensitivities(cat: MeasurementCatalog, q) -> np.ndarray:
    """Expand model sensitivities onto the catalog's stacked rows.

    Each slot row (slot, t) takes the model row (slot.channel, t) from
    ``q``; SCM and DCM slots referencing the same physical channel share
    sensitivity values but keep distinct stacked rows (their errors differ).
    """
    layout = build_row_layout(cat)
    out = np.zeros((layout.n_rows, len(q.parameters)))
    missing = []
    for r, (s, t) in enumerate(layout.rows):
        ch = layout.slots[s].channel
        try:
            out[r] = q.values[q.row_index(ch, t)]
        except InvalidInputError:
            missing.append((ch, t))
    if missing:
        raise InvalidInputError(
            f"sensitivity source lacks {len(missing)} (channel, time) rows; first: {missing[:10]}"
        )
    return out


def _measurement_from_dict(rec: dict, kind: str) -> Measurement:
    return Measurement(
        name=rec["name"],
        channel=rec["channel"],
        install=float(rec["install"]),
        per_sample=float(rec["per_sample"]),
        times=tuple(rec["times"]),
        kind=kind,
    )


def load_catalog(source) -> MeasurementCatalog:
    """Read a catalog from its JSON document (path, JSON string, or dict)."""
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = json.loads(source)
    cov = None
    if "covariance" in doc and doc["covariance"] is not None:
        c = doc["covariance"]
        cov = ErrorCovariance(
            channels=tuple(c["channels"]),
            matrix=np.asarray(c["matrix"], dtype=float),
            scm_dcm_scale=float(c.get("scm_dcm_scale", 1.0)),
        )
    return MeasurementCatalog(
        scms=tuple(_measurement_from_dict(r, SCM) for r in doc.get("scm", [])),
        dcms=tuple(_measurement_from_dict(r, DCM) for r in doc.get("dcm", [])),
        groups=tuple(tuple(g) for g in doc.get("groups", [])),
        covariance=cov,
    )


def catalog_to_dict(cat: MeasurementCatalog) -> dict:
    doc = {
        "scm": [
            {
                "name": m.name,
                "channel": m.channel,
                "install": m.install,
                "per_sample": m.per_sample,
                "times": list(m.times),
            }
            for m in cat.scms
        ],
        "dcm": [
            {
                "name": m.name,
                "channel": m.channel,
                "install": m.install,
                "per_sample": m.per_sample,
                "times": list(m.times),
            }
            for m in cat.dcms
        ],
        "groups": [list(g) for g in cat.groups],
    }
    if cat.covariance is not None:
        doc["covariance"] = {
            "channels": list(cat.covariance.channels),
            "matrix": cat.covariance.matrix.tolist(),
            "scm_dcm_scale": cat.covariance.scm_dcm_scale,
        }
    return doc
