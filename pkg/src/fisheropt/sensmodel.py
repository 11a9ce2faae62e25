"""Stacked parameter-sensitivity matrices.

Two sources are supported: a built-in first-order series-reaction model
(A -> B -> C in a batch reactor, Arrhenius rate constants) differentiated by
central finite differences, and ingestion of externally computed
sensitivities from a long-format CSV for models too large to simulate here.

Rows of a :class:`SensitivityMatrix` are stacked channel-major: all time
points of the first channel, then the second, and so on. Every downstream
module assumes exactly this ordering.

A note on identifiability: at one fixed temperature the Arrhenius pairs
(A_i, E_i) act only through k_i = A_i exp(-E_i/(R T)), so their sensitivity
columns are exactly proportional and no measurement choice can identify all
four parameters. ``T_final`` optionally ramps the batch temperature
linearly over the horizon, which separates pre-exponentials from
activation energies the way programmed-temperature experiments do.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    IncompleteDataError,
    InvalidInputError,
    InvalidValueError,
    NumericFailureError,
    ShapeError,
)

__all__ = [
    "KineticsConfig",
    "SensitivityMatrix",
    "Manifest",
    "simulate_kinetics",
    "kinetics_sensitivities",
    "ingest_sensitivities",
    "export_sensitivities",
    "manifest_for",
]

KINETICS_CHANNELS = ("C_A", "C_B", "C_C")
KINETICS_PARAMETERS = ("A1", "E1", "A2", "E2")


@dataclass(frozen=True)
class KineticsConfig:
    """Nominal point and grids for the built-in reaction-kinetics model.

    Rate constants follow Arrhenius temperature dependence,
    ``k_i = A_i * exp(-E_i / (R * T))``. Pre-exponential factors are in 1/h,
    activation energies in kJ/mol, temperatures in K, concentrations in
    mol/L, and the measurement grid ``t_grid`` in minutes. ``fd_rel_step``
    is the relative perturbation for finite-difference sensitivities.

    With ``T_final`` set, the batch temperature ramps linearly from ``T``
    at the first grid time to ``T_final`` at the last; otherwise it is
    constant.
    """

    A1: float
    E1: float
    A2: float
    E2: float
    T: float = 300.0
    CA0: float = 1.0
    R: float = 8.314e-3
    t_grid: tuple[float, ...] = tuple(7.5 * i for i in range(9))
    fd_rel_step: float = 1e-2
    T_final: float | None = None

    def __post_init__(self):
        for name in ("A1", "E1", "E2", "T", "CA0", "R"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be strictly positive")
        if self.A2 < 0:
            raise InvalidInputError("A2 must be nonnegative")
        if self.T_final is not None and self.T_final <= 0:
            raise InvalidInputError("T_final must be strictly positive")
        grid = tuple(float(t) for t in self.t_grid)
        if len(grid) == 0 or grid[0] < 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidInputError("t_grid must be strictly increasing and start at >= 0")
        if not 0.0 < self.fd_rel_step < 0.1:
            raise InvalidInputError("fd_rel_step must lie in (0, 0.1)")
        object.__setattr__(self, "t_grid", grid)

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.A1, self.E1, self.A2, self.E2])

    def rate_constants(self) -> tuple[float, float]:
        """k1, k2 at the initial temperature."""
        k1 = self.A1 * math.exp(-self.E1 / (self.R * self.T))
        k2 = self.A2 * math.exp(-self.E2 / (self.R * self.T))
        return k1, k2


@dataclass(frozen=True)
class Manifest:
    """Declares the channel/time/parameter layout of a sensitivity source."""

    channels: tuple[str, ...]
    times: tuple[float, ...]
    parameters: tuple[str, ...]
    time_unit: str = "min"

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if len(set(self.channels)) != len(self.channels):
            raise InvalidInputError("manifest channels must be unique")
        if len(set(self.times)) != len(self.times):
            raise InvalidInputError("manifest times must be unique")
        if not self.channels or not self.times or not self.parameters:
            raise InvalidInputError("manifest must declare channels, times, and parameters")

    @classmethod
    def from_json(cls, source) -> "Manifest":
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        else:
            doc = source
        return cls(
            channels=doc["channels"],
            times=doc["times"],
            parameters=doc["parameters"],
            time_unit=doc.get("time_unit", "min"),
        )


@dataclass
class SensitivityMatrix:
    """Stacked sensitivities d(measurement)/d(parameter).

    ``values`` has one row per (channel, time) in channel-major order and
    one column per parameter. ``rows`` mirrors the row labels.
    """

    channels: tuple[str, ...]
    times: tuple[float, ...]
    parameters: tuple[str, ...]
    values: np.ndarray
    rows: list = field(init=False)

    def __post_init__(self):
        self.channels = tuple(self.channels)
        self.times = tuple(float(t) for t in self.times)
        self.parameters = tuple(self.parameters)
        self.values = np.asarray(self.values, dtype=float)
        expected = (len(self.channels) * len(self.times), len(self.parameters))
        if self.values.shape != expected:
            raise ShapeError(
                f"sensitivity values shape {self.values.shape} does not match "
                f"{len(self.channels)} channels x {len(self.times)} times x "
                f"{len(self.parameters)} parameters"
            )
        self.rows = [(ch, t) for ch in self.channels for t in self.times]

    def row_index(self, channel: str, time: float) -> int:
        try:
            c = self.channels.index(channel)
            t = self.times.index(float(time))
        except ValueError as exc:
            raise InvalidInputError(f"unknown sensitivity row ({channel}, {time})") from exc
        return c * len(self.times) + t

    def column(self, parameter: str) -> np.ndarray:
        return self.values[:, self.parameters.index(parameter)]


def _simulate_theta(cfg: KineticsConfig, theta) -> dict[str, np.ndarray]:
    """Integrate the model at an arbitrary parameter vector.

    Used by the finite-difference loop, so it must accept perturbed values
    that a user-facing config would reject (an A2 nudged below zero when
    the nominal sits at the boundary).
    """
    a1, e1, a2, e2 = (float(v) for v in theta)
    t_min = np.asarray(cfg.t_grid, dtype=float)
    t_hours = t_min / 60.0
    span = t_hours[-1] - t_hours[0]
    t0_h = t_hours[0]
    r = cfg.R

    if cfg.T_final is None or span == 0.0:
        def temperature(_t):
            return cfg.T
    else:
        t1 = cfg.T_final

        def temperature(t):
            frac = min(max((t - t0_h) / span, 0.0), 1.0)
            return cfg.T + (t1 - cfg.T) * frac

    def rhs(t, y):
        temp = temperature(t)
        k1 = a1 * math.exp(-e1 / (r * temp))
        k2 = a2 * math.exp(-e2 / (r * temp))
        ca, cb = y
        return (-k1 * ca, k1 * ca - k2 * cb)

    t_end = t_hours[-1] if t_hours[-1] > 0 else 1e-12
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        (cfg.CA0, 0.0),
        method="RK45",
        t_eval=t_hours,
        rtol=1e-8,
        atol=1e-10,
    )
    if not sol.success:
        raise NumericFailureError(
            f"kinetics integration failed: {sol.message}", iterations=sol.nfev
        )
    ca, cb = sol.y
    cc = cfg.CA0 - ca - cb
    return {"C_A": ca.copy(), "C_B": cb.copy(), "C_C": cc}


def simulate_kinetics(cfg: KineticsConfig) -> dict[str, np.ndarray]:
    """Concentrations per channel (mol/L) over the measurement grid.

    C_C comes from the mole balance ``C_A + C_B + C_C = CA0``. The
    integrator is adaptive RK45 at rtol 1e-8 / atol 1e-10; the grid is in
    minutes while rate constants are per hour, so time converts inside.
    """
    return _simulate_theta(cfg, cfg.theta)


def _stacked_outputs(cfg: KineticsConfig, theta) -> np.ndarray:
    conc = _simulate_theta(cfg, theta)
    return np.concatenate([conc[ch] for ch in KINETICS_CHANNELS])


def kinetics_sensitivities(cfg: KineticsConfig) -> SensitivityMatrix:
    """Central finite-difference sensitivities of the kinetics model.

    Each parameter is perturbed by ``h = fd_rel_step * |theta_i|``
    (parameters sitting exactly at zero use an absolute step of
    ``fd_rel_step``) and the column is ``(y(theta+h) - y(theta-h)) / (2h)``,
    rows stacked channel-major over (C_A, C_B, C_C) x t_grid.
    """
    theta = cfg.theta
    columns = []
    for i in range(len(theta)):
        h = cfg.fd_rel_step * abs(theta[i])
        if h == 0.0:
            h = cfg.fd_rel_step
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        columns.append((_stacked_outputs(cfg, up) - _stacked_outputs(cfg, dn)) / (2.0 * h))
    values = np.column_stack(columns)
    return SensitivityMatrix(
        channels=KINETICS_CHANNELS,
        times=cfg.t_grid,
        parameters=KINETICS_PARAMETERS,
        values=values,
    )


def ingest_sensitivities(path, manifest: Manifest) -> SensitivityMatrix:
    """Load a long-format sensitivity CSV into canonical stacking.

    The file must have the header ``channel,time,parameter,value`` and one
    row per cell. Row order in the file is irrelevant; the result is always
    stacked channel-major per the manifest. Missing cells raise
    :class:`IncompleteDataError` (listing the first 10 missing keys) and
    non-finite values raise :class:`InvalidValueError` naming the cell.
    """
    n_rows = len(manifest.channels) * len(manifest.times)
    values = np.full((n_rows, len(manifest.parameters)), np.nan)
    seen = np.zeros(values.shape, dtype=bool)
    ch_idx = {c: i for i, c in enumerate(manifest.channels)}
    t_idx = {t: i for i, t in enumerate(manifest.times)}
    p_idx = {p: i for i, p in enumerate(manifest.parameters)}

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"channel", "time", "parameter", "value"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InvalidInputError(
                f"sensitivity CSV must have columns {sorted(required)}, got {reader.fieldnames}"
            )
        for rec in reader:
            ch = rec["channel"]
            t = float(rec["time"])
            p = rec["parameter"]
            if ch not in ch_idx or t not in t_idx or p not in p_idx:
                raise InvalidInputError(
                    f"CSV cell ({ch}, {t}, {p}) is not declared in the manifest"
                )
            v = float(rec["value"])
            if not math.isfinite(v):
                raise InvalidValueError(
                    f"non-finite sensitivity at channel={ch}, time={t}, parameter={p}",
                    row=(ch, t),
                    column=p,
                )
            r = ch_idx[ch] * len(manifest.times) + t_idx[t]
            values[r, p_idx[p]] = v
            seen[r, p_idx[p]] = True

    if not seen.all():
        missing = []
        for ch in manifest.channels:
            for t in manifest.times:
                r = ch_idx[ch] * len(manifest.times) + t_idx[t]
                for p in manifest.parameters:
                    if not seen[r, p_idx[p]]:
                        missing.append((ch, t, p))
        raise IncompleteDataError(
            f"sensitivity file is missing {len(missing)} cells; first: {missing[:10]}",
            missing=missing[:10],
        )
    return SensitivityMatrix(
        channels=manifest.channels,
        times=manifest.times,
        parameters=manifest.parameters,
        values=values,
    )


def export_sensitivities(q: SensitivityMatrix, path) -> None:
    """Write a :class:`SensitivityMatrix` in the long CSV format.

    Values are written with shortest round-trip float formatting, so an
    ingest of the exported file reproduces the matrix bit for bit.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", "time", "parameter", "value"])
        for r, (ch, t) in enumerate(q.rows):
            for c, p in enumerate(q.parameters):
                writer.writerow([ch, repr(float(t)), p, repr(float(q.values[r, c]))])


def manifest_for(q: SensitivityMatrix, time_unit: str = "min") -> Manifest:
    """Manifest describing an in-memory sensitivity matrix."""
    return Manifest(
        channels=q.channels, times=q.times, parameters=q.parameters, time_unit=time_unit
    )
