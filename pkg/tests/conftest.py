import numpy as np
import pytest

from fisheropt.catalog import (
    ErrorCovariance,
    Measurement,
    MeasurementCatalog,
    assemble_covariance,
    build_item_index,
    build_row_layout,
    stack_sensitivities,
)
from fisheropt.fimatoms import build_atoms, invert_covariance
from fisheropt.sensmodel import KineticsConfig, kinetics_sensitivities

# nominal point for the built-in kinetics model used throughout the tests;
# the temperature ramp separates pre-exponentials from activation energies
# (a fixed-T batch leaves the Arrhenius pairs structurally confounded) and
# dynamics stay informative over the 0-60 min grid (k1 ~ 2.2-2.7/h)
KINETICS_NOMINAL = dict(
    A1=5.0, E1=2.0, A2=4.0, E2=6.0, T=300.0, T_final=400.0, CA0=1.0
)

KINETICS_TIMES = tuple(7.5 * i for i in range(9))

# per-time-point channel covariance of the three concentration measurements
KINETICS_COV = np.array(
    [
        [1.0, 0.1, 0.1],
        [0.1, 4.0, 0.5],
        [0.1, 0.5, 8.0],
    ]
)


def make_kinetics_catalog() -> MeasurementCatalog:
    scms = tuple(
        Measurement(
            name=f"{ch}_SCM", channel=ch, install=2000.0, per_sample=0.0,
            times=KINETICS_TIMES, kind="scm",
        )
        for ch in ("C_A", "C_B", "C_C")
    )
    dcms = tuple(
        Measurement(
            name=f"{ch}_DCM", channel=ch, install=200.0, per_sample=400.0,
            times=KINETICS_TIMES, kind="dcm",
        )
        for ch in ("C_A", "C_B", "C_C")
    )
    cov = ErrorCovariance(
        channels=("C_A", "C_B", "C_C"), matrix=KINETICS_COV, scm_dcm_scale=0.5
    )
    return MeasurementCatalog(scms=scms, dcms=dcms, covariance=cov)


@pytest.fixture(scope="session")
def kinetics_catalog():
    return make_kinetics_catalog()


@pytest.fixture(scope="session")
def kinetics_cfg():
    return KineticsConfig(**KINETICS_NOMINAL)


@pytest.fixture(scope="session")
def kinetics_q(kinetics_cfg):
    return kinetics_sensitivities(kinetics_cfg)


@pytest.fixture(scope="session")
def kinetics_atoms(kinetics_catalog, kinetics_q):
    return build_kinetics_atoms(kinetics_catalog, kinetics_q)


def build_kinetics_atoms(cat, q, prior_eps=1e-8):
    idx = build_item_index(cat)
    layout = build_row_layout(cat)
    q_stacked = stack_sensitivities(cat, q)
    sigma = assemble_covariance(cat, cat.covariance)
    sigma_inv = invert_covariance(sigma)
    prior = prior_eps * np.eye(len(q.parameters))
    return build_atoms(q_stacked, layout, sigma_inv, idx, prior)


def random_spd(rng, n, shift=0.5):
    b = rng.normal(size=(n, n))
    return b @ b.T + shift * np.eye(n)


def make_toy(rng, n_scm=1, n_dcm=2, n_times=4, n_params=3, prior_eps=1e-2,
             scm_dcm_scale=1.0):
    """Random small instance sharing the production covariance structure."""
    times = tuple(float(t) for t in np.arange(n_times) * 5.0)
    channels = [f"ch{k}" for k in range(n_scm + n_dcm)]
    scms = tuple(
        Measurement(
            name=f"S{k}", channel=channels[k],
            install=float(rng.integers(500, 2500)), per_sample=0.0,
            times=times, kind="scm",
        )
        for k in range(n_scm)
    )
    dcms = tuple(
        Measurement(
            name=f"D{k}", channel=channels[n_scm + k],
            install=float(rng.integers(50, 400)),
            per_sample=float(rng.integers(100, 600)),
            times=times, kind="dcm",
        )
        for k in range(n_dcm)
    )
    cov = ErrorCovariance(
        channels=tuple(channels),
        matrix=random_spd(rng, len(channels), shift=1.0),
        scm_dcm_scale=scm_dcm_scale,
    )
    cat = MeasurementCatalog(scms=scms, dcms=dcms, covariance=cov)
    idx = build_item_index(cat)
    layout = build_row_layout(cat)
    q_stacked = rng.normal(size=(layout.n_rows, n_params))
    sigma = assemble_covariance(cat, cov)
    sigma_inv = invert_covariance(sigma)
    prior = prior_eps * np.eye(n_params)
    atoms = build_atoms(q_stacked, layout, sigma_inv, idx, prior)
    return cat, idx, layout, q_stacked, sigma, atoms


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def write_kinetics_config(dirpath, budgets_extra=None, solver=None, cache=False):
    """Materialize the kinetics run configuration as JSON files."""
    import json
    from pathlib import Path

    from fisheropt.catalog import catalog_to_dict

    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    cat_path = dirpath / "catalog.json"
    cat_path.write_text(json.dumps(catalog_to_dict(make_kinetics_catalog()), indent=1))
    doc = {
        "catalog": "catalog.json",
        "sensitivities": {"kind": "kinetics", "config": dict(KINETICS_NOMINAL)},
        "constraints": {"l_total": 10, "l_d": 5, "t_min": 10.0},
        "prior_fim_epsilon": 1e-8,
        "output_dir": "out",
        "solver": solver or {},
    }
    if cache:
        doc["cache_dir"] = "cache"
    if budgets_extra:
        doc.update(budgets_extra)
    cfg_path = dirpath / "config.json"
    cfg_path.write_text(json.dumps(doc, indent=1))
    return cfg_path
