"""Simulation scenarios and a seeded replication runner.

Scenario 1 uses mixtures of von Mises-Fisher components, scenario 2 Watson
distributions. Each replication draws its own concentration, class
proportion, centres and data from streams derived from
``(master_seed, cell key, replication, role)``, so a cell's results do not
depend on how replications are scheduled.
"""

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ._validation import DataError
from .classifier import fit_predict_betas, misclassification_rate
from .sampling import (
    CenterConstraintError,
    CenterRule,
    Interval,
    MixtureSpec,
    VmfParams,
    WatsonParams,
    constrained_centers,
    derive_rng,
    sample_mixture,
    sample_params,
)

__all__ = [
    "NOISE_KAPPA",
    "ScenarioSpec",
    "SimulatedData",
    "CellResult",
    "CellError",
    "center_rules",
    "generate_scenario1",
    "generate_scenario2",
    "generate",
    "run_cell",
    "aggregate",
    "summarize",
    "write_results",
    "RESULT_COLUMNS",
]

NOISE_KAPPA = {"low": (15.0, 17.0), "medium": (10.0, 12.0), "high": (5.0, 7.0)}
SETUP2_EPS = 0.1
_MAX_RESTARTS = 50

RESULT_COLUMNS = ["scenario", "family", "setup", "q", "noise", "method", "beta", "replication", "mr"]


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell."""

    family: str
    setup: int
    q: int
    noise: str
    n: int = 500
    train_fraction: float = 0.7
    class1_fraction: tuple = (0.35, 0.50)
    replications: int = 20
    beta_grid: tuple = (0.05, 0.10, 0.25)
    master_seed: int = 0
    degrees: tuple = (1, 2, 3)

    def __post_init__(self):
        if self.family not in ("vmf", "watson"):
            raise ValueError(f"family must be 'vmf' or 'watson', got {self.family!r}")
        if self.setup not in (1, 2, 3):
            raise ValueError(f"setup must be 1, 2 or 3, got {self.setup}")
        if self.noise not in NOISE_KAPPA:
            raise ValueError(f"noise must be one of {sorted(NOISE_KAPPA)}, got {self.noise!r}")
        if self.q < 2 or self.n < 10 or self.replications < 1:
            raise ValueError("invalid dimension, size or replication count")
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        object.__setattr__(self, "class1_fraction", tuple(self.class1_fraction))
        object.__setattr__(self, "degrees", tuple(self.degrees))

    @property
    def scenario(self):
        return 1 if self.family == "vmf" else 2

    @property
    def key(self):
        return f"{self.family}-setup{self.setup}-q{self.q}-{self.noise}"

    @property
    def methods(self):
        """``(name, beta)`` per arm: CDD is the beta = 1 arm."""
        return [("CDD", 1.0)] + [("LCDD", b) for b in self.beta_grid]

    def rng(self, replication, role):
        return derive_rng(self.master_seed, self.key, replication, role)


@dataclass
class SimulatedData:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    centers: np.ndarray
    kappa: float
    class1_fraction: float
    components: dict = field(default_factory=dict)


def center_rules(family, setup):
    """Centre generation rules; centre 0 is always e_1.

    vMF setups 2 and 3 return four centres ordered
    ``[class 1 comp 1, class 1 comp 2, class 2 comp 1, class 2 comp 2]``;
    the other cells return ``[class 1, class 2]``.
    """
    if family == "watson":
        return [CenterRule([Interval(0, 0.5, 0.7)])]
    if setup == 1:
        return [CenterRule([Interval(0, 0.3, 0.5)])]
    if setup == 2:

        def last(C):
            d01 = 1.0 - C[0] @ C[1]
            d02 = 1.0 - C[0] @ C[2]
            return [
                Interval(2, d01 - SETUP2_EPS, d01 + SETUP2_EPS),
                Interval(1, d02 - SETUP2_EPS, d02 + SETUP2_EPS),
            ]

        return [
            CenterRule([Interval(0, 0.6, 0.8)]),
            CenterRule([Interval(0, 0.25, 0.45)], equidistant=(0, 1)),
            CenterRule(last),
        ]
    return [
        CenterRule([Interval(0, 0.4, 0.6)]),
        CenterRule([Interval(0, 0.4, 0.6), Interval(1, 0.8, 1.0)]),
        CenterRule([Interval(0, 0.4, 2.0), Interval(1, 0.4, 2.0), Interval(2, 0.8, 2.0)]),
    ]


def check_centers(rules, centers, tol=1e-12):
    """Return True when ``centers`` satisfy every rule (checked post hoc)."""
    for r, rule in enumerate(rules):
        new = centers[r + 1]
        prev = centers[: r + 1]
        intervals = rule.intervals(prev) if callable(rule.intervals) else rule.intervals
        for iv in intervals:
            d = 1.0 - new @ prev[iv.ref]
            if d < iv.lo - tol or (iv.hi < 2.0 and d > iv.hi + tol):
                return False
        if rule.equidistant is not None:
            a, b = rule.equidistant
            if abs((new @ prev[a]) - (new @ prev[b])) > 1e-9:
                return False
    return True


def _draw_centers(spec, replication):
    rules = center_rules(spec.family, spec.setup)
    rng = spec.rng(replication, "centers")
    for _ in range(_MAX_RESTARTS):
        try:
            centers = constrained_centers(rules, spec.q, rng)
        except CenterConstraintError:
            continue
        if not check_centers(rules, centers):
            raise AssertionError("generated centres violate their constraints")
        return rules, centers
    raise CenterConstraintError(f"{spec.key}: centre generation failed after {_MAX_RESTARTS} restarts")


def _sizes(spec, replication):
    lo, hi = spec.class1_fraction
    frac = float(spec.rng(replication, "fraction").uniform(lo, hi))
    n1 = int(round(frac * spec.n))
    return frac, n1, spec.n - n1


def _split(X1, X2, spec, replication):
    """Stratified train/test split preserving the class proportions."""
    rng = spec.rng(replication, "split")
    parts = {"train": ([], []), "test": ([], [])}
    for label, X in ((1, X1), (2, X2)):
        idx = rng.permutation(X.shape[0])
        cut = int(round(spec.train_fraction * X.shape[0]))
        for name, sel in (("train", idx[:cut]), ("test", idx[cut:])):
            parts[name][0].append(X[sel])
            parts[name][1].append(np.full(sel.size, label))
    return [np.concatenate(parts[k][j]) for k in ("train", "test") for j in (0, 1)]


def _kappa(spec, replication):
    lo, hi = NOISE_KAPPA[spec.noise]
    return float(spec.rng(replication, "kappa").uniform(lo, hi))


def generate_scenario1(spec, replication):
    """Two-class vMF data for one replication of a scenario-1 cell."""
    if spec.family != "vmf":
        raise ValueError("scenario 1 uses the vMF family")
    rules, centers = _draw_centers(spec, replication)
    kappa = _kappa(spec, replication)
    frac, n1, n2 = _sizes(spec, replication)
    if spec.setup == 1:
        mix1 = MixtureSpec([(1.0, VmfParams(centers[0], kappa))])
        mix2 = MixtureSpec([(1.0, VmfParams(centers[1], kappa))])
    else:
        mix1 = MixtureSpec([(0.5, VmfParams(centers[0], kappa)), (0.5, VmfParams(centers[1], kappa))])
        mix2 = MixtureSpec([(0.5, VmfParams(centers[2], kappa)), (0.5, VmfParams(centers[3], kappa))])
    X1, c1 = sample_mixture(mix1, n1, spec.rng(replication, "class1"), return_components=True)
    X2, c2 = sample_mixture(mix2, n2, spec.rng(replication, "class2"), return_components=True)
    Xtr, ytr, Xte, yte = _split(X1, X2, spec, replication)
    return SimulatedData(Xtr, ytr, Xte, yte, centers, kappa, frac, {1: c1, 2: c2})


def generate_scenario2(spec, replication):
    """Two-class Watson data for one replication of a scenario-2 cell.

    Setup 1: both bipolar; setup 2: both girdle; setup 3: class 1 bipolar,
    class 2 girdle.
    """
    if spec.family != "watson":
        raise ValueError("scenario 2 uses the Watson family")
    _, centers = _draw_centers(spec, replication)
    kappa = _kappa(spec, replication)
    signs = {1: (1.0, 1.0), 2: (-1.0, -1.0), 3: (1.0, -1.0)}[spec.setup]
    frac, n1, n2 = _sizes(spec, replication)
    X1 = sample_params(WatsonParams(centers[0], signs[0] * kappa), n1, spec.rng(replication, "class1"))
    X2 = sample_params(WatsonParams(centers[1], signs[1] * kappa), n2, spec.rng(replication, "class2"))
    Xtr, ytr, Xte, yte = _split(X1, X2, spec, replication)
    return SimulatedData(Xtr, ytr, Xte, yte, centers, kappa, frac)


def generate(spec, replication):
    if spec.family == "vmf":
        return generate_scenario1(spec, replication)
    return generate_scenario2(spec, replication)


class CellError(RuntimeError):
    """A replication failed; the original exception is ``__cause__``."""


@dataclass
class CellResult:
    """Per-replication test misclassification rates of every method."""

    spec: ScenarioSpec
    rates: np.ndarray  # shape (replications, len(spec.methods))
    kappas: np.ndarray

    def __post_init__(self):
        if self.rates.shape != (self.spec.replications, len(self.spec.methods)):
            raise ValueError(f"rates shape {self.rates.shape} does not match replications x methods")
        if np.any((self.rates < 0) | (self.rates > 1)):
            raise ValueError("misclassification rates must lie in [0, 1]")

    def mean(self, method, beta):
        return float(self.rates[:, self.spec.methods.index((method, float(beta)))].mean())

    @property
    def cdd_mean(self):
        return self.mean("CDD", 1.0)

    def lcdd_means(self):
        return {b: self.mean("LCDD", b) for b in self.spec.beta_grid}

    @property
    def best_lcdd_mean(self):
        return min(self.lcdd_means().values())


def _replicate(spec, replication):
    data = generate(spec, replication)
    betas = [b for _, b in spec.methods]
    preds, _ = fit_predict_betas(
        data.X_train, data.y_train, data.X_test, betas, degrees=spec.degrees, random_state=(spec.master_seed, replication)
    )
    return [misclassification_rate(data.y_test, p) for p in preds], data.kappa


def run_cell(spec, n_jobs=1):
    """Run every replication of a cell; deterministic given the spec."""
    try:
        out = Parallel(n_jobs=n_jobs)(delayed(_replicate)(spec, r) for r in range(spec.replications))
    except Exception as exc:
        raise CellError(f"cell {spec.key} failed: {exc}") from exc
    rates = np.array([r for r, _ in out])
    kappas = np.array([k for _, k in out])
    return CellResult(spec, rates, kappas)


def aggregate(results):
    """Long table with one row per (cell, method, replication)."""
    if not results:
        raise DataError("nothing to aggregate")
    rows = []
    for res in results:
        s = res.spec
        for m, (method, beta) in enumerate(s.methods):
            for r in range(s.replications):
                rows.append((s.scenario, s.family, s.setup, s.q, s.noise, method, beta, r, float(res.rates[r, m])))
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def summarize(table):
    """Mean, sd and quartiles of the rate per cell and method."""
    keys = [c for c in RESULT_COLUMNS if c not in ("replication", "mr")]
    g = table.groupby(keys, sort=False)["mr"]
    out = g.agg(["count", "mean", "std"]).reset_index()
    for p, name in ((0.25, "q1"), (0.5, "median"), (0.75, "q3")):
        out[name] = g.quantile(p).values
    return out


def write_results(results, out_dir, version=None):
    """Write ``results.csv``, ``summary.csv`` and ``manifest.json`` atomically."""
    from . import __version__
    from .io import atomic_write_text

    os.makedirs(out_dir, exist_ok=True)
    table = aggregate(results)
    atomic_write_text(os.path.join(out_dir, "results.csv"), table.to_csv(index=False, float_format="%.17g"))
    atomic_write_text(os.path.join(out_dir, "summary.csv"), summarize(table).to_csv(index=False, float_format="%.17g"))
    manifest = {
        "schema": "lcdd.simulation-manifest",
        "schema_version": 1,
        "code_version": version or __version__,
        "prng": "numpy PCG64 via SeedSequence(master_seed, spawn_key=(crc32(cell key), replication, crc32(role)))",
        "columns": RESULT_COLUMNS,
        "cells": [dict(asdict(r.spec), key=r.spec.key, kappas=r.kappas.tolist()) for r in results],
    }
    atomic_write_text(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2))
    return table
