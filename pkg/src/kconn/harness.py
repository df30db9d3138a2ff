"""Threshold sweeps, bound-verification suites and their persistence."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .connectivity import is_k_edge_connected, is_k_vertex_connected
from .graph_gen import ModelParams, UnionGraph, generate
from .model_spec import (
    JointDistribution,
    MomentReport,
    ThresholdQuantities,
    check_moment_inequalities,
    load_distribution,
    moments,
)
from .rng import GENERATOR_ID, derive_seed
from .stats import MCEstimate, estimate_qrs, property_D_count
from .theory import (
    NotSolvableError,
    hat_qrs_bound,
    lambda_star,
    predicted_expected_ND,
    qrs_bound_sr1,
    qrs_bound_sr2,
    solve_m,
)

__all__ = [
    "ConfigError",
    "PreconditionError",
    "SweepConfig",
    "SweepRow",
    "CSV_COLUMNS",
    "run_sweep",
    "write_csv",
    "theorem_preconditions",
    "wilson_interval",
    "BoundCell",
    "BoundsConfig",
    "BoundsReport",
    "verify_bounds",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "c_target", "m_solved", "lambda_exact", "lambda_star_exact", "trials",
    "frac_vertex_k", "frac_edge_k", "frac_min_deg_ge_k", "ci_low", "ci_high",
    "mean_N_km1", "mean_ND_km1", "predicted_EN", "seed",
)
CHECK_NAMES = ("vertex_k", "edge_k", "min_degree", "N_counts", "property_D")


class ConfigError(ValueError):
    pass


class PreconditionError(ConfigError):
    """A hypothesis of the threshold theorem fails for the configured law."""


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = sps.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("KCONN_THREADS", "1")))
    except ValueError:
        return 1


def _resolve_dist(ref: Any, base: Path | None) -> JointDistribution:
    if isinstance(ref, JointDistribution):
        return ref
    if isinstance(ref, Mapping):
        return JointDistribution.from_json(ref)
    if isinstance(ref, (str, os.PathLike)):
        p = Path(ref)
        if base is not None and not p.is_absolute():
            p = base / p
        return load_distribution(p)
    raise ConfigError(f"cannot interpret distribution reference {ref!r}")


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepConfig:
    dist: Any
    n: int
    k: int
    lambda_targets: list[float]
    trials_per_point: int = 100
    seed: int = 0
    checks: dict[str, bool] = field(default_factory=lambda: {c: True for c in CHECK_NAMES})

    def __post_init__(self):
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point must be >= 1")
        if not self.lambda_targets:
            raise ConfigError("lambda_targets must be nonempty")
        if self.k < 1 or self.n < self.k + 1:
            raise ConfigError("need k >= 1 and n >= k + 1")
        unknown = set(self.checks) - set(CHECK_NAMES)
        if unknown:
            raise ConfigError(f"unknown checks {sorted(unknown)}")
        self.checks = {c: bool(self.checks.get(c, False)) for c in CHECK_NAMES}
        self._base: Path | None = None

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], base: Path | None = None) -> "SweepConfig":
        fields = ("dist", "n", "k", "lambda_targets", "trials_per_point", "seed", "checks")
        extra = set(obj) - set(fields)
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        try:
            cfg = cls(**{f: obj[f] for f in fields if f in obj})
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg._base = base
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SweepConfig":
        path = Path(path)
        with open(path) as fh:
            return cls.from_json(json.load(fh), base=path.parent)

    def distribution(self) -> JointDistribution:
        return _resolve_dist(self.dist, self._base)


@dataclass
class SweepRow:
    c_target: float
    m_solved: int | None
    lambda_exact: float
    lambda_star_exact: float
    trials: int
    frac_vertex_k: float
    frac_edge_k: float
    frac_min_deg_ge_k: float
    ci_low: float
    ci_high: float
    mean_N_km1: float
    mean_ND_km1: float
    predicted_EN: float
    seed: int
    se_ND_km1: float = math.nan
    m_over_n_ln_n: float = math.nan
    menger_violations: int = 0

    @property
    def solved(self) -> bool:
        return self.m_solved is not None

    def csv_values(self) -> list[str]:
        out = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def theorem_preconditions(tq: ThresholdQuantities, k: int) -> list[str]:
    """Failed hypotheses as human-readable messages; empty when all hold."""
    bad = []
    if not tq.alpha > 0:
        bad.append(f"alpha = E(Q 1{{X>=2}}) must be > 0 (got {tq.alpha})")
    if not tq.tau_star > 0:
        bad.append(f"tau* = E((X)_2 Q (1-Q)^(X-2)) must be > 0 (got {tq.tau_star})")
    for j in range(2, max(k, 2) + 1):
        if not math.isfinite(tq.eta.get(j, math.inf)):
            bad.append(f"eta_{j} = E(X^{j} Q^{j - 1}) must be finite")
    if not math.isfinite(tq.mu):
        bad.append("mu = E(X h(X,Q) ln(1+X)) must be finite")
    if not math.isfinite(tq.mu_prime):
        bad.append("mu' = E(X min(1, XQ) ln(1+X)) must be finite")
    return bad


@dataclass
class _TrialResult:
    vertex_k: bool
    edge_k: bool
    min_deg_ok: bool
    n_km1: int
    nd_km1: int


def _run_trial(params: ModelParams, dist: JointDistribution, seed: int, checks: dict[str, bool]) -> _TrialResult:
    g = generate(params, dist, seed)
    k = params.k
    deg = g.degrees
    vk = bool(is_k_vertex_connected(g, k)) if checks["vertex_k"] else False
    ek = bool(is_k_edge_connected(g, k)) if checks["edge_k"] else False
    n_km1 = int(np.count_nonzero(deg == k - 1)) if checks["N_counts"] else 0
    nd = property_D_count(g, k).count if checks["property_D"] else 0
    return _TrialResult(vk, ek, bool(deg.min() >= k), n_km1, nd)


def run_sweep(config: SweepConfig, progress: Callable[[str], None] | None = None) -> list[SweepRow]:
    dist = config.distribution()
    n, k = config.n, config.k
    tq = moments(dist, n, k_max=max(k, 2))
    failed = theorem_preconditions(tq, k)
    if failed:
        raise PreconditionError("refusing sweep: " + "; ".join(failed))
    targets = sorted((float(c) for c in config.lambda_targets), reverse=True)
    rows = []
    workers = worker_count()
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for point, c in enumerate(targets):
            try:
                m = solve_m(n, k, tq.kappa_n, c)
            except NotSolvableError as exc:
                log.warning("lambda target %s unsolvable: %s", c, exc)
                rows.append(_unsolved_row(c, config))
                continue
            params = ModelParams(n, m, k)
            seeds = [derive_seed(config.seed, point, t) for t in range(config.trials_per_point)]
            if pool is None:
                results = [_run_trial(params, dist, s, config.checks) for s in seeds]
            else:
                results = list(pool.map(lambda s: _run_trial(params, dist, s, config.checks), seeds))
            rows.append(_summarise(c, m, n, k, tq, results, config))
            if progress:
                progress(f"c={c:+g} m={m}: vertex_k={rows[-1].frac_vertex_k:.3f}")
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def _unsolved_row(c: float, config: SweepConfig) -> SweepRow:
    nan = math.nan
    return SweepRow(c, None, nan, nan, 0, nan, nan, nan, nan, nan, nan, nan, nan, config.seed)


def _summarise(c, m, n, k, tq, results: Sequence[_TrialResult], config: SweepConfig) -> SweepRow:
    trials = len(results)
    nv = sum(r.vertex_k for r in results)
    ne = sum(r.edge_k for r in results)
    nmd = sum(r.min_deg_ok for r in results)
    lo, hi = wilson_interval(nv, trials)
    nd = np.array([r.nd_km1 for r in results], dtype=np.float64)
    menger = sum(1 for r in results if r.vertex_k and not r.edge_k) if (
        config.checks["vertex_k"] and config.checks["edge_k"]) else 0
    nan = math.nan
    return SweepRow(
        c_target=c,
        m_solved=m,
        lambda_exact=lambda_star(n, m, k, tq.kappa_n),
        lambda_star_exact=lambda_star(n, m, k, tq.kappa_star),
        trials=trials,
        frac_vertex_k=nv / trials if config.checks["vertex_k"] else nan,
        frac_edge_k=ne / trials if config.checks["edge_k"] else nan,
        frac_min_deg_ge_k=nmd / trials,
        ci_low=lo,
        ci_high=hi,
        mean_N_km1=float(np.mean([r.n_km1 for r in results])) if config.checks["N_counts"] else nan,
        mean_ND_km1=float(nd.mean()) if config.checks["property_D"] else nan,
        predicted_EN=predicted_expected_ND(n, m, k, tq.kappa_n, tq.tau_n),
        seed=config.seed,
        se_ND_km1=float(nd.std(ddof=1) / math.sqrt(trials)) if trials > 1 else nan,
        m_over_n_ln_n=m / (n * math.log(n)),
        menger_violations=menger,
    )


def write_csv(rows: Sequence[SweepRow], destination) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_values())
    if hasattr(destination, "write"):
        destination.write(buf.getvalue())
    else:
        Path(destination).write_text(buf.getvalue())


def sweep_metadata(config: SweepConfig) -> dict:
    return {
        "generator": GENERATOR_ID,
        "seed_derivation": "trial seed = SeedSequence([seed, point_index, trial_index]); "
                           "layer i uses substream (trial_seed, i)",
        "n": config.n,
        "k": config.k,
        "lambda_targets": list(config.lambda_targets),
        "trials_per_point": config.trials_per_point,
        "seed": config.seed,
        "checks": config.checks,
    }


# --------------------------------------------------------------------------
# bound verification


DEFAULT_XQ = ((2, 1.0), (5, 0.3), (20, 0.05))


@dataclass
class BoundsConfig:
    dist: Any = None
    n_values: list[int] = field(default_factory=lambda: [200])
    s_values: list[int] = field(default_factory=lambda: [0, 1, 2])
    r_values: list[int] = field(default_factory=lambda: [1, 2, 5, 10, 50])
    xq: list[tuple[int, float]] = field(default_factory=lambda: list(DEFAULT_XQ))
    trials: int = 100_000
    seed: int = 0
    hat_n_values: list[int] = field(default_factory=lambda: [2000])
    hat_r_values: list[int] = field(default_factory=lambda: [2, 5, 10])
    hat_s_values: list[int] = field(default_factory=lambda: [1, 2])

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], base: Path | None = None) -> "BoundsConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        kw = dict(obj)
        if "xq" in kw:
            kw["xq"] = [tuple(p) for p in kw["xq"]]
        cfg = cls(**kw)
        if cfg.dist is not None:
            cfg.dist = _resolve_dist(cfg.dist, base)
        return cfg


@dataclass
class BoundCell:
    n: int
    s: int
    r: int
    x: int | None
    q: float | None
    estimate: MCEstimate
    bound: float
    bound_name: str
    passed: bool
    soft: bool = False

    @property
    def margin(self) -> float:
        """How far the estimate sits below bound + 3 SE (negative means violation)."""
        return self.bound + 3.0 * self.estimate.std_error - self.estimate.mean


@dataclass
class BoundsReport:
    moment_checks: dict[int, MomentReport]
    cells: list[BoundCell]
    hat_cells: list[BoundCell]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.moment_checks.values()) and all(c.passed for c in self.cells)

    def to_json(self) -> dict:
        def cell(c: BoundCell):
            d = {k: v for k, v in asdict(c).items() if k != "estimate"}
            d.update(mean=c.estimate.mean, std_error=c.estimate.std_error,
                     trials=c.estimate.trials, margin=c.margin)
            return d

        return {
            "passed": self.passed,
            "moment_inequalities": {str(n): r.to_json() for n, r in self.moment_checks.items()},
            "cells": [cell(c) for c in self.cells],
            "hat_cells": [cell(c) for c in self.hat_cells],
        }

    def to_text(self) -> str:
        lines = ["moment inequalities"]
        for n, rep in self.moment_checks.items():
            lines.append(f"  n={n}")
            lines.extend(f"    {c}" for c in rep.checks)
        lines.append("single-layer bounds (estimate <= min(sr1, sr2) + 3 SE)")
        lines.append(f"  {'n':>5} {'s':>2} {'r':>3} {'x':>4} {'q':>5} {'mean':>9} {'bound':>9} {'margin':>9}")
        for c in self.cells:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"  {c.n:>5} {c.s:>2} {c.r:>3} {c.x:>4} {c.q:>5.2f} {c.estimate.mean:>9.5f} "
                         f"{c.bound:>9.5f} {c.margin:>9.5f} {mark}")
        if self.hat_cells:
            lines.append("averaged bound (asymptotic only; informational)")
            for c in self.hat_cells:
                mark = "ok" if c.passed else "above"
                lines.append(f"  {c.n:>5} {c.s:>2} {c.r:>3} {c.estimate.mean:>9.5f} {c.bound:>9.5f} "
                             f"{c.margin:>9.5f} {mark}")
        lines.append("RESULT: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _sr_min(n, s, r, x, q):
    return min(qrs_bound_sr1(n, s, r, q), qrs_bound_sr2(n, s, r, x, q).value)


def verify_bounds(config: BoundsConfig,
                  bound_fn: Callable[[int, int, int, int, float], float] = _sr_min) -> BoundsReport:
    """Moment inequalities plus Monte Carlo checks of the single-layer bounds.

    ``bound_fn(n, s, r, x, q)`` supplies the bound each cell is tested against.
    """
    dist = _resolve_dist(config.dist, None) if config.dist is not None else JointDistribution.point_mass(2, 1.0)
    ns = sorted(set(config.n_values) | set(config.hat_n_values))
    mom = {n: check_moment_inequalities(moments(dist, n, 2), dist) for n in ns}
    cells = []
    for n in config.n_values:
        for s in config.s_values:
            for r in config.r_values:
                if 2 * r > n - s:
                    continue
                for x, q in config.xq:
                    if not 2 <= x <= n:
                        continue
                    seed = derive_seed(config.seed, n, s, r, x, int(round(q * 1e9)))
                    est = estimate_qrs((x, q), n, s, r, config.trials, seed)
                    b = bound_fn(n, s, r, x, q)
                    ok = est.mean <= b + 3.0 * est.std_error
                    cells.append(BoundCell(n, s, r, x, q, est, b, "min(sr1,sr2)", ok))
    hat_cells = []
    for n in config.hat_n_values:
        tq = moments(dist, n, 2)
        for s in config.hat_s_values:
            for r in config.hat_r_values:
                if 2 * r > n - s or s < 1 or r < 2:
                    continue
                seed = derive_seed(config.seed, 1, n, s, r)
                est = estimate_qrs(dist, n, s, r, config.trials, seed)
                b = hat_qrs_bound(n, s, r, tq.kappa_star, tq.mu).value
                ok = est.mean <= b + 3.0 * est.std_error
                hat_cells.append(BoundCell(n, s, r, None, None, est, b, "hat", ok, soft=True))
    return BoundsReport(mom, cells, hat_cells)
