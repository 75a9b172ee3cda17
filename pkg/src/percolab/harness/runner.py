"""Replication driver, n-ladders and theta calibration."""

from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .. import oracle
from ..clusters import find_clusters, top_clusters
from ..localscore import localized_total
from ..pointproc import Box, PointSet, derive_stream, sample_poisson
from ..stats import RateFit, ScalingCheck, SummarySet, rate_fit, second_largest_scaling, summarize
from .config import ExperimentConfig
from .records import ReplicationRecord

log = logging.getLogger(__name__)

__all__ = [
    "CalibrationRow",
    "LadderResult",
    "OracleMismatch",
    "calibrate_theta",
    "replicate",
    "run_experiment",
    "run_ladder",
    "theta_for",
]


class OracleMismatch(AssertionError):
    """The fast path and the reference implementation disagree."""


def _check_cap(config: ExperimentConfig):
    if config.expected_points > config.point_cap:
        raise ValueError(
            f"expected point count lambda*n^m = {config.expected_points:.3g} exceeds the cap "
            f"{config.point_cap:.3g}; raise point_cap to run anyway")


def sample_replication(config: ExperimentConfig, index: int) -> PointSet:
    return sample_poisson(Box.centered_cube(config.m, config.n), config.lam,
                          derive_stream(config.master_seed, index))


def replicate(config: ExperimentConfig, index: int, points: Optional[PointSet] = None,
              ) -> tuple[ReplicationRecord, PointSet, Optional[int]]:
    """One replication from stream ``index``.

    Returns the record, the sampled configuration and the number of E1/E2
    points whose E3 classification came out 0 (None when not computed).
    """
    t0 = time.perf_counter()
    if points is None:
        points = sample_replication(config, index)
    labeling = find_clusters(points, config.r)
    top = top_clusters(labeling)
    local = {}
    violations = None
    if config.compute_local:
        rep = localized_total(points, config.theta, config.r, labeling)
        local = dict(N_prime=rep.n_local, mismatch_count=rep.mismatch_count, e0_count=rep.e0_count,
                     e1_count=rep.e1_count, e2_count=rep.e2_count)
        if config.compute_e3:
            local["e3_count"] = rep.e3_count
            violations = rep.inclusion_violations
    wall_ms = (time.perf_counter() - t0) * 1e3
    record = ReplicationRecord(
        rep_id=index, stream_index=index, point_count=len(points),
        N=top.largest_size, second_size=top.second_size, global_unique=top.largest_unique,
        wall_ms=wall_ms, **local)
    if config.oracle_check:
        check_against_oracle(config, record, points)
    return record, points, violations


def check_against_oracle(config: ExperimentConfig, record: ReplicationRecord,
                         points: Optional[PointSet] = None) -> None:
    """Recompute N, second_size and N_prime with the quadratic reference code."""
    if points is None:
        points = sample_replication(config, record.stream_index)
    if len(points) != record.point_count:
        raise OracleMismatch(f"rep {record.rep_id}: stream reproduces {len(points)} points, "
                             f"record says {record.point_count}")
    largest, second = oracle.naive_largest(points, config.r, max_points=None)
    if (largest, second) != (record.N, record.second_size):
        raise OracleMismatch(f"rep {record.rep_id}: oracle (N, second) = {(largest, second)}, "
                             f"record has {(record.N, record.second_size)}")
    if record.N_prime is not None:
        n_local = oracle.naive_localized_total(points, config.theta, config.r, max_points=None)
        if n_local != record.N_prime:
            raise OracleMismatch(f"rep {record.rep_id}: oracle N_prime = {n_local}, "
                                 f"record has {record.N_prime}")


def _map(config: ExperimentConfig, fn: Callable[[int], object], indices: Sequence[int]) -> list:
    workers = min(config.workers, max(len(indices), 1))
    if workers == 1:
        return [fn(i) for i in indices]
    # compiled kernels release the GIL; results come back in submission order
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices))


def run_experiment(config: ExperimentConfig, progress: Optional[Callable[[int, int], None]] = None,
                   ) -> list[ReplicationRecord]:
    """Records for replications ``0 .. reps-1``; replication i uses stream i."""
    _check_cap(config)
    done = [0]
    lock = threading.Lock()

    def one(i):
        rec = replicate(config, i)[0]
        if progress is not None:
            with lock:
                done[0] += 1
                progress(done[0], config.reps)
        return rec

    records = _map(config, one, range(config.reps))
    records.sort(key=lambda rec: rec.rep_id)
    return records


def theta_for(base: ExperimentConfig, n: float, rule: str = "fixed", power: float = 1.0) -> float:
    """Theta used at box side ``n``.

    ``fixed`` keeps the base theta; ``log-power`` uses
    ``theta * (ln n) ** power``.
    """
    if rule == "fixed":
        return base.theta
    if rule == "log-power":
        return base.theta * math.log(n) ** power
    raise ValueError(f"unknown theta rule {rule!r} (expected 'fixed' or 'log-power')")


@dataclass
class LadderResult:
    summaries: list[SummarySet]
    records: dict[float, list[ReplicationRecord]]
    configs: dict[float, ExperimentConfig]
    fit_global: Optional[RateFit]
    fit_local: Optional[RateFit]
    scaling: ScalingCheck
    notes: list[str] = field(default_factory=list)


def _fit(summaries, attr, notes):
    pts = [(s.n, getattr(s, attr)) for s in summaries if getattr(s, attr) is not None]
    try:
        return rate_fit(pts)
    except ValueError as exc:
        notes.append(f"{attr}: no rate fit ({exc})")
        return None


def run_ladder(base: ExperimentConfig, n_values: Sequence[float], theta_rule: str = "fixed",
               theta_power: float = 1.0, records: Optional[dict] = None,
               progress: Optional[Callable[[float, int, int], None]] = None) -> LadderResult:
    """Run (or re-summarize, when ``records`` is given) one experiment per n.

    ``records`` maps n to previously produced records and skips simulation
    for those n; this is how stored or synthetic data is fed through the
    same fitting path.
    """
    n_values = sorted({float(n) for n in n_values})
    if len(n_values) < 3:
        raise ValueError(f"a ladder needs at least 3 distinct n values, got {n_values}")
    all_records, configs, summaries, notes = {}, {}, [], []
    for n in n_values:
        cfg = base.replace(n=n, theta=theta_for(base, n, theta_rule, theta_power))
        configs[n] = cfg
        if records is not None and n in records:
            recs = list(records[n])
        else:
            cb = (lambda d, t, _n=n: progress(_n, d, t)) if progress else None
            recs = run_experiment(cfg, cb)
        all_records[n] = recs
        s = summarize(recs, cfg)
        for flag in s.flags:
            if flag.startswith("subcritical"):
                log.warning("n=%g: rho_hat=%.3g is near zero; lambda may be subcritical", n, s.rho_hat)
        summaries.append(s)
    fit_global = _fit(summaries, "dk_global", notes)
    fit_local = _fit(summaries, "dk_local", notes) if base.compute_local else None
    scaling = second_largest_scaling(all_records, base.m)
    return LadderResult(summaries, all_records, configs, fit_global, fit_local, scaling, notes)


@dataclass(frozen=True)
class CalibrationRow:
    theta: float
    half_edge: float
    mismatch_frac: float
    e0_frac: float
    mean_wall_ms: float
    inclusion_violations: int
    digests: tuple[str, ...] = field(repr=False, default=())


def calibrate_theta(config: ExperimentConfig, theta_values: Sequence[float],
                    progress: Optional[Callable[[float, int, int], None]] = None) -> list[CalibrationRow]:
    """Coupling statistics per theta on paired replications.

    Every theta reuses streams ``0 .. reps-1``, so replication i sees the
    same configuration at every theta; each row keeps the configuration
    digests so this can be checked.
    """
    from ..localscore import window_half_edge

    theta_values = [float(t) for t in theta_values]
    if len(theta_values) < 2:
        raise ValueError("calibration needs at least 2 theta values")
    _check_cap(config)
    rows = []
    for theta in theta_values:
        cfg = config.replace(theta=theta, compute_local=True, compute_e3=True)

        def one(i, _cfg=cfg):
            rec, pts, viol = replicate(_cfg, i)
            return rec, pts.digest(), viol

        out = _map(cfg, one, range(cfg.reps))
        recs = [o[0] for o in out]
        rows.append(CalibrationRow(
            theta=theta,
            half_edge=window_half_edge(theta, cfg.n, cfg.m),
            mismatch_frac=sum(r.N_prime != r.N for r in recs) / len(recs),
            e0_frac=sum(r.e0_count > 0 for r in recs) / len(recs),
            mean_wall_ms=sum(r.wall_ms for r in recs) / len(recs),
            inclusion_violations=sum(o[2] for o in out),
            digests=tuple(o[1] for o in out),
        ))
        if progress is not None:
            progress(theta, len(rows), len(theta_values))
    return rows
