"""Cross-replication estimators and normal-approximation diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import special

__all__ = [
    "RateFit",
    "ScalingCheck",
    "SummarySet",
    "kolmogorov_distance",
    "normal_cdf",
    "rate_fit",
    "second_largest_scaling",
    "summarize",
]


def normal_cdf(z):
    """Standard normal CDF, ``0.5 * erfc(-z / sqrt(2))``.

    Accepts scalars or arrays; ``-inf``/``inf`` map to 0/1.  Going through
    erfc keeps full relative accuracy in the lower tail.
    """
    out = 0.5 * special.erfc(-np.asarray(z, dtype=np.float64) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def kolmogorov_distance(samples, standardize: bool = True) -> float:
    """Exact ``sup_x |F_R(x) - Phi(x)|`` for the empirical CDF ``F_R`` of ``samples``.

    The supremum is attained at a jump of the ECDF, so it is the larger of
    ``i/R - Phi(x_(i))`` and ``Phi(x_(i)) - (i-1)/R`` over the order
    statistics.  With ``standardize`` the samples are first centred by the
    sample mean and scaled by the sample standard deviation (divisor R-1);
    the result is then a Lilliefors-type distance, not a test statistic with
    Kolmogorov's null distribution.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    if standardize:
        mean = x.mean()
        sd = x.std(ddof=1)
        if not sd > 0:
            raise ValueError("zero sample variance: cannot standardize")
        x = (x - mean) / sd
    x = np.sort(x)
    cdf = normal_cdf(x)
    k = np.arange(1, x.size + 1, dtype=np.float64)
    upper = k / x.size - cdf
    lower = cdf - (k - 1) / x.size
    return float(max(upper.max(), lower.max(), 0.0))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _var_se(x: np.ndarray) -> tuple[float, float]:
    # Var(s^2) ~ (mu4 - sigma^4 (R-3)/(R-1)) / R with plug-in central moments
    R = x.size
    var = float(x.var(ddof=1))
    c = x - x.mean()
    mu4 = float(np.mean(c**4))
    s4 = float(np.mean(c**2)) ** 2
    v = (mu4 - s4 * (R - 3) / (R - 1)) / R
    return var, math.sqrt(max(v, 0.0))


@dataclass(frozen=True)
class SummarySet:
    """Estimators over the replications of one configuration.

    ``dk_global``/``dk_local`` are None when the statistic has zero sample
    variance (or was not computed); ``flags`` says which.  Standard errors
    are plug-in; the Kolmogorov distances carry none.
    """

    n: float
    m: int
    lam: float
    reps: int
    mean_N: float
    mean_N_se: float
    var_N: float
    var_N_se: float
    sigma2_hat: float
    sigma2_hat_se: float
    rho_hat: float
    rho_hat_se: float
    dk_global: Optional[float]
    second_mean: float
    second_mean_se: float
    second_ratio: float  # mean of second_size / N over replications with N > 0
    dk_local: Optional[float] = None
    mean_N_prime: Optional[float] = None
    var_N_prime: Optional[float] = None
    mismatch_frac: Optional[float] = None
    mismatch_frac_se: Optional[float] = None
    e0_frac: Optional[float] = None
    mean_abs_gap: Optional[float] = None
    mean_wall_ms: float = 0.0
    flags: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["flags"] = list(self.flags)
        return d


def _field(records, name):
    return np.asarray([getattr(rec, name) for rec in records], dtype=np.float64)


def summarize(records: Sequence, config) -> SummarySet:
    """Summarize ReplicationRecords produced under ``config``.

    Records are put in ``rep_id`` order first, so the result does not
    depend on the order they are passed in.
    """
    records = sorted(records, key=lambda rec: rec.rep_id)
    R = len(records)
    if R < 2:
        raise ValueError(f"need at least 2 replication records, got {R}")
    scale = float(config.n) ** config.m
    N = _field(records, "N")
    second = _field(records, "second_size")
    flags = []

    mean_N, mean_se = _mean_se(N)
    var_N, var_se = _var_se(N)
    try:
        dk_global = kolmogorov_distance(N, standardize=True)
    except ValueError:
        dk_global = None
        flags.append("dk_global:zero-variance")
    second_mean, second_se = _mean_se(second)
    nz = N > 0
    second_ratio = float(np.mean(second[nz] / N[nz])) if nz.any() else 0.0

    local = {}
    if all(rec.N_prime is not None for rec in records):
        Np = _field(records, "N_prime")
        mis = (Np != N).astype(np.float64)
        p = float(mis.mean())
        local = dict(
            mean_N_prime=float(Np.mean()),
            var_N_prime=float(Np.var(ddof=1)),
            mismatch_frac=p,
            mismatch_frac_se=math.sqrt(p * (1 - p) / R),
            e0_frac=float(np.mean(_field(records, "e0_count") > 0)),
            mean_abs_gap=float(np.mean(np.abs(Np - N))),
        )
        try:
            local["dk_local"] = kolmogorov_distance(Np, standardize=True)
        except ValueError:
            flags.append("dk_local:zero-variance")

    rho = mean_N / scale
    if rho < 0.01 * config.lam:
        flags.append("subcritical-symptom:rho_hat-near-zero")
    return SummarySet(
        n=float(config.n), m=int(config.m), lam=float(config.lam), reps=R,
        mean_N=mean_N, mean_N_se=mean_se,
        var_N=var_N, var_N_se=var_se,
        sigma2_hat=var_N / scale, sigma2_hat_se=var_se / scale,
        rho_hat=rho, rho_hat_se=mean_se / scale,
        dk_global=dk_global,
        second_mean=second_mean, second_mean_se=second_se, second_ratio=second_ratio,
        mean_wall_ms=float(np.mean(_field(records, "wall_ms"))),
        flags=tuple(flags),
        **local,
    )


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through ``(ln n, ln dk)``."""

    slope: float
    intercept: float
    r2: float
    points: tuple[tuple[float, float], ...]

    def predict(self, n) -> np.ndarray:
        return np.exp(self.intercept + self.slope * np.log(np.asarray(n, dtype=float)))


def rate_fit(points: Iterable[tuple[float, float]]) -> RateFit:
    pts = [(float(n), float(dk)) for n, dk in points]
    if len(pts) < 3:
        raise ValueError(f"rate fit needs at least 3 points, got {len(pts)}")
    if len({n for n, _ in pts}) < 3:
        raise ValueError("rate fit needs at least 3 distinct n values")
    if any(dk <= 0 or n <= 0 for n, dk in pts):
        raise ValueError("rate fit needs positive n and dk")
    x = np.log([n for n, _ in pts])
    y = np.log([dk for _, dk in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    slope = sxy / sxx
    intercept = float(ym - slope * xm)
    r2 = 1.0 if syy == 0 else min(1.0, max(0.0, sxy * sxy / (sxx * syy)))
    return RateFit(slope, intercept, r2, tuple(zip(x.tolist(), y.tolist())))


@dataclass(frozen=True)
class ScalingCheck:
    ratios: tuple[tuple[float, float], ...]  # (n, mean second / (ln n)^{m/(m-1)})
    bounded: bool
    band: float = 4.0


def second_largest_scaling(groups: Mapping[float, Sequence], m: int, band: float = 4.0) -> ScalingCheck:
    """Normalize mean second-largest sizes by ``(ln n)^{m/(m-1)}``.

    ``groups`` maps n to either ReplicationRecords or plain second-largest
    sizes.  ``bounded`` is True when max/min of the normalized means is at
    most ``band``.
    """
    if len(groups) < 2:
        raise ValueError("need at least two values of n")
    if m < 2:
        raise ValueError(f"dimension must be >= 2, got {m}")
    ratios = []
    for n in sorted(groups):
        if not n > 1:
            raise ValueError(f"n must exceed 1, got {n}")
        vals = [getattr(v, "second_size", v) for v in groups[n]]
        if not vals:
            raise ValueError(f"no records for n = {n}")
        ratios.append((float(n), float(np.mean(vals)) / math.log(n) ** (m / (m - 1))))
    vals = [v for _, v in ratios]
    lo, hi = min(vals), max(vals)
    bounded = lo > 0 and hi / lo <= band
    return ScalingCheck(tuple(ratios), bool(bounded), band)
