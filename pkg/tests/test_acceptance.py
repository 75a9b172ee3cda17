"""End-to-end acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL verdict (shown in the terminal
summary) before asserting, so a failing criterion still reports its numbers.
Heavy Monte Carlo runs are shared between criteria through module fixtures.
"""

import math
import time

import numpy as np
import pytest

from percolab.clusters import find_clusters, top_clusters
from percolab.harness.config import ExperimentConfig
from percolab.harness.records import emit_csv
from percolab.harness.runner import calibrate_theta, run_experiment, run_ladder
from percolab.localscore import localized_total, window_half_edge
from percolab.oracle import naive_clusters
from percolab.pointproc import Box, derive_stream, sample_poisson
from percolab.stats import summarize

from conftest import pointset, random_instances

pytestmark = pytest.mark.acceptance

SEED = 0x5EED


@pytest.fixture
def verdict(request):
    def record(num, ok, text):
        ok = bool(ok)
        request.config._acceptance[num] = (ok, text)
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")
        assert ok, text
    return record


def inversions(values):
    return sum(b > a for a, b in zip(values, values[1:]))


# shared runs

@pytest.fixture(scope="module")
def ladder500():
    base = ExperimentConfig(m=2, lam=2.0, r=1.0, theta=4.0, reps=500, master_seed=SEED)
    t0 = time.perf_counter()
    res = run_ladder(base, [20.0, 40.0, 80.0])
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def calibration80():
    cfg = ExperimentConfig(m=2, n=80.0, lam=2.0, r=1.0, reps=200, master_seed=SEED)
    t0 = time.perf_counter()
    rows = calibrate_theta(cfg, [0.5, 1.0, 2.0, 4.0])
    return rows, time.perf_counter() - t0


# criteria

def test_c01_oracle_equivalence(verdict):
    instances = random_instances(200, seed=SEED)
    t0 = time.perf_counter()
    bad = sum(find_clusters(ps, 1.0).partition() != naive_clusters(ps, 1.0).as_sets() for ps in instances)
    dt = time.perf_counter() - t0
    dims = {ps.dim for ps in instances}
    verdict(1, bad == 0 and dt < 30 and dims == {2, 3} and max(map(len, instances)) <= 500,
            f"{len(instances)} instances, {bad} partition mismatches, {dt:.1f} s")


def test_c02_boundary_strictness(verdict):
    cases = []
    for m in (2, 3):
        for offset in (0.0, -4.25, 3.5):
            for axis in range(m):
                a = np.full(m, offset)
                b = a.copy()
                b[axis] += 1.0
                c = a.copy()
                c[axis] += 1.0 - 1e-9
                cases.append((a, b, 1.0, False))
                cases.append((a, c, 1.0, True))
    # off-axis: a 3-4-5 triangle at r = 5 has exact squared distance 25
    a, b = np.array([0.0, 0.0]), np.array([3.0, 4.0])
    cases.append((a, b, 5.0, False))
    cases.append((a, a + (b - a) * (1 - 1e-9 / 5.0), 5.0, True))
    wrong = 0
    for p, q, r, joined in cases:
        ps = pointset([p, q], n=20.0)
        wrong += (find_clusters(ps, r).n_components == 1) != joined
    verdict(2, wrong == 0, f"{len(cases)} constructed pairs, {wrong} wrong")


def test_c03_poisson_sampler(verdict):
    box = Box.centered_cube(2, 20.0)
    counts = np.array([len(sample_poisson(box, 1.5, derive_stream(SEED, k))) for k in range(10_000)])
    mean, var = counts.mean(), counts.var(ddof=1)
    se = math.sqrt(600.0 / counts.size)
    ok = abs(mean - 600) <= 4 * se and abs(var - 600) <= 60
    verdict(3, ok, f"mean {mean:.2f} ({(mean - 600) / se:+.2f} SE), variance {var:.1f} ({var / 600 - 1:+.1%})")


def test_c04_degenerate_theta(verdict):
    rng = np.random.default_rng(SEED)
    bad, ties = 0, 0
    for k in range(50):
        m = 2 + k % 2
        n = float(rng.uniform(8, 25) if m == 2 else rng.uniform(5, 9))
        lam = float(rng.choice([1.5, 2.0, 3.0]) if m == 2 else rng.choice([1.0, 1.5]))
        ps = sample_poisson(Box.centered_cube(m, n), lam, derive_stream(SEED, 1000 + k))
        theta = (n * math.sqrt(m)) ** (m - 1) / math.log(n)
        assert window_half_edge(theta, n, m) >= n * math.sqrt(m) * (1 - 1e-12)
        top = top_clusters(find_clusters(ps, 1.0))
        ties += not top.largest_unique
        bad += localized_total(ps, theta).n_local != top.largest_size
    verdict(4, bad == 0, f"50 instances, {bad} with N' != N ({ties} with a tied global largest)")


def test_c05_coupling_quality(verdict, calibration80):
    rows, dt = calibration80
    frac = [r.mismatch_frac for r in rows]
    at4 = rows[-1].mismatch_frac
    ok = at4 <= 0.05 and inversions(frac) <= 1 and dt <= 600
    verdict(5, ok, "mismatch by theta " + ", ".join(f"{r.theta:g}: {r.mismatch_frac:.3f}" for r in rows)
            + f"; {dt:.0f} s")


def test_c06_proof_inclusion(verdict, calibration80):
    rows, _ = calibration80
    total = sum(r.inclusion_violations for r in rows)
    verdict(6, total == 0, "E1/E2 points with classify_e3 = 0 by theta "
            + ", ".join(f"{r.theta:g}: {r.inclusion_violations}" for r in rows))


def _first(res, reps):
    return [summarize(res.records[n][:reps], res.configs[n]) for n in sorted(res.records)]


def test_c07_lln_trend(verdict, ladder500):
    res, _ = ladder500
    ss = _first(res, 300)
    rho = [s.rho_hat for s in ss]
    se = [s.rho_hat_se for s in ss]
    shrinks = all(b < a for a, b in zip(se, se[1:]))
    worst = max(abs(a.rho_hat - b.rho_hat) / math.hypot(a.rho_hat_se, b.rho_hat_se)
                for i, a in enumerate(ss) for b in ss[i + 1:])
    verdict(7, shrinks and worst <= 3, "rho_hat " + ", ".join(f"{r:.4f}+-{e:.4f}" for r, e in zip(rho, se))
            + f"; worst pair {worst:.2f} joint SE")


def test_c08_variance_scaling(verdict, ladder500):
    res, _ = ladder500
    s2 = [s.sigma2_hat for s in _first(res, 300)]
    ratio = max(s2) / min(s2) if min(s2) > 0 else math.inf
    verdict(8, min(s2) > 0 and ratio <= 2, "sigma2_hat " + ", ".join(f"{v:.3f}" for v in s2)
            + f"; max/min {ratio:.2f}")


def test_c09_second_largest_order(verdict):
    base = ExperimentConfig(m=2, lam=2.0, r=1.0, reps=200, master_seed=SEED, compute_local=False)
    res = run_ladder(base, [20.0, 40.0, 80.0, 160.0])
    norm = [v for _, v in res.scaling.ratios]
    frac = [s.second_ratio for s in res.summaries]
    decreasing = all(b < a for a, b in zip(frac, frac[1:]))
    verdict(9, res.scaling.bounded and decreasing,
            "second/(ln n)^2 " + ", ".join(f"{v:.3f}" for v in norm)
            + f" (band {max(norm) / min(norm):.2f}); second/N " + ", ".join(f"{v:.4f}" for v in frac))


def _normality(res, attr):
    dk = [getattr(s, attr) for s in res.summaries]
    fit = res.fit_global if attr == "dk_global" else res.fit_local
    ok = dk[0] <= 0.10 and inversions(dk) <= 1 and fit is not None and fit.slope < 0
    text = f"{attr} " + ", ".join(f"{v:.4f}" for v in dk) + f"; slope {fit.slope:.3f}"
    return ok, text


def test_c10_normality_trend(verdict, ladder500):
    res, dt = ladder500
    ok, text = _normality(res, "dk_global")
    verdict(10, ok and dt <= 1800, f"{text}; ladder {dt:.0f} s")


def test_c11_localized_normality(verdict, ladder500):
    res, _ = ladder500
    ok, text = _normality(res, "dk_local")
    gaps = [abs(s.dk_global - s.dk_local) for s in res.summaries]
    verdict(11, ok and max(gaps) <= 0.03, f"{text}; |gap| " + ", ".join(f"{g:.4f}" for g in gaps))


def test_c12_determinism(verdict):
    cfg = ExperimentConfig(m=2, n=40.0, lam=2.0, theta=2.0, reps=24, master_seed=SEED)
    serial = emit_csv(run_experiment(cfg.replace(parallelism=1)), timing=False)
    others = {p: emit_csv(run_experiment(cfg.replace(parallelism=p)), timing=False) for p in (None, 8)}
    same = all(v == serial for v in others.values())
    verdict(12, same, f"parallelism 1 vs auto and 8: {'identical' if same else 'different'} CSV bytes")


def test_c13_performance(verdict):
    ps = sample_poisson(Box.centered_cube(2, 100.0), 2.0, derive_stream(SEED, 0))
    localized_total(sample_poisson(Box.centered_cube(2, 20.0), 2.0, derive_stream(SEED, 1)), 4.0)  # compile
    glob, loc = [], []
    for _ in range(3):
        t0 = time.perf_counter()
        lab = find_clusters(ps, 1.0)
        top_clusters(lab)
        t1 = time.perf_counter()
        localized_total(ps, 4.0, 1.0, lab)
        t2 = time.perf_counter()
        glob.append(t1 - t0)
        loc.append(t2 - t1)
    g, l = min(glob) * 1e3, min(loc)
    verdict(13, g < 100 and l < 2.0, f"{len(ps)} points: clusters {g:.0f} ms, localized_total {l:.2f} s")
