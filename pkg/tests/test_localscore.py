import math

import numpy as np
import pytest

from percolab.localscore import (Event, classify_e3, local_score, local_scores, localized_total,
                                 make_window, window_half_edge)
from percolab.oracle import naive_localized_total
from percolab.pointproc import Box, PointSet, derive_stream, sample_poisson

from conftest import pointset


def theta_for_half_edge(h, n, m=2):
    return h ** (m - 1) / math.log(n)


# box side 10, window half-edge 0.9
N10 = 10.0
TH09 = theta_for_half_edge(0.9, N10)
X = (0.0, 0.0)
D, E = (-0.8, -0.8), (-0.85, -0.55)   # a pair inside x's window, not joined to x


def test_half_edge_formula():
    assert window_half_edge(1.0, math.e, 2) == pytest.approx(1.0, rel=1e-15)
    assert window_half_edge(2.0, math.e, 3) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert window_half_edge(TH09, N10, 2) == pytest.approx(0.9, rel=1e-14)


@pytest.mark.parametrize("theta,n,m", [(0.0, 10, 2), (-1.0, 10, 2), (float("nan"), 10, 2),
                                       (1.0, 1.0, 2), (1.0, 10, 1)])
def test_half_edge_rejects(theta, n, m):
    with pytest.raises(ValueError):
        window_half_edge(theta, n, m)


def test_window_interior():
    w = make_window((0.0, 0.0), 1.0, Box.centered_cube(2, math.e))
    assert w.half_edge == pytest.approx(1.0)
    assert w.edge_length == pytest.approx(2.0)
    assert w.clipped.lower == pytest.approx((-1.0, -1.0))
    assert w.clipped.upper == pytest.approx((1.0, 1.0))


def test_window_clipped_at_corner():
    box = Box.centered_cube(2, 10.0)
    w = make_window((5.0, -5.0), theta_for_half_edge(2.0, 10.0), box)
    assert w.clipped.lower == pytest.approx((3.0, -5.0))
    assert w.clipped.upper == pytest.approx((5.0, -3.0))
    assert w.unclipped.lower == pytest.approx((3.0, -7.0))


def test_large_theta_window_is_whole_box():
    box = Box.centered_cube(3, 8.0)
    w = make_window((1.0, 2.0, -3.0), 1e4, box)
    assert w.clipped == box


def test_make_window_rejects():
    box = Box.centered_cube(2, 10.0)
    with pytest.raises(ValueError):
        make_window((6.0, 0.0), 1.0, box)
    with pytest.raises(ValueError):
        make_window((0.0, 0.0, 0.0), 1.0, box)
    with pytest.raises(ValueError):
        make_window((0.0, 0.0), 0.0, box)
    with pytest.raises(ValueError):
        make_window((0.0, 0.0), 1.0, Box((0.0, 0.0), (1.0, 2.0)))


def test_window_contains_is_closed():
    w = make_window((0.0, 0.0), TH09, Box.centered_cube(2, N10))
    h = w.half_edge
    assert w.contains(np.array([[h, -h], [h + 1e-9, 0.0]])).tolist() == [True, False]


def test_explicit_e1():
    # x-b-c is the unique global largest, but only x is inside x's window
    ps = pointset([X, (0.95, 0.0), (1.9, 0.0), D, E], n=N10)
    s = local_score(0, ps, TH09)
    assert (s.xi, s.xi_prime, s.event, s.e3) == (1, 0, Event.E1, 1)
    assert classify_e3(0, ps, TH09) == 1
    # points d and e see the same window pair and score 1 locally
    assert local_score(3, ps, TH09).event == Event.E2


def test_explicit_e0_window_tie():
    ps = pointset([X, (0.5, 0.0), (1.4, 0.0), D, E], n=N10)
    s = local_score(0, ps, TH09)
    assert (s.xi, s.xi_prime, s.event) == (1, 0, Event.E0)
    assert s.e3 is None


def test_agreement_single_cluster():
    ps = pointset([X, (0.5, 0.0), (0.5, 0.5)], n=N10)
    for i in range(3):
        s = local_score(i, ps, TH09)
        assert (s.xi, s.xi_prime, s.event, s.e3) == (1, 1, Event.AGREE, 0)


def test_global_tie_scores_zero():
    ps = pointset([(-3.0, 0.0), (-2.5, 0.0), (3.0, 0.0), (3.5, 0.0)], n=N10)
    s = local_score(0, ps, TH09)
    assert (s.xi, s.xi_prime, s.event, s.e3) == (0, 1, Event.E2, None)
    rep = localized_total(ps, TH09)
    assert (rep.n_global, rep.n_local, rep.e2_count, rep.e3_count) == (0, 4, 4, 0)


def test_window_split_giant_gives_e1_without_e3():
    # one global cluster that leaves and re-enters x's window [-2, 2]^2
    path = [(0.0, 0.0), (0.9, 0.0), (1.8, 0.0), (2.7, 0.0), (2.7, -0.9), (2.7, -1.8),
            (1.8, -1.8), (0.9, -1.8), (0.0, -1.8), (-0.9, -1.8), (-1.8, -1.8)]
    ps = pointset(path, n=20.0)
    s = local_score(0, ps, theta_for_half_edge(2.0, 20.0))
    assert (s.xi, s.xi_prime, s.event, s.e3) == (1, 0, Event.E1, 0)
    rep = localized_total(ps, theta_for_half_edge(2.0, 20.0))
    assert rep.inclusion_violations >= 1


def test_local_score_index_errors():
    ps = pointset([X])
    with pytest.raises(IndexError):
        local_score(1, ps, 1.0)
    with pytest.raises(TypeError):
        local_scores(np.zeros((2, 2)), 1.0)


def test_empty_configuration():
    rep = localized_total(pointset(np.zeros((0, 2))), 1.0)
    assert rep.n_local == rep.n_global == rep.mismatch_count == 0


def _sample(n, lam, seed, m=2):
    return sample_poisson(Box.centered_cube(m, n), lam, derive_stream(seed, 0))


@pytest.mark.parametrize("m,n", [(2, 12.0), (3, 6.0)])
def test_huge_window_recovers_global_score(m, n):
    ps = _sample(n, 2.0, 3, m)
    theta = (2 * n) ** (m - 1) / math.log(n)
    s = local_scores(ps, theta)
    assert np.array_equal(s.xi, s.xi_prime)
    rep = localized_total(ps, theta)
    assert rep.n_local == rep.n_global and rep.mismatch_count == 0


def test_window_locality():
    ps = _sample(20.0, 2.0, 11)
    theta = theta_for_half_edge(2.5, 20.0)
    i = int(np.argmin(np.abs(ps.points).sum(axis=1)))  # a point near the centre
    before = local_score(i, ps, theta).xi_prime
    far = np.vstack([ps.points, [[9.5, 9.5], [-9.5, 9.0]]])
    after = local_score(i, PointSet(far, ps.box, ps.intensity), theta).xi_prime
    assert before == after


@pytest.mark.parametrize("seed", range(4))
def test_inclusions_on_random_configurations(seed):
    ps = _sample(25.0, 2.0, seed)
    s = local_scores(ps, 1.0)
    ev, e3 = s.event, s.e3
    # E2 is always disconnected from the global giant; E0 is never classified
    assert np.all(e3[ev == Event.E2] != 0)
    assert np.all(e3[ev == Event.E0] == -1)
    assert np.array_equal(s.xi != s.xi_prime, np.isin(ev, [Event.E1, Event.E2]) | ((ev == Event.E0) & (s.xi == 1)))


@pytest.mark.parametrize("n,theta,seed", [(20.0, 0.5, 1), (20.0, 2.0, 2), (30.0, 1.0, 3)])
def test_matches_window_by_window_oracle(n, theta, seed):
    ps = _sample(n, 2.0, seed)
    assert localized_total(ps, theta).n_local == naive_localized_total(ps, theta)


@pytest.mark.slow
def test_matches_oracle_at_n40():
    ps = _sample(40.0, 2.0, 0)
    assert localized_total(ps, 2.0).n_local == naive_localized_total(ps, 2.0)


@pytest.mark.parametrize("m,n,lam,theta", [(2, 30.0, 2.0, 0.7), (2, 30.0, 1.2, 3.0), (3, 9.0, 1.0, 1.5)])
def test_grouped_kernel_matches_per_window_kernel(m, n, lam, theta):
    ps = _sample(n, lam, 5, m)
    ref = local_scores(ps, theta, group_side=0)
    for side in (None, 0.5, 4.0):
        got = local_scores(ps, theta, group_side=side)
        for a, b in zip(vars(ref).values(), vars(got).values()):
            assert np.array_equal(a, b)


def test_mismatch_shrinks_with_theta():
    thetas = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    configs = [_sample(30.0, 2.0, s) for s in range(30)]
    frac = []
    for theta in thetas:
        reps = [localized_total(ps, theta) for ps in configs]
        frac.append(np.mean([rep.n_local != rep.n_global for rep in reps]))
    inversions = sum(b > a for a, b in zip(frac, frac[1:]))
    assert inversions <= 1, frac
    assert frac[0] > frac[-1]
