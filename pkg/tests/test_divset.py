"""Divergence-set construction, overlap counting, and measure."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from weylmax.divset import (
    build_divergence_set,
    from_balls,
    measure,
    overlap_pair_count,
    revalidate_members,
)
from weylmax.errors import InputError
from weylmax.numtheory import lattice_pair_count
from weylmax.poly import family_diagonal

P_SQ = family_diagonal(1, 2)
P_CUBE = family_diagonal(1, 3)


def _brute_overlap_pairs(x):
    """O(J^2) oracle: torus sup-distance of all center pairs."""
    balls = x.ball_list()
    count = 0
    tau = 2.0 * x.rho / x.N
    for i in range(len(balls)):
        qi, bi = balls[i]
        for j in range(i, len(balls)):
            qj, bj = balls[j]
            ok = True
            for ci, cj in zip(bi, bj):
                dist = abs(ci / qi - cj / qj)
                if min(dist, 1.0 - dist) > tau:
                    ok = False
                    break
            if ok:
                count += 1
    return count


def test_build_n4096_band_and_count():
    x = build_divergence_set(P_SQ, 4096)
    assert x.Q == 64
    assert x.primes == [67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127]
    assert x.ball_count == sum(x.primes) == 1219
    for q in x.primes:
        assert x.good_sets[q].density == 1.0


def test_build_ball_count_floor():
    x = build_divergence_set(P_CUBE, 2048)
    floor = (1 - 0.25) / 4 * sum(q for q in x.primes)
    assert x.ball_count >= floor


def test_centers_in_lowest_terms():
    x = build_divergence_set(P_SQ, 1024)
    centers = set()
    nonzero = 0
    for q, b in x.ball_list():
        if b[0] != 0:
            nonzero += 1
            centers.add(Fraction(b[0], q))
    assert len(centers) == nonzero


def test_build_too_small_rejected():
    with pytest.raises(InputError):
        build_divergence_set(P_SQ, 32)


def test_overlap_matches_bruteforce_small():
    for n in (1024, 2048):
        x = build_divergence_set(P_SQ, n)
        assert overlap_pair_count(x) == _brute_overlap_pairs(x)


def test_overlap_matches_bruteforce_cubic():
    x = build_divergence_set(P_CUBE, 1024)
    assert overlap_pair_count(x) == _brute_overlap_pairs(x)


def test_overlap_two_disjoint_singletons():
    x = from_balls(N=1024, d=1, rho=1 / 32, c=0.5, Q=32, balls=[(37, (5,)), (41, (11,))])
    assert overlap_pair_count(x) == 2


def test_overlap_same_center_counts_pair():
    # centers 0/37 and 0/41 coincide on the torus
    x = from_balls(N=1024, d=1, rho=1 / 32, c=0.5, Q=32, balls=[(37, (0,)), (41, (0,))])
    assert overlap_pair_count(x) == 3


def test_overlap_permutation_invariant():
    x = build_divergence_set(P_SQ, 1024)
    balls = x.ball_list()
    shuffled = from_balls(N=x.N, d=1, rho=x.rho, c=x.c, Q=x.Q, balls=list(reversed(balls)))
    assert overlap_pair_count(x) == overlap_pair_count(shuffled)


def test_overlap_bounded_by_constant_multiple():
    for n in (2**10, 2**12, 2**14):
        x = build_divergence_set(P_SQ, n)
        assert overlap_pair_count(x) <= 4 * x.ball_count


def test_same_q_offsets_give_self_pairs_only():
    # 2*rho*q/N < 1 across the band forces b = b'
    x = build_divergence_set(P_SQ, 4096)
    for q in x.primes:
        assert 2 * x.rho * q / x.N < 1
    zero_ball_pairs = math.comb(len(x.primes), 2)
    assert overlap_pair_count(x) == x.ball_count + zero_ball_pairs


def test_lattice_lemma_consistency_on_band():
    x = build_divergence_set(P_SQ, 4096)
    for q, qp in itertools.combinations(x.primes, 2):
        a = 4 * x.rho * q * qp / x.N
        assert lattice_pair_count(q, qp, a) <= 2 * a


def test_measure_single_ball():
    x = from_balls(N=1024, d=1, rho=1 / 32, c=0.5, Q=32, balls=[(37, (5,))])
    res = measure(x, "exact")
    assert res.estimate == pytest.approx(2 * (1 / 32) / 1024, abs=1e-18)


def test_measure_wrapping_ball():
    x = from_balls(N=1024, d=1, rho=1 / 32, c=0.5, Q=32, balls=[(37, (0,))])
    res = measure(x, "exact")
    assert res.estimate == pytest.approx(2 * (1 / 32) / 1024, abs=1e-18)


def test_measure_two_disjoint_balls_add():
    x = from_balls(N=1024, d=1, rho=1 / 32, c=0.5, Q=32, balls=[(37, (5,)), (41, (11,))])
    res = measure(x, "exact")
    assert res.estimate == pytest.approx(4 * (1 / 32) / 1024, rel=1e-12)


def test_measure_bounds_bracket_exact():
    for n in (1024, 4096, 16384):
        x = build_divergence_set(P_SQ, n)
        res = measure(x, "exact")
        assert res.lower_bound <= res.estimate <= res.upper_bound * (1 + 1e-12)


def test_measure_exact_rejects_d2():
    x = from_balls(N=1024, d=2, rho=1 / 32, c=0.5, Q=101, balls=[(103, (5, 6))])
    with pytest.raises(InputError):
        measure(x, "exact")


def test_montecarlo_agrees_with_exact_within_4_sigma():
    x = build_divergence_set(P_SQ, 1024)
    truth = measure(x, "exact").estimate
    for seed in (0, 1, 2):
        mc = measure(x, "montecarlo", samples=100_000, seed=seed)
        assert abs(mc.estimate - truth) <= 4 * mc.error
    low = measure(x, "montecarlo", samples=5_000, seed=0)
    assert low.low_samples


def test_montecarlo_d2_against_disjoint_sum():
    # a handful of well separated d=2 cubes: estimate ~ J * (2 rho / N)^2
    balls = [(103, (5, 6)), (103, (50, 70)), (107, (20, 90))]
    x = from_balls(N=1024, d=2, rho=4.0, c=0.5, Q=101, balls=balls)
    res = measure(x, "montecarlo", samples=200_000, seed=5)
    expect = 3 * (8.0 / 1024) ** 2
    assert abs(res.estimate - expect) <= 4 * res.error + 1e-12
    assert res.upper_bound == pytest.approx(expect, rel=1e-12)


def test_revalidate_sample_of_centers():
    x = build_divergence_set(P_CUBE, 1024)
    assert revalidate_members(x, fraction=0.02, seed=1) >= 1


def test_revalidate_catches_bad_ball():
    good = build_divergence_set(P_CUBE, 1024)
    outside = None
    for q in good.primes:
        members = {b for (b,) in map(tuple, good.balls_by_q[q])}
        rest = sorted(set(range(q)) - members)
        if rest:
            outside = (q, rest[0])
            break
    assert outside is not None, "every good set is full; cannot build a bad ball"
    bad = from_balls(
        N=good.N, d=1, rho=good.rho, c=good.c, Q=good.Q,
        balls=[(outside[0], (outside[1],))], polynomial=P_CUBE,
    )
    with pytest.raises(InputError):
        revalidate_members(bad, fraction=1.0, seed=0)
