"""The divergence set X_N: cubes of half-width rho/N centered at the
rational points b/q, over primes q in the dyadic band [Q, 2Q) with
Q = floor(N^(d/(d+1))) and residues b in the good set of q.

Measure machinery: exact interval union for d = 1, Monte Carlo with
per-prime center snapping for d >= 2, and disjoint-sum / Cauchy-Schwarz
bounds from the exact overlapping-pair count.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .numtheory import close_fraction_pairs, primes_in_band
from .poly import IntPolynomial
from .weyl import GoodSet, good_set_for, weyl_sum_direct

log = logging.getLogger(__name__)


@dataclass
class DivergenceSet:
    N: int
    d: int
    rho: float
    c: float
    Q: int
    balls_by_q: dict[int, np.ndarray]  # q -> (m, d) residue array, lex sorted
    polynomial: IntPolynomial | None = None
    good_sets: dict[int, GoodSet] | None = None
    _member_sets: dict[int, frozenset] = field(default_factory=dict, repr=False)

    @property
    def ball_count(self) -> int:
        return sum(arr.shape[0] for arr in self.balls_by_q.values())

    @property
    def primes(self) -> list[int]:
        return sorted(self.balls_by_q)

    def ball_list(self) -> list[tuple[int, tuple[int, ...]]]:
        """All (q, b) in canonical order: primes ascending, residues lex."""
        out = []
        for q in self.primes:
            for row in self.balls_by_q[q]:
                out.append((q, tuple(int(v) for v in row)))
        return out

    def member_set(self, q: int) -> frozenset:
        if q not in self._member_sets:
            self._member_sets[q] = frozenset(map(tuple, self.balls_by_q[q].tolist()))
        return self._member_sets[q]


@dataclass(frozen=True)
class MeasureResult:
    estimate: float
    error: float
    method: str
    upper_bound: float
    lower_bound: float
    overlap_pairs: int
    samples: int = 0
    low_samples: bool = False


def build_divergence_set(
    poly: IntPolynomial, N: int, c: float = 0.5, rho: float = 1.0 / 32.0
) -> DivergenceSet:
    """Good sets for every admissible band prime, recorded as ball centers."""
    d = poly.dim
    k = poly.degree()
    if k < 2:
        raise InputError(f"symbol degree must be >= 2, got {k}")
    if not 0 < c < 1:
        raise InputError(f"threshold constant must be in (0,1), got {c}")
    if rho <= 0:
        raise InputError(f"radius constant must be positive, got {rho}")
    Q = int(N ** (d / (d + 1)) + 1e-9)
    if Q < 2:
        raise InputError(f"N={N} too small: band start Q={Q}")
    if 2 * Q - 1 >= N / 4:
        raise InputError(f"band [{Q}, {2*Q}) too close to N/4 = {N/4}; increase N")
    band = primes_in_band(Q, 2 * Q)
    admissible = [q for q in band.primes if k % q != 0]
    dropped = sorted(set(band.primes) - set(admissible))
    if dropped:
        log.info("dropping band primes dividing the degree %d: %s", k, dropped)
    if not admissible:
        raise InputError(f"no admissible prime in [{Q}, {2*Q}) for degree {k}")
    balls: dict[int, np.ndarray] = {}
    goods: dict[int, GoodSet] = {}
    for q in admissible:
        gs = good_set_for(poly, q, c, k)
        goods[q] = gs
        balls[q] = gs.members
    return DivergenceSet(
        N=N, d=d, rho=rho, c=c, Q=Q, balls_by_q=balls, polynomial=poly, good_sets=goods
    )


def _same_q_offsets(q: int, tau: float) -> list[int]:
    """Offsets o in [0, q) with circle distance o/q within tau."""
    reach = int(math.floor(tau * q + 1e-12))
    out = {0}
    for o in range(1, reach + 1):
        out.add(o % q)
        out.add(-o % q)
    return sorted(out)


def _encode(arr: np.ndarray, q: int) -> np.ndarray:
    enc = np.zeros(arr.shape[0], dtype=np.int64)
    for i in range(arr.shape[1]):
        enc = enc * q + arr[:, i]
    return enc


def overlap_pair_count(x: DivergenceSet) -> int:
    """Unordered pairs of balls (self-pairs included) whose centers are
    within 2*rho/N per coordinate on the torus.

    Same-prime blocks reduce to residue offsets; cross-prime blocks use
    the line-by-line solver for |b*q' - b'*q| <= 2*rho*q*q'/N, with one
    candidate pair per coordinate per admissible line, multiplied across
    coordinates and filtered by good-set membership.
    """
    tau = 2.0 * x.rho / x.N
    total = 0
    qs = x.primes
    for q in qs:
        arr = x.balls_by_q[q]
        m = arr.shape[0]
        if m == 0:
            continue
        offsets = _same_q_offsets(q, tau)
        if offsets == [0]:
            total += m  # only self-pairs
            continue
        enc_sorted = np.sort(_encode(arr, q))
        ordered = 0
        for combo in itertools.product(offsets, repeat=x.d):
            shifted = (arr + np.array(combo, dtype=np.int64)) % q
            ordered += int(np.isin(_encode(shifted, q), enc_sorted).sum())
        total += (ordered + m) // 2
    for i, q in enumerate(qs):
        set_q = x.member_set(q)
        if not set_q:
            continue
        for qp in qs[i + 1 :]:
            set_qp = x.member_set(qp)
            if not set_qp:
                continue
            candidates = close_fraction_pairs(q, qp, tau * q * qp)
            if not candidates:
                continue
            for combo in itertools.product(candidates, repeat=x.d):
                b = tuple(c[0] for c in combo)
                bp = tuple(c[1] for c in combo)
                if b in set_q and bp in set_qp:
                    total += 1
    return total


def _exact_interval_measure(x: DivergenceSet) -> float:
    r = x.rho / x.N
    if 2 * r >= 1.0:
        return 1.0
    segments = []
    for q in x.primes:
        for b in x.balls_by_q[q][:, 0]:
            lo = (b / q - r) % 1.0
            hi = lo + 2 * r
            if hi <= 1.0:
                segments.append((lo, hi))
            else:
                segments.append((lo, 1.0))
                segments.append((0.0, hi - 1.0))
    if not segments:
        return 0.0
    segments.sort()
    total = 0.0
    cur_lo, cur_hi = segments[0]
    for lo, hi in segments[1:]:
        if lo <= cur_hi:
            cur_hi = max(cur_hi, hi)
        else:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
    total += cur_hi - cur_lo
    return total


_MC_BLOCK = 1 << 16


def _montecarlo_measure(x: DivergenceSet, samples: int, seed) -> tuple[float, float]:
    radius = x.rho / x.N
    enc_members = {q: np.sort(_encode(x.balls_by_q[q], q)) for q in x.primes}
    n_blocks = (samples + _MC_BLOCK - 1) // _MC_BLOCK
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    hits = 0
    done = 0
    for blk in range(n_blocks):
        size = min(_MC_BLOCK, samples - done)
        pts = np.random.default_rng(children[blk]).random((size, x.d))
        hit = np.zeros(size, dtype=bool)
        for q in x.primes:
            if x.balls_by_q[q].shape[0] == 0:
                continue
            jmax = int(math.floor(radius * q + 0.5 + 1e-12))
            nearest = np.rint(pts * q).astype(np.int64)
            for joff in itertools.product(range(-jmax, jmax + 1), repeat=x.d):
                bb = (nearest + np.array(joff, dtype=np.int64)) % q
                dist = np.abs(pts - bb / q)
                dist = np.minimum(dist, 1.0 - dist)
                inside = (dist <= radius).all(axis=1)
                if not inside.any():
                    continue
                member = np.isin(_encode(bb, q), enc_members[q])
                hit |= inside & member
        hits += int(hit.sum())
        done += size
    p = hits / samples
    stderr = math.sqrt(p * (1.0 - p) / samples)
    return p, stderr


def measure(
    x: DivergenceSet,
    method: str = "exact",
    samples: int = 200_000,
    seed=0,
) -> MeasureResult:
    """Lebesgue measure of the ball union, with distribution-free bounds.

    d = 1: exact by sorted interval merge on the circle. d >= 2: Monte
    Carlo hit fraction with binomial standard error. Every result also
    carries the disjoint-sum upper bound J*(2rho/N)^d and the
    Cauchy-Schwarz lower bound J^2*(2rho/N)^d / (ordered overlap count).
    """
    j = x.ball_count
    vol = (2.0 * x.rho / x.N) ** x.d
    pairs = overlap_pair_count(x)
    ordered = 2 * pairs - j
    upper = j * vol
    lower = (j * j * vol / ordered) if ordered > 0 else 0.0
    if method == "exact":
        if x.d != 1:
            raise InputError(f"exact measure supports d = 1 only, got d = {x.d}")
        est = _exact_interval_measure(x)
        return MeasureResult(est, 0.0, "exact", upper, lower, pairs)
    if method != "montecarlo":
        raise InputError(f"unknown measure method {method!r}")
    if samples < 1:
        raise InputError(f"sample count must be positive, got {samples}")
    est, err = _montecarlo_measure(x, samples, seed)
    return MeasureResult(
        est, err, "montecarlo", upper, lower, pairs,
        samples=samples, low_samples=samples < 10_000,
    )


def revalidate_members(x: DivergenceSet, fraction: float = 0.01, seed=0) -> int:
    """Spot-check: recompute fresh Weyl sums for a sample of ball centers
    and confirm each modulus clears the good-set threshold.

    Returns the number of centers checked; raises InputError when the
    set carries no polynomial provenance.
    """
    if x.polynomial is None:
        raise InputError("divergence set has no polynomial attached")
    balls = x.ball_list()
    n = max(1, int(len(balls) * fraction))
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(balls), size=min(n, len(balls)), replace=False)
    for i in idx:
        q, b = balls[int(i)]
        s = weyl_sum_direct(x.polynomial, q, b)
        threshold = x.c * float(q) ** (x.d / 2)
        if abs(s) < threshold * (1 - 1e-9):
            raise InputError(
                f"ball (q={q}, b={b}) fails revalidation: |S| = {abs(s):.6f} < {threshold:.6f}"
            )
    return len(idx)


def from_balls(
    N: int, d: int, rho: float, c: float, Q: int,
    balls: list[tuple[int, tuple[int, ...]]],
    polynomial: IntPolynomial | None = None,
) -> DivergenceSet:
    """Rebuild a DivergenceSet from a stored ball list (CLI read-back)."""
    grouped: dict[int, list] = {}
    for q, b in balls:
        grouped.setdefault(int(q), []).append(tuple(int(v) for v in b))
    by_q = {
        q: np.array(sorted(set(rows)), dtype=np.int64).reshape(len(set(rows)), d)
        for q, rows in grouped.items()
    }
    return DivergenceSet(N=N, d=d, rho=rho, c=c, Q=Q, balls_by_q=by_q, polynomial=polynomial)
