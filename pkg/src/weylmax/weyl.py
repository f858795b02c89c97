"""Complete exponential sums S(b) = sum_r e((P(r) + b.r)/q) over F_q^d.

Tables are built either by exact-phase direct contraction or by FFT;
the two paths must agree, and every table is checked against the
Parseval identity sum_b |S(b)|^2 = q^(2d) before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .accum import csum_complex
from .errors import InputError, InvariantError, ResourceError
from .numtheory import eval_poly_mod_grid, is_prime
from .poly import IntPolynomial

TABLE_GUARD = 1 << 28  # max q^d entries for a materialized table
STREAM_THRESHOLD = 1 << 24  # above this, good sets are reduced slab by slab
PARSEVAL_TOL = 1e-9


@dataclass
class WeylTable:
    q: int
    d: int
    values: np.ndarray  # shape (q,)*d, complex128
    build_method: str

    def __getitem__(self, b) -> complex:
        return complex(self.values[tuple(int(v) % self.q for v in b)])


@dataclass(frozen=True)
class DeligneReport:
    max_modulus: float
    bound: float
    ok: bool


@dataclass
class GoodSet:
    q: int
    d: int
    c: float
    threshold: float
    members: np.ndarray  # shape (m, d), lexicographically sorted residues
    density: float

    def __contains__(self, b) -> bool:
        return tuple(int(v) for v in b) in self.member_set()

    def member_set(self) -> frozenset:
        if not hasattr(self, "_member_set"):
            self._member_set = frozenset(map(tuple, self.members.tolist()))
        return self._member_set


@lru_cache(maxsize=128)
def roots_of_unity(q: int) -> np.ndarray:
    """e(m/q) for m in [0, q), from exactly reduced arguments 2*pi*m/q."""
    out = np.exp(2j * np.pi * np.arange(q) / q)
    out.setflags(write=False)
    return out


def _open_grid(q: int, d: int) -> tuple[np.ndarray, ...]:
    r = np.arange(q, dtype=np.int64)
    return tuple(r.reshape((1,) * i + (q,) + (1,) * (d - 1 - i)) for i in range(d))


def phase_residues(poly: IntPolynomial, q: int) -> np.ndarray:
    """P(r) mod q on the full residue grid, shape (q,)*d."""
    return eval_poly_mod_grid(poly, _open_grid(q, poly.dim), q)


def weyl_sum_direct(poly: IntPolynomial, q: int, b) -> complex:
    """One complete sum by exact modular phases and compensated accumulation."""
    if not is_prime(q):
        raise InputError(f"modulus {q} is not prime")
    b = tuple(int(v) % q for v in b)
    if len(b) != poly.dim:
        raise InputError(f"b has {len(b)} components, polynomial dimension is {poly.dim}")
    d = poly.dim
    idx = phase_residues(poly, q).astype(np.int64)
    for i, bi in enumerate(b):
        if bi:
            r = np.arange(q, dtype=np.int64).reshape((1,) * i + (q,) + (1,) * (d - 1 - i))
            idx = (idx + bi * r) % q
    return csum_complex(roots_of_unity(q)[idx])


def _table_direct(grid: np.ndarray, q: int) -> np.ndarray:
    """Axis-by-axis contraction against the exact root-of-unity matrix.

    Independent of the FFT code path: phase indices b*r mod q are formed
    in integers, so no twiddle-factor recurrences are involved.
    """
    w = roots_of_unity(q)[np.outer(np.arange(q), np.arange(q)) % q]
    out = grid
    for axis in range(grid.ndim):
        out = np.moveaxis(np.tensordot(w, out, axes=([1], [axis])), 0, axis)
    return out


def weyl_table(poly: IntPolynomial, q: int, method: str = "dft") -> WeylTable:
    """All S(b), b in F_q^d.

    The default path evaluates the d-dimensional inverse FFT of the grid
    r -> e(P(r)/q), scaled by q^d so entries match weyl_sum_direct. The
    "direct" path is the exact-phase contraction used as an oracle.
    """
    if not is_prime(q):
        raise InputError(f"modulus {q} is not prime")
    d = poly.dim
    if q**d > TABLE_GUARD:
        raise ResourceError(f"table of q^d = {q**d} entries exceeds guard {TABLE_GUARD}")
    grid = roots_of_unity(q)[phase_residues(poly, q)]
    if method == "dft":
        values = np.fft.ifftn(grid) * float(q) ** d
    elif method == "direct":
        values = _table_direct(grid, q)
    else:
        raise InputError(f"unknown build method {method!r}")
    table = WeylTable(q=q, d=d, values=values, build_method=method)
    defect = parseval_defect(table)
    if defect > PARSEVAL_TOL:
        raise InvariantError(f"Parseval defect {defect:.3e} above {PARSEVAL_TOL} for q={q}, d={d}")
    return table


def parseval_defect(table: WeylTable) -> float:
    """Relative deviation of sum_b |S(b)|^2 from q^(2d)."""
    target = float(table.q) ** (2 * table.d)
    total = float(np.sum(np.abs(table.values) ** 2))
    return abs(total - target) / target


def deligne_check(table: WeylTable, k: int) -> DeligneReport:
    """Compare max_b |S(b)| against the degree bound (k-1) * q^(d/2).

    Report only; violations are the caller's to interpret. Callers are
    expected to have filtered out primes dividing k.
    """
    if k < 2:
        raise InputError(f"degree must be >= 2, got {k}")
    bound = (k - 1) * float(table.q) ** (table.d / 2)
    max_mod = float(np.abs(table.values).max())
    return DeligneReport(max_modulus=max_mod, bound=bound, ok=bool(max_mod <= bound * (1 + 1e-12)))


def _good_set_from_moduli(moduli: np.ndarray, q: int, d: int, c: float, k: int, deligne_ok: bool) -> GoodSet:
    threshold = c * float(q) ** (d / 2)
    mask = moduli >= threshold
    members = np.argwhere(mask).astype(np.int64)
    order = np.lexsort(members.T[::-1]) if members.size else np.array([], dtype=np.intp)
    members = members[order]
    density = members.shape[0] / float(q) ** d
    gs = GoodSet(q=q, d=d, c=c, threshold=threshold, members=members, density=density)
    if deligne_ok:
        guaranteed = (1 - c * c) / (k - 1) ** 2
        if density < guaranteed * (1 - 1e-9):
            raise InvariantError(
                f"good-set density {density:.6f} below guaranteed {guaranteed:.6f} "
                f"for q={q}, d={d}, c={c} despite max-modulus bound holding"
            )
    return gs


def good_set(table: WeylTable, c: float, k: int) -> GoodSet:
    """Residues b with |S(b)| >= c * q^(d/2).

    When the degree bound holds on the table, the density is checked
    against its guaranteed floor (1-c^2)/(k-1)^2.
    """
    if not 0 < c < 1:
        raise InputError(f"threshold constant must be in (0,1), got {c}")
    report = deligne_check(table, k)
    return _good_set_from_moduli(np.abs(table.values), table.q, table.d, c, k, report.ok)


def good_set_streamed(poly: IntPolynomial, q: int, c: float, k: int) -> GoodSet:
    """Good set without retaining the table.

    The phase grid is transformed in place along the trailing axes one
    leading-axis slab at a time, then each output slab of S is formed by
    a length-q contraction and immediately reduced to membership bits,
    the running maximum, and the Parseval accumulator.
    """
    if not 0 < c < 1:
        raise InputError(f"threshold constant must be in (0,1), got {c}")
    if not is_prime(q):
        raise InputError(f"modulus {q} is not prime")
    d = poly.dim
    if q**d > TABLE_GUARD:
        raise ResourceError(f"q^d = {q**d} exceeds guard {TABLE_GUARD}")
    if d == 1:
        return good_set(weyl_table(poly, q), c, k)
    grid = roots_of_unity(q)[phase_residues(poly, q)]
    for r0 in range(q):
        grid[r0] = np.fft.ifftn(grid[r0]) * float(q) ** (d - 1)
    roots = roots_of_unity(q)
    threshold = c * float(q) ** (d / 2)
    members = []
    max_mod = 0.0
    power = 0.0
    for b0 in range(q):
        slab = np.tensordot(roots[(b0 * np.arange(q)) % q], grid, axes=([0], [0]))
        mods = np.abs(slab)
        power += float((mods**2).sum())
        max_mod = max(max_mod, float(mods.max()))
        for rest in np.argwhere(mods >= threshold):
            members.append((b0, *map(int, rest)))
    target = float(q) ** (2 * d)
    defect = abs(power - target) / target
    if defect > PARSEVAL_TOL:
        raise InvariantError(f"Parseval defect {defect:.3e} above {PARSEVAL_TOL} for q={q}, d={d}")
    arr = np.array(sorted(members), dtype=np.int64).reshape(len(members), d)
    bound = (k - 1) * float(q) ** (d / 2)
    gs = GoodSet(
        q=q, d=d, c=c, threshold=threshold, members=arr,
        density=len(members) / float(q) ** d,
    )
    if max_mod <= bound * (1 + 1e-12):
        guaranteed = (1 - c * c) / (k - 1) ** 2
        if gs.density < guaranteed * (1 - 1e-9):
            raise InvariantError(f"good-set density {gs.density:.6f} below floor for q={q}")
    return gs


def good_set_for(poly: IntPolynomial, q: int, c: float, k: int) -> GoodSet:
    """Table-backed good set, streamed when q^d is too large to keep."""
    if q**poly.dim > STREAM_THRESHOLD:
        return good_set_streamed(poly, q, c, k)
    return good_set(weyl_table(poly, q), c, k)
