"""Frequency-localized initial data on the torus and exact-phase
evaluation of its evolution at rational space-time points.

The datum has Fourier coefficients phi(n/N) = prod_i psi(n_i/N) for a
fixed smooth cutoff psi supported in (1/4, 2) and equal to 1 on
[1/2, 1]. Both the coefficient grid and the attached perturbation
phases factor over the axes, so everything below stores one axis
and forms products on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .accum import csum_complex
from .errors import InputError, ResourceError
from .numtheory import eval_poly_mod_grid
from .poly import IntPolynomial
from .weyl import roots_of_unity

RHO_DEFAULT = 1.0 / 32.0  # shared ball-radius / perturbation-budget constant
BOX_GUARD = 1 << 28  # max entries of the support box

BUMP_INTEGRAL = 1.125  # exact for this profile: 1/8 + 1/2 + 1/2


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """s(t) = g(t) / (g(t) + g(1-t)) with g(t) = exp(-1/t) for t > 0.

    Rises from 0 at t<=0 to 1 at t>=1; s(1/2) = 1/2 by symmetry.
    Underflow of exp(-1/t) near the endpoints is harmless because the
    opposite branch keeps the denominator positive.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    out[t <= 0.0] = 0.0
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    with np.errstate(under="ignore"):
        g = np.exp(-1.0 / tm)
        h = np.exp(-1.0 / (1.0 - tm))
    out[mid] = g / (g + h)
    return out


def bump(x):
    """The fixed cutoff: 0 outside (1/4, 2), 1 on [1/2, 1], smooth joins.

    Rising edge on [1/4, 1/2] is s(4(x - 1/4)); falling edge on [1, 2]
    is s(2 - x).
    """
    arr = np.asarray(x, dtype=float)
    out = np.zeros_like(arr)
    rise = (arr > 0.25) & (arr < 0.5)
    out[rise] = _smoothstep(4.0 * (arr[rise] - 0.25))
    out[(arr >= 0.5) & (arr <= 1.0)] = 1.0
    fall = (arr > 1.0) & (arr < 2.0)
    out[fall] = _smoothstep(2.0 - arr[fall])
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


@dataclass
class Datum:
    """Sparse coefficient map n -> phi(n/N) over the support box.

    The box and the cutoff are identical along every axis, so a single
    integer axis (axis_n) and its psi values (axis_psi) represent the
    full tensor product.
    """

    N: int
    d: int
    axis_n: np.ndarray  # integers n with N/4 < n < 2N
    axis_psi: np.ndarray  # psi(n/N) on axis_n, all in (0, 1]

    @property
    def support_size(self) -> int:
        return len(self.axis_n) ** self.d

    def coefficient(self, n: Sequence[int]) -> float:
        """phi(n/N); 0 outside the support box."""
        if len(n) != self.d:
            raise InputError(f"point has {len(n)} coordinates, expected {self.d}")
        lo, hi = int(self.axis_n[0]), int(self.axis_n[-1])
        out = 1.0
        for v in n:
            v = int(v)
            if v < lo or v > hi:
                return 0.0
            out *= float(self.axis_psi[v - lo])
        return out

    def l2_sq(self) -> float:
        """sum of squared coefficients, exact product over axes."""
        return float(np.sum(self.axis_psi**2)) ** self.d


@dataclass(frozen=True)
class RationalPoint:
    """x = b/q + delta with t = 1/q implied; b is reduced mod q on entry."""

    b: tuple[int, ...]
    q: int
    delta: tuple[float, ...]

    def __post_init__(self):
        if self.q < 2:
            raise InputError(f"denominator must be >= 2, got {self.q}")
        b = tuple(int(v) % self.q for v in self.b)
        delta = tuple(float(v) for v in self.delta)
        if len(delta) != len(b):
            raise InputError(f"delta has {len(delta)} components, b has {len(b)}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "delta", delta)

    @property
    def d(self) -> int:
        return len(self.b)

    def within_budget(self, N: int, rho: float = RHO_DEFAULT) -> bool:
        return max(abs(v) for v in self.delta) <= rho / (self.d * N) * (1 + 1e-12)


def datum_coefficients(N: int, d: int) -> Datum:
    """Coefficients phi(n/N) on the open box (N/4, 2N)^d."""
    if N < 8:
        raise InputError(f"frequency scale must be >= 8, got {N}")
    if d < 1:
        raise InputError(f"dimension must be >= 1, got {d}")
    lo = N // 4 + 1
    hi = 2 * N - 1
    axis = np.arange(lo, hi + 1, dtype=np.int64)
    if len(axis) ** d > BOX_GUARD:
        raise ResourceError(f"support box {len(axis)}^{d} exceeds guard {BOX_GUARD}")
    psi = bump(axis / N)
    keep = psi > 0.0
    return Datum(N=N, d=d, axis_n=axis[keep], axis_psi=psi[keep])


def sobolev_norm_sq(f: Datum, s: float) -> float:
    """sum_n (1 + |n|^2)^s phi(n/N)^2 over the support box."""
    if s == 0.0:
        return f.l2_sq()
    n = f.axis_n.astype(float)
    w = f.axis_psi**2
    if f.d == 1:
        return float(np.sum((1.0 + n**2) ** s * w))
    total = 0.0
    nsq = n**2
    if f.d == 2:
        for i in range(len(n)):
            total += w[i] * float(np.sum((1.0 + nsq[i] + nsq) ** s * w))
        return total
    if f.d == 3:
        for i in range(len(n)):
            row = 0.0
            for j in range(len(n)):
                row += w[j] * float(np.sum((1.0 + nsq[i] + nsq[j] + nsq) ** s * w))
            total += w[i] * row
        return total
    raise InputError(f"Sobolev norms implemented for d <= 3, got d={f.d}")


def _delta_phases(f: Datum, delta: Sequence[float]) -> list[np.ndarray]:
    return [np.exp(2j * np.pi * di * f.axis_n) for di in delta]


def evaluate_solution(
    poly: IntPolynomial,
    f: Datum,
    pt: RationalPoint,
    unsafe_float: bool = False,
) -> complex:
    """The solution at x = b/q + delta, t = 1/q, as the exact sum
    sum_n phi(n/N) e(((b.n + P(n)) mod q)/q + delta.n).

    The modular part of every phase is computed in integers and only
    then mapped to the unit circle; terms are accumulated in a fixed
    lexicographic order with compensated summation. The unsafe_float
    path instead reduces b.n/q + P(n)/q in floating point; it loses all
    accuracy once P(n)/q nears 2^53 and exists only for demonstration.
    """
    if poly.dim != f.d or pt.d != f.d:
        raise InputError(f"dimension mismatch: polynomial {poly.dim}, datum {f.d}, point {pt.d}")
    q = pt.q
    n = f.axis_n
    psi = f.axis_psi
    dphases = _delta_phases(f, pt.delta)
    roots = roots_of_unity(q)

    if unsafe_float:
        nf = n.astype(float)
        axes = [nf.reshape((1,) * i + (-1,) + (1,) * (f.d - 1 - i)) for i in range(f.d)]
        phase = sum(pt.b[i] * axes[i] for i in range(f.d))
        for expo, coeff in poly.terms.items():
            t = float(coeff)
            term = np.full((1,) * f.d, t)
            for i, e in enumerate(expo):
                if e:
                    term = term * axes[i] ** e
            phase = phase + term
        phase = phase / q
        for i in range(f.d):
            phase = phase + pt.delta[i] * axes[i]
        coeff_grid = np.ones((1,) * f.d)
        for i in range(f.d):
            coeff_grid = coeff_grid * psi.reshape((1,) * i + (-1,) + (1,) * (f.d - 1 - i))
        return csum_complex(coeff_grid * np.exp(2j * np.pi * phase))

    n_mod = (n % q).astype(np.int64)
    if f.d == 1:
        residues = eval_poly_mod_grid(poly, (n_mod,), q)
        residues = (residues + pt.b[0] * n_mod) % q
        return csum_complex(psi * dphases[0] * roots[residues])

    # d >= 2: slab over the first axis, lexicographic order preserved
    rest_axes = tuple(
        n_mod.reshape((1,) * i + (-1,) + (1,) * (f.d - 2 - i)) for i in range(f.d - 1)
    )
    rest_coeff = np.ones((1,) * (f.d - 1))
    for i in range(f.d - 1):
        shaped = (psi * dphases[i + 1]).reshape((1,) * i + (-1,) + (1,) * (f.d - 2 - i))
        rest_coeff = rest_coeff * shaped
    rest_lin = sum(pt.b[i + 1] * rest_axes[i] for i in range(f.d - 1)) % q
    parts_re, parts_im = [], []
    for j in range(len(n)):
        comps = (np.full((1,) * (f.d - 1), n_mod[j]),) + rest_axes
        residues = eval_poly_mod_grid(poly, comps, q)
        residues = (residues + pt.b[0] * int(n_mod[j]) + rest_lin) % q
        slab = (psi[j] * dphases[0][j]) * rest_coeff * roots[residues]
        s = slab.sum()
        parts_re.append(float(s.real))
        parts_im.append(float(s.imag))
    return complex(math.fsum(parts_re), math.fsum(parts_im))
