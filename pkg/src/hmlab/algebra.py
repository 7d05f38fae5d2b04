"""Complex 2x2 / 4x4 matrix building blocks and defining algebraic identities.

The 4x4 objects act on a tensor product of two 2-dimensional auxiliary
spaces.  Leg ``a`` is the slow (row-block) index throughout: the embedding
of a 2x2 matrix M into leg a is ``kron(M, I)`` and into leg b is
``kron(I, M)``.  All residuals are max-norms of entrywise absolute values,
so thresholds in tests are reproducible across platforms.

Both reflection matrices use one closed form alpha I + lam k.  The two
reflection equations differ by a spectral-parameter sign that is absorbed
into the plus-side constants (beta+, gamma+, delta+), so the constants on
the two sides are not directly comparable parameter-for-parameter.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# entries below this magnitude of a spectral-parameter denominator are
# treated as a pole hit
POLE_EPS = 1e-9

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)

# permutation operator on the two auxiliary legs
PERM = np.array(
    [[1, 0, 0, 0],
     [0, 0, 1, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1]],
    dtype=complex,
)


class PoleError(ZeroDivisionError):
    """Spectral parameter hit a pole of a rational matrix function."""


class Side(Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class BoundaryParams:
    """Constants of one reflection matrix; alpha = 0 is a legal value."""

    alpha: complex = 1.0
    beta: complex = 0.0
    gamma: complex = 0.0
    delta: complex = 0.0
    side: Side = Side.PLUS


def _check_pole(value: complex, what: str) -> None:
    if abs(value) < POLE_EPS:
        raise PoleError(f"{what} = {value} is inside the pole guard {POLE_EPS}")


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m)))


def leg_a(m: np.ndarray) -> np.ndarray:
    """Embed a 2x2 matrix into the first (slow) tensor leg."""
    return np.kron(m, I2)


def leg_b(m: np.ndarray) -> np.ndarray:
    """Embed a 2x2 matrix into the second (fast) tensor leg."""
    return np.kron(I2, m)


def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def r_matrix(lam: complex) -> np.ndarray:
    """Rational solution of the classical Yang-Baxter equation: P / (2*lam)."""
    _check_pole(lam, "lambda")
    return PERM / (2.0 * lam)


def k_matrix(p: BoundaryParams, lam: complex) -> np.ndarray:
    """Reflection matrix alpha*I + lam*[[delta, beta], [gamma, -delta]]."""
    k = np.array([[p.delta, p.beta], [p.gamma, -p.delta]], dtype=complex)
    return p.alpha * I2 + lam * k


def cybe_residual(lam: complex, mu: complex, r=r_matrix) -> float:
    """Max-norm of the classical Yang-Baxter combination on three legs.

    ``r`` is injectable so tests can verify the residual detects a broken
    r-matrix.
    """
    _check_pole(lam, "lambda")
    _check_pole(mu, "mu")
    _check_pole(lam - mu, "lambda - mu")
    r_ab = np.kron(r(lam - mu), I2)
    r_ac = _r_ac(r(lam))
    r_bc = np.kron(I2, r(mu))
    total = comm(r_ab, r_ac) + comm(r_ab, r_bc) + comm(r_ac, r_bc)
    return max_abs(total)


def _r_ac(r4: np.ndarray) -> np.ndarray:
    """Embed a two-leg operator onto legs (a, c) of a three-leg space."""
    out = np.zeros((8, 8), dtype=complex)
    t = r4.reshape(2, 2, 2, 2)
    # indices (a b c | a' b' c'), with b acting as identity
    for a in range(2):
        for ap in range(2):
            for c in range(2):
                for cp in range(2):
                    for b in range(2):
                        out[4 * a + 2 * b + c, 4 * ap + 2 * b + cp] = t[a, c, ap, cp]
    return out


def reflection_residual(
    p: BoundaryParams, lam: complex, mu: complex, k=k_matrix
) -> float:
    """Max-norm of the classical reflection-equation combination for K(p)."""
    _check_pole(lam - mu, "lambda - mu")
    _check_pole(lam + mu, "lambda + mu")
    k_l = leg_a(k(p, lam))
    k_m = leg_b(k(p, mu))
    r_diff = r_matrix(lam - mu)
    r_sum = r_matrix(lam + mu)
    total = (
        comm(r_diff, k_l @ k_m)
        + k_l @ r_sum @ k_m
        - k_m @ r_sum @ k_l
    )
    return max_abs(total)


def push_through_residual(m: np.ndarray, lam: complex, r=r_matrix) -> float:
    """Max-norm of r_ab(lam) M_a - M_b r_ab(lam); zero for the permutation r."""
    r4 = r(lam)
    return max_abs(r4 @ leg_a(m) - leg_b(m) @ r4)


def partial_trace_first(m4: np.ndarray) -> np.ndarray:
    """Trace out leg a of an operator on the two-leg tensor space."""
    t = np.asarray(m4, dtype=complex).reshape(2, 2, 2, 2)
    return np.trace(t, axis1=0, axis2=2)


def _sinhc(q: np.ndarray) -> np.ndarray:
    """sinh(q)/q, stable near q = 0."""
    out = np.ones_like(q)
    small = np.abs(q) < 1e-6
    qs = np.where(small, 1.0, q)
    out = np.sinh(qs) / qs
    return np.where(small, 1.0 + q * q / 6.0, out)


def expm2(a: np.ndarray) -> np.ndarray:
    """Closed-form exponential of 2x2 matrices, vectorized over leading axes.

    Splits off the trace part; the traceless remainder B satisfies
    B^2 = q^2 I with q^2 = B11^2 + B12*B21.
    """
    a = np.asarray(a, dtype=complex)
    half_tr = (a[..., 0, 0] + a[..., 1, 1]) / 2.0
    b = a.copy()
    b[..., 0, 0] -= half_tr
    b[..., 1, 1] -= half_tr
    q = np.sqrt(b[..., 0, 0] ** 2 + b[..., 0, 1] * b[..., 1, 0])
    ch = np.cosh(q)
    sh = _sinhc(q)
    out = sh[..., None, None] * b
    out[..., 0, 0] += ch
    out[..., 1, 1] += ch
    return np.exp(half_tr)[..., None, None] * out


def inv2(a: np.ndarray) -> np.ndarray:
    """Closed-form inverse of 2x2 matrices, vectorized over leading axes."""
    a = np.asarray(a, dtype=complex)
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    out = np.empty_like(a)
    out[..., 0, 0] = a[..., 1, 1]
    out[..., 1, 1] = a[..., 0, 0]
    out[..., 0, 1] = -a[..., 0, 1]
    out[..., 1, 0] = -a[..., 1, 0]
    return out / det[..., None, None]
