"""Path-ordered transport, transfer matrices, and diagonalization checks.

Transport multiplies per-cell midpoint exponentials exp(h * M(midpoint)).
Midpoint fields come from 4-point interpolation, the 2x2 exponential is the
closed form (exactly unimodular for traceless generators), and an optional
per-cell Richardson sweep upgrades the midpoint rule to effective 4th order.
On rotated time axes (real-convention data, t = -i tau) the cell measure is
h = -i * dtau.
"""

from __future__ import annotations

import numpy as np

from . import fields as fl
from . import hierarchy as hi
from .algebra import BoundaryParams, expm2, inv2, k_matrix, PoleError, POLE_EPS
from .lax import su2


def _measure(g: fl.SpinGrid, convention: str) -> complex:
    return 1.0 / hi.axis_factor(g.spec.axis, convention)


def _orientation(g: fl.SpinGrid, orientation: fl.Axis | None) -> fl.Axis:
    if orientation is not None:
        return orientation
    return fl.Axis.TIME if isinstance(g, fl.DualGrid) else fl.Axis.SPACE


def _cell_fields(g: fl.SpinGrid, offset: float) -> list[np.ndarray]:
    """Field values at relative position `offset` inside every cell.

    Periodic grids have n cells, open grids n - 1; interpolation uses the
    cubic through the four nearest samples, shifted at open edges.
    """
    names = fl.ALL_FIELDS if isinstance(g, fl.DualGrid) else fl.SPIN_FIELDS
    n = g.spec.n_points
    periodic = g.spec.boundary is fl.Boundary.PERIODIC
    n_cells = n if periodic else n - 1
    out = []
    if periodic:
        w = fl.fd_weights(offset, np.arange(-1.0, 3.0), 0)
        for name in names:
            v = g.field(name)
            acc = sum(w[k] * np.roll(v, 1 - k) for k in range(4))
            out.append(acc)
    else:
        idx = np.arange(n_cells)
        base = np.clip(idx - 1, 0, n - 4)
        w = np.stack([fl.fd_weights(offset + (idx[i] - base[i]), np.arange(4.0), 0)
                      for i in range(n_cells)])
        for name in names:
            v = g.field(name)
            windows = np.stack([v[b : b + 4] for b in base])
            out.append(np.sum(windows * w, axis=1))
    return out


def _generators(vals: list[np.ndarray], c: complex, lam: complex,
                orientation: fl.Axis) -> np.ndarray:
    s = su2(vals[0], vals[1], vals[2])
    if orientation is fl.Axis.SPACE:
        return s / (2.0 * lam)
    sig = su2(vals[3], vals[4], vals[5])
    v = s / (2.0 * lam**2) - (sig @ s) / (2.0 * c**2 * lam)
    # interpolation to midpoints breaks the tangency constraint at O(dx^4),
    # leaving a spurious trace ~ the dual Casimir; remove it so the cell
    # propagators stay exactly unimodular
    half_tr = (v[..., 0, 0] + v[..., 1, 1]) / 2.0
    v[..., 0, 0] -= half_tr
    v[..., 1, 1] -= half_tr
    return v


def _cell_propagators(g: fl.SpinGrid, lam: complex, orientation: fl.Axis,
                      convention: str, richardson: bool,
                      invert: bool = False) -> np.ndarray:
    """Stack of per-cell propagators, ordered along the axis."""
    if abs(lam) < POLE_EPS:
        raise PoleError("lambda inside the pole guard")
    h = g.spec.spacing * _measure(g, convention)
    if invert:
        h = -h
    mid = _generators(_cell_fields(g, 0.5), g.c, lam, orientation)
    full = expm2(h * mid)
    if not richardson:
        return full
    q1 = _generators(_cell_fields(g, 0.25), g.c, lam, orientation)
    q3 = _generators(_cell_fields(g, 0.75), g.c, lam, orientation)
    if invert:
        q1, q3 = q3, q1
    halves = expm2(0.5 * h * q3) @ expm2(0.5 * h * q1)
    return (4.0 * halves - full) / 3.0


def _ordered_product(cells: np.ndarray) -> np.ndarray:
    """Product cells[-1] @ ... @ cells[0] by pairwise reduction."""
    stack = cells
    while stack.shape[0] > 1:
        m = stack.shape[0] // 2
        paired = stack[1 : 2 * m : 2] @ stack[0 : 2 * m : 2]
        if stack.shape[0] % 2:
            stack = np.concatenate([paired, stack[-1:]])
        else:
            stack = paired
    return stack[0]


def transport(g: fl.SpinGrid, lam: complex, i_from: int, i_to: int,
              orientation: fl.Axis | None = None, convention: str = "paper",
              richardson: bool = False) -> np.ndarray:
    """Ordered propagator from grid index i_from up to i_to (i_from <= i_to).

    On periodic grids i_to may equal n_points, meaning the full loop back to
    the identified first point.
    """
    orientation = _orientation(g, orientation)
    n = g.spec.n_points
    limit = n if g.spec.boundary is fl.Boundary.PERIODIC else n - 1
    if not (0 <= i_from <= i_to <= limit):
        raise IndexError("transport indices must be ordered and on the grid")
    if i_from == i_to:
        return np.eye(2, dtype=complex)
    cells = _cell_propagators(g, lam, orientation, convention, richardson)
    return _ordered_product(cells[i_from:i_to])


def full_transport(g: fl.SpinGrid, lam: complex,
                   orientation: fl.Axis | None = None, convention: str = "paper",
                   richardson: bool = False, invert: bool = False) -> np.ndarray:
    """Whole-interval propagator (or its inverse at the same lambda)."""
    orientation = _orientation(g, orientation)
    cells = _cell_propagators(g, lam, orientation, convention, richardson, invert)
    if invert:
        cells = cells[::-1]
    return _ordered_product(cells)


def transfer(g: fl.SpinGrid, lam: complex, orientation: fl.Axis | None = None,
             convention: str = "paper", richardson: bool = False) -> complex:
    """Trace of the whole-interval propagator."""
    t = full_transport(g, lam, orientation, convention, richardson)
    return complex(t[0, 0] + t[1, 1])


def open_transfer(g: fl.SpinGrid, lam: complex,
                  orientation: fl.Axis | None = None,
                  kplus: BoundaryParams = BoundaryParams(),
                  kminus: BoundaryParams = BoundaryParams(),
                  convention: str = "paper", richardson: bool = False) -> complex:
    """Double-row transfer value tr[K+(lam) T(lam) K-(lam) T^-1(-lam)].

    T^-1(-lam) is assembled from reversed inverse cell propagators rather
    than by inverting the accumulated product.
    """
    if g.spec.boundary is not fl.Boundary.OPEN:
        raise ValueError("open transfer needs an open grid")
    orientation = _orientation(g, orientation)
    t = full_transport(g, lam, orientation, convention, richardson)
    t_inv = full_transport(g, -lam, orientation, convention, richardson,
                           invert=True)
    m = k_matrix(kplus, lam) @ t @ k_matrix(kminus, lam) @ t_inv
    return complex(m[0, 0] + m[1, 1])


def diagonalization_residual(g: fl.SpinGrid, lam: complex,
                             orientation: fl.Axis | None = None,
                             k_max: int = 2, convention: str = "paper") -> float:
    """Relative defect of T(x, x0) = (I+W(x)) e^Z (I+W(x0))^-1 at truncation k_max."""
    orientation = _orientation(g, orientation)
    series = hi.wz_recursion(g, orientation, k_max, convention)
    n = g.spec.n_points
    cells = _cell_propagators(g, lam, orientation, convention, richardson=True)
    last = n if g.spec.boundary is fl.Boundary.PERIODIC else n - 1

    powers = np.array([lam**k for k in
                       range(series.k_min, series.k_max + 1)])
    w_orders = min(series.w.shape[0] - 1, k_max)
    w_pow = np.array([lam**k for k in range(w_orders + 1)])
    w_of_lam = np.tensordot(w_pow, series.w[: w_orders + 1], axes=(0, 0))
    z_of_lam = np.tensordot(powers, series.z, axes=(0, 0))

    z_full = np.tensordot(powers, series.z_total, axes=(0, 0))
    left0_inv = inv2(np.eye(2) + w_of_lam[0])
    t_run = np.eye(2, dtype=complex)
    worst = 0.0
    for i in range(1, last + 1):
        t_run = cells[i - 1] @ t_run
        j = i % n
        z_i = z_of_lam[i] if i < n else z_full
        approx = (np.eye(2) + w_of_lam[j]) @ expm2(z_i) @ left0_inv
        num = np.max(np.abs(t_run - approx))
        den = np.max(np.abs(t_run))
        worst = max(worst, num / den)
    return float(worst)


def series_diverging(g: fl.SpinGrid, lam: complex,
                     orientation: fl.Axis | None = None,
                     k_maxes=(0, 1, 2), convention: str = "paper") -> bool:
    """Flag |lambda| outside the empirical radius of the diagonalization.

    Inside the radius the truncation residual falls with the order; a
    residual that grows between consecutive truncations marks divergence.
    """
    res = [diagonalization_residual(g, lam, orientation, k, convention)
           for k in k_maxes]
    return bool(np.any(np.diff(res) > 0))


def scan(g: fl.SpinGrid, lambdas, orientation: fl.Axis | None = None,
         open_bc: bool = False,
         params: tuple[BoundaryParams, BoundaryParams] | None = None,
         convention: str = "paper", richardson: bool = True) -> np.ndarray:
    """Transfer values over a list of spectral parameters."""
    orientation = _orientation(g, orientation)
    out = np.empty(len(lambdas), dtype=complex)
    for i, lam in enumerate(lambdas):
        if open_bc:
            kp, km = params if params is not None else (BoundaryParams(),
                                                        BoundaryParams())
            out[i] = open_transfer(g, lam, orientation, kp, km, convention,
                                   richardson)
        else:
            out[i] = transfer(g, lam, orientation, convention, richardson)
    return out


def default_lambdas(include_complex: bool = True) -> np.ndarray:
    """8 log-spaced real spectral parameters in [0.05, 2] plus 4 complex ones."""
    real = np.geomspace(0.05, 2.0, 8).astype(complex)
    if not include_complex:
        return real
    extra = np.array([0.3 + 0.4j, 0.8 - 0.5j, -0.7 + 0.6j, 1.1 + 1.3j])
    return np.concatenate([real, extra])


def conservation_lambdas() -> np.ndarray:
    """Drift-monitor parameters kept away from the small-|lambda| blowup."""
    return np.geomspace(0.5, 2.0, 8).astype(complex)
