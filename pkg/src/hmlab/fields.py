"""Grid storage for the spin field, its dual extension, and finite differences.

Fields are complex-valued throughout; "real" (conjugation-symmetric) data is
just a special slice of the complex state, selected by the generators below
and preserved by the real-convention flows in :mod:`hmlab.dynamics`.

Conventions fixed here:
  * periodic grids store n points -L, -L+dx, ..., L-dx (index n wraps to 0),
  * open grids store n points -L, ..., L inclusive,
  * all stencils are 4th order (central in the bulk, one-sided at open ends),
  * the ultralocal delta function discretizes as delta_{mn}/dx.

Fields are assumed smooth (and periodic, or boundary-compatible on open
grids); no decay or regularity class beyond that is modeled.  The series
machinery additionally needs min |c + S_z| >= 0.1 |c| everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
import numpy as np

SPIN_FIELDS = ("S+", "S-", "Sz")
SIGMA_FIELDS = ("Sig+", "Sig-", "Sigz")
ALL_FIELDS = SPIN_FIELDS + SIGMA_FIELDS


class Boundary(Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class Axis(Enum):
    SPACE = "space"
    TIME = "time"


@dataclass(frozen=True)
class GridSpec:
    """Uniform 1-d sampling of [-half_length, half_length]."""

    n_points: int
    half_length: float
    boundary: Boundary = Boundary.PERIODIC
    axis: Axis = Axis.SPACE

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError("need at least 8 grid points")
        if self.half_length <= 0:
            raise ValueError("half_length must be positive")

    @property
    def spacing(self) -> float:
        if self.boundary is Boundary.PERIODIC:
            return 2.0 * self.half_length / self.n_points
        return 2.0 * self.half_length / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.n_points)

    def with_points(self, n: int) -> "GridSpec":
        return replace(self, n_points=n)


@dataclass(frozen=True)
class SpinPoint:
    s_plus: complex
    s_minus: complex
    s_z: complex


@dataclass(frozen=True)
class DualPoint:
    s_plus: complex
    s_minus: complex
    s_z: complex
    sig_plus: complex = 0.0
    sig_minus: complex = 0.0
    sig_z: complex = 0.0

    @property
    def spin(self) -> SpinPoint:
        return SpinPoint(self.s_plus, self.s_minus, self.s_z)


@dataclass
class SpinGrid:
    spec: GridSpec
    c: complex
    sp: np.ndarray
    sm: np.ndarray
    sz: np.ndarray

    n_components = 3

    def field(self, name: str) -> np.ndarray:
        return {"S+": self.sp, "S-": self.sm, "Sz": self.sz}[name]

    def point(self, i: int) -> SpinPoint:
        return SpinPoint(self.sp[i], self.sm[i], self.sz[i])

    def stack(self) -> np.ndarray:
        return np.stack([self.sp, self.sm, self.sz])

    def with_stack(self, u: np.ndarray) -> "SpinGrid":
        return SpinGrid(self.spec, self.c, u[0].copy(), u[1].copy(), u[2].copy())

    def copy(self) -> "SpinGrid":
        return self.with_stack(self.stack())


@dataclass
class DualGrid(SpinGrid):
    gp: np.ndarray = None
    gm: np.ndarray = None
    gz: np.ndarray = None

    n_components = 6

    def field(self, name: str) -> np.ndarray:
        table = {"S+": self.sp, "S-": self.sm, "Sz": self.sz,
                 "Sig+": self.gp, "Sig-": self.gm, "Sigz": self.gz}
        return table[name]

    def point(self, i: int) -> DualPoint:
        return DualPoint(self.sp[i], self.sm[i], self.sz[i],
                         self.gp[i], self.gm[i], self.gz[i])

    def stack(self) -> np.ndarray:
        return np.stack([self.sp, self.sm, self.sz, self.gp, self.gm, self.gz])

    def with_stack(self, u: np.ndarray) -> "DualGrid":
        return DualGrid(self.spec, self.c, u[0].copy(), u[1].copy(), u[2].copy(),
                        u[3].copy(), u[4].copy(), u[5].copy())


def cartesian(p: SpinPoint) -> tuple[complex, complex, complex]:
    """(S_x, S_y, S_z) from the ladder combinations."""
    sx = (p.s_plus + p.s_minus) / 2.0
    sy = (p.s_plus - p.s_minus) / 2.0j
    return sx, sy, p.s_z


def from_cartesian(sx: complex, sy: complex, sz: complex) -> SpinPoint:
    return SpinPoint(sx + 1j * sy, sx - 1j * sy, sz)


def casimir(p: SpinPoint) -> complex:
    """S_z^2 + S_+ S_-; equals c^2 on a valid grid."""
    return p.s_z**2 + p.s_plus * p.s_minus


def dual_casimir(p: DualPoint) -> complex:
    """2 S_z Sig_z + S_+ Sig_- + S_- Sig_+; pinned to zero on dual grids."""
    return 2 * p.s_z * p.sig_z + p.s_plus * p.sig_minus + p.s_minus * p.sig_plus


def casimir_deviation(g: SpinGrid) -> float:
    dev = np.abs(g.sz**2 + g.sp * g.sm - g.c**2)
    out = float(np.max(dev))
    if isinstance(g, DualGrid):
        dual = np.abs(2 * g.sz * g.gz + g.sp * g.gm + g.sm * g.gp)
        out = max(out, float(np.max(dual)))
    return out


# ---------------------------------------------------------------------------
# finite differences

def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Fornberg weights for the m-th derivative at z from nodes x."""
    n = len(x)
    w = np.zeros((n, m + 1))
    w[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - z
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[i, k] = c1 * (k * w[i - 1, k - 1] - c5 * w[i - 1, k]) / c2
                w[i, 0] = -c1 * c5 * w[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                w[j, k] = (c4 * w[j, k] - k * w[j, k - 1]) / c3
            w[j, 0] = c4 * w[j, 0] / c3
        c1 = c2
    return w[:, m]


def _central_weights(order: int) -> np.ndarray:
    return fd_weights(0.0, np.arange(-2.0, 3.0), order)


def diff(values: np.ndarray, spec: GridSpec, order: int = 1,
         axis: int = -1) -> np.ndarray:
    """4th-order derivative of sampled values along the given array axis."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    v = np.asarray(values)
    if axis not in (-1, v.ndim - 1):
        return np.moveaxis(diff(np.moveaxis(v, axis, -1), spec, order), -1, axis)
    n = spec.n_points
    dx = spec.spacing
    if v.shape[-1] != n:
        raise ValueError("value count does not match the grid")
    # stencils are applied to differences from the expansion point, so a
    # constant field yields exactly zero
    w = _central_weights(order)
    if spec.boundary is Boundary.PERIODIC:
        out = sum(w[j + 2] * (np.roll(v, -j, axis=-1) - v)
                  for j in range(-2, 3) if j != 0)
        return out / dx**order
    width = 5 if order == 1 else 6
    if n < width + 2:
        raise ValueError("grid too small for one-sided stencils")
    out = np.empty_like(v, dtype=complex)
    inner = sum(w[j + 2] * (v[..., 2 + j : n - 2 + j] - v[..., 2:-2])
                for j in range(-2, 3) if j != 0)
    out[..., 2:-2] = inner
    for i in (0, 1):
        wi = fd_weights(float(i), np.arange(float(width)), order)
        diffs = v[..., :width] - v[..., i][..., None]
        out[..., i] = np.tensordot(diffs, wi, axes=(-1, 0))
        wj = fd_weights(float(width - 1 - i), np.arange(float(width)), order)
        diffs = v[..., n - width :] - v[..., n - 1 - i][..., None]
        out[..., n - 1 - i] = np.tensordot(diffs, wj, axes=(-1, 0))
    return out / dx**order


def derivative(g: SpinGrid, field: str, order: int = 1) -> np.ndarray:
    return diff(g.field(field), g.spec, order)


# ---------------------------------------------------------------------------
# quadrature

def quad_weights(spec: GridSpec) -> np.ndarray:
    """Weights of the full-interval quadrature matching the grid layout.

    Periodic grids use the rectangle rule (spectrally accurate there); open
    grids use composite Simpson, with a Simpson-3/8 patch when the interval
    count is odd.
    """
    n = spec.n_points
    dx = spec.spacing
    if spec.boundary is Boundary.PERIODIC:
        return np.full(n, dx)
    w = np.zeros(n)
    m = n - 1  # interval count
    if m % 2 == 0:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= dx / 3.0
    else:
        w[0] = 1.0
        w[1 : m - 3 : 2] = 4.0
        w[2 : m - 3 : 2] = 2.0
        w[m - 3] += 1.0
        w *= dx / 3.0
        w[m - 3 :] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * dx / 8.0)
    return w


def integrate(values: np.ndarray, spec: GridSpec) -> complex:
    return complex(np.tensordot(values, quad_weights(spec), axes=(-1, 0)))


def cumulative_integral(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """4th-order accumulated integral from the left grid edge.

    Entry i holds the integral from point 0 to point i; each cell uses the
    cubic through its four nearest samples (with wrap on periodic grids).
    """
    v = np.asarray(values, dtype=complex)
    n = spec.n_points
    dx = spec.spacing
    if spec.boundary is Boundary.PERIODIC:
        vm1 = np.roll(v, 1, axis=-1)
        vp1 = np.roll(v, -1, axis=-1)
        vp2 = np.roll(v, -2, axis=-1)
        cell = (-vm1 + 13.0 * v + 13.0 * vp1 - vp2) * (dx / 24.0)
    else:
        cell = np.empty(v.shape[:-1] + (n - 1,), dtype=complex)
        cell[..., 1:-1] = (-v[..., :-3] + 13.0 * v[..., 1:-2]
                           + 13.0 * v[..., 2:-1] - v[..., 3:]) * (dx / 24.0)
        w_first = fd_weights(0.5, np.arange(4.0), 0)
        w_last = fd_weights(2.5, np.arange(4.0), 0)
        # Simpson on the edge cells via interpolated midpoints
        mid_first = np.tensordot(v[..., :4], w_first, axes=(-1, 0))
        mid_last = np.tensordot(v[..., -4:], w_last, axes=(-1, 0))
        cell[..., 0] = (v[..., 0] + 4.0 * mid_first + v[..., 1]) * (dx / 6.0)
        cell[..., -1] = (v[..., -2] + 4.0 * mid_last + v[..., -1]) * (dx / 6.0)
        cell = cell[..., : n - 1]
    out = np.zeros(v.shape[:-1] + (n,), dtype=complex)
    np.cumsum(cell[..., : n - 1], axis=-1, out=out[..., 1:])
    return out


# ---------------------------------------------------------------------------
# initial data

def _smooth_modes(rng: np.random.Generator, x: np.ndarray, half_length: float,
                  n_modes: int = 3) -> np.ndarray:
    """Real smooth periodic field from a few low Fourier modes, O(1) size."""
    out = np.zeros_like(x)
    for k in range(1, n_modes + 1):
        a, b = rng.normal(size=2) / k
        out += a * np.cos(np.pi * k * x / half_length) + b * np.sin(np.pi * k * x / half_length)
    return out / max(1.0, n_modes)


def make_spin_data(spec: GridSpec, c: complex = 1.0, kind: str = "twist",
                   seed: int = 0, amplitude: float = 0.5,
                   complex_fields: bool = False, winding: int = 1) -> SpinGrid:
    """Casimir-exact smooth initial data.

    north_pole: the fixed point (0, 0, c).
    twist: S_+ = c sin(theta) e^{i phi} with theta, phi smooth and periodic;
    ``winding`` counts full turns of phi across the interval (0 keeps the
    transverse phase single-valued, which some series comparisons need).
    fourier_random: a few seeded low modes normalized back onto the sphere;
    with complex_fields=True the normalization uses the complex bilinear
    square so the data leaves the real slice while keeping the Casimir.
    """
    x = spec.points
    rng = np.random.default_rng(seed)
    if kind == "north_pole":
        zero = np.zeros_like(x, dtype=complex)
        return SpinGrid(spec, c, zero.copy(), zero.copy(), c + zero)
    if kind == "twist":
        ph1, ph2 = rng.uniform(0, 2 * np.pi, size=2)
        theta = np.pi / 2 + amplitude * np.sin(np.pi * x / spec.half_length + ph1)
        phi = winding * np.pi * x / spec.half_length + 0.5 * amplitude * np.cos(
            np.pi * x / spec.half_length + ph2)
        sp = c * np.sin(theta) * np.exp(1j * phi)
        sm = c * np.sin(theta) * np.exp(-1j * phi)
        sz = c * np.cos(theta) + 0j
        grid = SpinGrid(spec, c, sp, sm, sz)
    elif kind == "fourier_random":
        nx = amplitude * _smooth_modes(rng, x, spec.half_length)
        ny = amplitude * _smooth_modes(rng, x, spec.half_length)
        nz = 1.0 + amplitude * 0.3 * _smooth_modes(rng, x, spec.half_length)
        if complex_fields:
            nx = nx + 1j * 0.3 * amplitude * _smooth_modes(rng, x, spec.half_length)
            ny = ny + 1j * 0.3 * amplitude * _smooth_modes(rng, x, spec.half_length)
        norm = np.sqrt(nx**2 + ny**2 + nz**2 + 0j)
        if np.min(np.abs(norm)) < 1e-6:
            raise ValueError("random draw collapsed onto the null cone; change seed")
        sx, sy, sz = c * nx / norm, c * ny / norm, c * nz / norm
        grid = SpinGrid(spec, c, sx + 1j * sy, sx - 1j * sy, sz)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    guard = np.min(np.abs(c + grid.sz))
    if guard < 0.1 * abs(c):
        raise ValueError(
            f"amplitude {amplitude} drives min|c + S_z| to {guard:.3g}; "
            "the series denominators need min >= 0.1|c|")
    return grid


def project_tangent(g: DualGrid) -> DualGrid:
    """Remove the component of Sigma along S so the dual Casimir vanishes."""
    ctil = 2 * g.sz * g.gz + g.sp * g.gm + g.sm * g.gp
    coef = ctil / (2 * g.c**2)
    return DualGrid(g.spec, g.c, g.sp, g.sm, g.sz,
                    g.gp - coef * g.sp, g.gm - coef * g.sm, g.gz - coef * g.sz)


def make_dual_data(spec: GridSpec, c: complex = 1.0, kind: str = "twist",
                   seed: int = 0, amplitude: float = 0.5,
                   sigma_amplitude: float | None = None,
                   complex_fields: bool = False, winding: int = 1) -> DualGrid:
    """Spin data on the (usually time-axis) grid plus a tangent Sigma field."""
    spin = make_spin_data(spec, c, kind, seed, amplitude, complex_fields, winding)
    rng = np.random.default_rng(seed + 77003)
    amp = amplitude if sigma_amplitude is None else sigma_amplitude
    x = spec.points
    gx = amp * _smooth_modes(rng, x, spec.half_length) + 0j
    gy = amp * _smooth_modes(rng, x, spec.half_length) + 0j
    gz = amp * _smooth_modes(rng, x, spec.half_length) + 0j
    raw = DualGrid(spec, c, spin.sp, spin.sm, spin.sz,
                   gx + 1j * gy, gx - 1j * gy, gz)
    return project_tangent(raw)


def _bump(x: np.ndarray, support: float) -> np.ndarray:
    """C-infinity envelope equal to 0 outside |x| < support, peak 1 at 0."""
    out = np.zeros_like(x, dtype=float)
    inside = np.abs(x) < support
    r = x[inside] / support
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r**2))
    return out


def make_open_time_data(spec: GridSpec, c: complex = 1.0, seed: int = 0,
                        amplitude: float = 0.3, support: float = 0.6,
                        base: tuple = (0.42, 0.3, 0.855)) -> DualGrid:
    """Open-interval dual data frozen near both ends.

    The spin field is a normalized bump-modulated perturbation of a fixed
    base point; Sigma is bump-supported and projected tangent.  Outside
    |t| < support * half_length everything is constant, so boundary
    constraints that hold initially stay exactly satisfied while the
    interior evolves.
    """
    if spec.boundary is not Boundary.OPEN:
        raise ValueError("open-time data needs an open grid")
    x = spec.points
    rng = np.random.default_rng(seed)
    env = _bump(x, support * spec.half_length)
    b = np.asarray(base, dtype=float)
    b = b / np.sqrt(np.sum(b * b))
    comps = []
    for k in range(3):
        comps.append(b[k] + amplitude * env * _smooth_modes(rng, x, spec.half_length))
    nx, ny, nz = comps
    norm = np.sqrt(nx**2 + ny**2 + nz**2 + 0j)
    sx, sy, sz = c * nx / norm, c * ny / norm, c * nz / norm
    spin = SpinGrid(spec, c, sx + 1j * sy, sx - 1j * sy, sz)
    gx = amplitude * env * _smooth_modes(rng, x, spec.half_length) + 0j
    gy = amplitude * env * _smooth_modes(rng, x, spec.half_length) + 0j
    gz = amplitude * env * _smooth_modes(rng, x, spec.half_length) + 0j
    raw = DualGrid(spec, c, spin.sp, spin.sm, spin.sz,
                   gx + 1j * gy, gx - 1j * gy, gz)
    return project_tangent(raw)


def attach_sigma(spin: SpinGrid, gp: np.ndarray, gm: np.ndarray,
                 gz: np.ndarray) -> DualGrid:
    return DualGrid(spin.spec, spin.c, spin.sp, spin.sm, spin.sz,
                    np.asarray(gp, dtype=complex), np.asarray(gm, dtype=complex),
                    np.asarray(gz, dtype=complex))


def sigma_from_derivative(spin: SpinGrid) -> DualGrid:
    """DualGrid with Sigma = d/dx S, the on-shell identification."""
    return attach_sigma(spin, diff(spin.sp, spin.spec), diff(spin.sm, spin.spec),
                        diff(spin.sz, spin.spec))


# ---------------------------------------------------------------------------
# snapshot files

_SPIN_COLS = ["S+re", "S+im", "S-re", "S-im", "Szre", "Szim"]
_SIG_COLS = ["Sig+re", "Sig+im", "Sig-re", "Sig-im", "Sigzre", "Sigzim"]


def write_grid_csv(g: SpinGrid, path) -> None:
    cols = ["index", "x"] + _SPIN_COLS + (_SIG_COLS if isinstance(g, DualGrid) else [])
    u = g.stack()
    data = [np.arange(g.spec.n_points), g.spec.points]
    for row in u:
        data.append(row.real)
        data.append(row.imag)
    body = np.column_stack(data)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in body:
            fh.write(f"{int(r[0])}," + ",".join(f"{v:.17g}" for v in r[1:]) + "\n")


def read_grid_csv(path, axis: Axis = Axis.SPACE,
                  boundary: Boundary | None = None) -> SpinGrid:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    expected_spin = ["index", "x"] + _SPIN_COLS
    if header[: len(expected_spin)] != expected_spin:
        raise ValueError(f"unexpected snapshot columns: {header}")
    has_sigma = header[len(expected_spin) :] == _SIG_COLS
    if not has_sigma and len(header) != len(expected_spin):
        raise ValueError(f"unexpected snapshot columns: {header}")
    x = body[:, 1]
    n = len(x)
    dx = x[1] - x[0]
    if boundary is None:
        boundary = Boundary.OPEN if abs(x[0] + x[-1]) < 1e-9 * max(1.0, abs(dx)) \
            else Boundary.PERIODIC
    half = -x[0] if boundary is Boundary.OPEN else n * dx / 2.0
    spec = GridSpec(n, float(half), boundary, axis)
    comps = [body[:, 2 + 2 * k] + 1j * body[:, 3 + 2 * k]
             for k in range((len(header) - 2) // 2)]
    cas = comps[2] ** 2 + comps[0] * comps[1]
    c = complex(np.sqrt(np.median(cas.real) + 1j * np.median(cas.imag)))
    if has_sigma:
        return DualGrid(spec, c, *comps)
    return SpinGrid(spec, c, *comps)


def refine(g: SpinGrid, factor: int = 2) -> SpinGrid:
    """Trigonometric refinement of a periodic grid (exact for resolved modes)."""
    if g.spec.boundary is not Boundary.PERIODIC:
        raise ValueError("refine only supports periodic grids")
    n = g.spec.n_points
    spec2 = g.spec.with_points(n * factor)

    def up(v):
        v_hat = np.fft.fft(v)
        out = np.zeros(n * factor, dtype=complex)
        h = n // 2
        out[:h] = v_hat[:h]
        out[-h:] = v_hat[-h:]
        if n % 2 == 0:
            # split the Nyquist mode symmetrically between +h and -h
            out[h] = v_hat[h] / 2.0
            out[n * factor - h] = v_hat[h] / 2.0
        return np.fft.ifft(out) * factor

    comps = [up(row) for row in g.stack()]
    if isinstance(g, DualGrid):
        return DualGrid(spec2, g.c, *comps)
    return SpinGrid(spec2, g.c, *comps)
