"""Auxiliary-problem matrix family and zero-curvature residuals on patches.

Every constructor here returns plain (..., 2, 2) complex arrays; scalars in,
one matrix out, grid arrays in, a stack of matrices out.  The time/space
convention flag works as follows: the integrators in :mod:`hmlab.dynamics`
store the `real` convention on a real axis tau with t = -i*tau, so every
analytic time derivative evaluates as i * d/dtau and the time-slot matrix of
a compatible pair picks up a factor -i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fields as fl
from .algebra import PoleError, POLE_EPS

PAIR_KINDS = ("hm", "dual", "comm", "base", "swapped_dual")


@dataclass(frozen=True)
class ExtendedPoint:
    """Spin point with first/second time-derivative proxy fields."""

    spin: fl.SpinPoint
    p_plus: complex = 0.0
    p_minus: complex = 0.0
    p_z: complex = 0.0
    pp_plus: complex = 0.0
    pp_minus: complex = 0.0
    pp_z: complex = 0.0


def su2(plus, minus, z) -> np.ndarray:
    """[[z, minus], [plus, -z]] with numpy broadcasting over the entries."""
    plus, minus, z = np.broadcast_arrays(
        np.asarray(plus, dtype=complex), np.asarray(minus, dtype=complex),
        np.asarray(z, dtype=complex))
    out = np.empty(z.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = z
    out[..., 0, 1] = minus
    out[..., 1, 0] = plus
    out[..., 1, 1] = -z
    return out


def su2_components(m: np.ndarray) -> tuple:
    """(plus, minus, z) entries of a traceless matrix stack."""
    return m[..., 1, 0], m[..., 0, 1], m[..., 0, 0]


def _point_c(p, c):
    if c is not None:
        return c
    if isinstance(p, fl.SpinPoint):
        return np.sqrt(fl.casimir(p))
    return np.sqrt(p.s_z**2 + p.s_plus * p.s_minus)


def _guard(lam):
    if abs(lam) < POLE_EPS:
        raise PoleError("lambda inside the pole guard")


def spin_matrix(p) -> np.ndarray:
    return su2(p.s_plus, p.s_minus, p.s_z)


def sigma_matrix(p: fl.DualPoint) -> np.ndarray:
    return su2(p.sig_plus, p.sig_minus, p.sig_z)


def u_hm(p: fl.SpinPoint, lam: complex) -> np.ndarray:
    """Spatial Lax matrix S / (2 lam)."""
    _guard(lam)
    return spin_matrix(p) / (2.0 * lam)


def v_hm(p: fl.DualPoint, lam: complex, c: complex | None = None) -> np.ndarray:
    """Temporal Lax matrix S/(2 lam^2) - Sigma S/(2 c^2 lam)."""
    _guard(lam)
    c = _point_c(p, c)
    s = spin_matrix(p)
    sig = sigma_matrix(p)
    return s / (2.0 * lam**2) - (sig @ s) / (2.0 * c**2 * lam)


def u2_dual(p: fl.DualPoint, sdot: tuple, lam: complex,
            c: complex | None = None) -> np.ndarray:
    """Order-2 spatial matrix of the dual tower.

    S/(2L^3) - Sig S/(2c^2 L^2) - Sdot S/(2c^2 L) + Sig^2 S/(4c^4 L),
    with the time-derivative triple supplied by the caller.
    """
    _guard(lam)
    c = _point_c(p, c)
    s = spin_matrix(p)
    sig = sigma_matrix(p)
    sd = su2(*sdot)
    return (s / (2.0 * lam**3)
            - (sig @ s) / (2.0 * c**2 * lam**2)
            - (sd @ s) / (2.0 * c**2 * lam)
            + (sig @ sig @ s) / (4.0 * c**4 * lam))


def base_lax(p: fl.SpinPoint, lam: complex) -> tuple[np.ndarray, np.ndarray]:
    """The order-zero pair U = V = S / (2 lam)."""
    u = u_hm(p, lam)
    return u, u.copy()


def u2_comm(e: ExtendedPoint, lam: complex, c: complex | None = None) -> np.ndarray:
    """Order-2 spatial matrix built on independent proxy fields P, PP.

    S/(2L^3) - P S/(2c^2 L^2) + PP/(2c^2 L) + 3 P^2 S/(4c^4 L).
    """
    _guard(lam)
    c = _point_c(e.spin, c)
    s = spin_matrix(e.spin)
    pm = su2(e.p_plus, e.p_minus, e.p_z)
    ppm = su2(e.pp_plus, e.pp_minus, e.pp_z)
    return (s / (2.0 * lam**3)
            - (pm @ s) / (2.0 * c**2 * lam**2)
            + ppm / (2.0 * c**2 * lam)
            + 3.0 * (pm @ pm @ s) / (4.0 * c**4 * lam))


def v1_comm(e: ExtendedPoint, lam: complex, c: complex | None = None) -> np.ndarray:
    """Order-1 temporal partner S/(2 lam^2) - P S/(2 c^2 lam)."""
    _guard(lam)
    c = _point_c(e.spin, c)
    s = spin_matrix(e.spin)
    pm = su2(e.p_plus, e.p_minus, e.p_z)
    return s / (2.0 * lam**2) - (pm @ s) / (2.0 * c**2 * lam)


def redundancy_substitution(s: np.ndarray, sdot: np.ndarray,
                            p: np.ndarray, c: complex) -> np.ndarray:
    """PP = S Sdot - P^2 S / c^2, the on-shell value of the proxy field."""
    return s @ sdot - (p @ p @ s) / c**2


# ---------------------------------------------------------------------------
# space-time patches

@dataclass
class Patch:
    """Fields sampled on a rectangle; axis 0 is time, axis 1 is space."""

    x_spec: fl.GridSpec
    t_spec: fl.GridSpec
    c: complex
    data: dict = field(default_factory=dict)  # name -> (nt, nx) array
    convention: str = "paper"

    @property
    def has_sigma(self) -> bool:
        return "Sig+" in self.data

    def ddx(self, name: str, order: int = 1) -> np.ndarray:
        return fl.diff(self.data[name], self.x_spec, order, axis=1)

    def ddt(self, name: str, order: int = 1) -> np.ndarray:
        """Derivative along the model time variable.

        Real-convention patches store tau with t = -i tau, so each model
        time derivative is i * d/dtau.
        """
        out = fl.diff(self.data[name], self.t_spec, order, axis=0)
        if self.convention == "real":
            out = out * (1j if order == 1 else -1.0)
        return out

    def spin_stack(self) -> np.ndarray:
        return su2(self.data["S+"], self.data["S-"], self.data["Sz"])


def patch_from_trajectory(times: np.ndarray, grids: list,
                          convention: str = "paper") -> Patch:
    """Assemble a patch from evenly spaced trajectory snapshots.

    For space-axis grids the snapshot index is time; for time-axis grids it
    is the space position, and the patch axes are transposed accordingly.
    """
    g0 = grids[0]
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-12, atol=1e-15):
        raise ValueError("snapshots must be evenly spaced")
    half = (times[-1] - times[0]) / 2.0
    sample_spec = fl.GridSpec(len(times), float(half), fl.Boundary.OPEN,
                              fl.Axis.TIME if g0.spec.axis is fl.Axis.SPACE
                              else fl.Axis.SPACE)
    names = fl.ALL_FIELDS if isinstance(g0, fl.DualGrid) else fl.SPIN_FIELDS
    stacks = {name: np.stack([g.field(name) for g in grids]) for name in names}
    if g0.spec.axis is fl.Axis.SPACE:
        return Patch(g0.spec, sample_spec, g0.c, stacks, convention)
    data = {name: arr.T for name, arr in stacks.items()}
    return Patch(sample_spec, g0.spec, g0.c, data, convention)


def _pair_on_patch(patch: Patch, pair_kind: str, lam: complex):
    """(U, V) matrix stacks of shape (nt, nx, 2, 2) for the requested pair."""
    c = patch.c
    s = patch.spin_stack()
    if pair_kind == "hm":
        sig = su2(patch.ddx("S+"), patch.ddx("S-"), patch.ddx("Sz"))
        u = s / (2.0 * lam)
        v = s / (2.0 * lam**2) - (sig @ s) / (2.0 * c**2 * lam)
        return u, v
    if pair_kind == "base":
        u = s / (2.0 * lam)
        return u, u
    if not patch.has_sigma:
        raise ValueError(f"pair {pair_kind!r} needs Sigma fields on the patch")
    sig = su2(patch.data["Sig+"], patch.data["Sig-"], patch.data["Sigz"])
    if pair_kind == "swapped_dual":
        # axes interchanged: the quadratic-in-lambda matrix generates the
        # space direction and S/(2 lam) the time direction
        u = s / (2.0 * lam**2) - (sig @ s) / (2.0 * c**2 * lam)
        return u, s / (2.0 * lam)
    sdot = su2(patch.ddt("S+"), patch.ddt("S-"), patch.ddt("Sz"))
    v = s / (2.0 * lam**2) - (sig @ s) / (2.0 * c**2 * lam)
    if pair_kind == "dual":
        u = (s / (2.0 * lam**3)
             - (sig @ s) / (2.0 * c**2 * lam**2)
             - (sdot @ s) / (2.0 * c**2 * lam)
             + (sig @ sig @ s) / (4.0 * c**4 * lam))
        return u, v
    if pair_kind == "comm":
        # independent proxies collapsed onto the dual fields: P = Sigma,
        # PP = S Sdot - P^2 S / c^2
        pp = s @ sdot - (sig @ sig @ s) / c**2
        u = (s / (2.0 * lam**3)
             - (sig @ s) / (2.0 * c**2 * lam**2)
             + pp / (2.0 * c**2 * lam)
             + 3.0 * (sig @ sig @ s) / (4.0 * c**4 * lam))
        return u, v
    raise ValueError(f"unknown pair kind {pair_kind!r}")


def zero_curvature_residual(patch: Patch, pair_kind: str, lam: complex,
                            convention: str | None = None) -> float:
    """Max interior norm of dU/dt - dV/dx + [U, V] for the chosen pair.

    Under the real convention the stored axis is tau, so the time slot uses
    d/dtau and the compatible temporal matrix is -iV.
    """
    _guard(lam)
    convention = patch.convention if convention is None else convention
    if patch.t_spec.n_points < 8 or patch.x_spec.n_points < 8:
        raise ValueError("patch too small for 4th-order differencing")
    u, v = _pair_on_patch(patch, pair_kind, lam)
    if convention == "real":
        v = -1j * v
    du = fl.diff(u, patch.t_spec, 1, axis=0)
    dv = fl.diff(v, patch.x_spec, 1, axis=1)
    res = du - dv + u @ v - v @ u
    tsl = slice(None) if patch.t_spec.boundary is fl.Boundary.PERIODIC else slice(2, -2)
    xsl = slice(None) if patch.x_spec.boundary is fl.Boundary.PERIODIC else slice(2, -2)
    return float(np.max(np.abs(res[tsl, xsl])))
