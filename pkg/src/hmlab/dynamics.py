"""Evolution engines for every flow direction, with conservation monitoring.

Flow kinds
  hm          d/dt of S on a space grid (the magnet equation)
  dual        d/dx of (S, Sigma) on a time grid (equal-space evolution)
  higher      d/dx of (S, Sigma), the order-2 system of the dual tower
  tEvo_dual   space/time swap of `dual`: d/dt on a space grid
  tEvo_higher space/time swap of `higher`: d/dt on a space grid

Convention: `paper` integrates the complex equations verbatim.
`real` parametrizes trajectories by tau with t = -i tau, which multiplies
every time-evolution right-hand side by -i and reads every model time
derivative of stored data as i * d/dtau.  Conjugation-symmetric data stays
conjugation-symmetric under the real-convention flows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import fields as fl
from . import hierarchy as hi
from . import monodromy as mo
from .algebra import BoundaryParams

FLOW_KINDS = ("hm", "dual", "higher", "tEvo_dual", "tEvo_higher")

# flows whose right-hand side carries second derivatives along the data axis
_SECOND_ORDER = {"hm": True, "dual": False, "higher": True,
                 "tEvo_dual": False, "tEvo_higher": True}
_NEEDS_DUAL = {"hm": False, "dual": True, "higher": True,
               "tEvo_dual": True, "tEvo_higher": True}
# orientation of the conserved tower monitored along each flow
_MONITOR_ORIENTATION = {"hm": fl.Axis.SPACE, "dual": fl.Axis.TIME,
                        "higher": fl.Axis.TIME, "tEvo_dual": fl.Axis.TIME,
                        "tEvo_higher": fl.Axis.TIME}
# is the evolution parameter a time direction (real convention rotates it)?
_EVOLVES_TIME = {"hm": True, "dual": False, "higher": False,
                 "tEvo_dual": True, "tEvo_higher": True}


class EvolutionError(RuntimeError):
    """Trajectory left the stability envelope (NaN or norm blowup)."""


@dataclass
class EvolutionConfig:
    step: float
    n_steps: int
    scheme: str = "rk4"
    convention: str = "real"
    monitors: tuple = ("casimirs",)
    monitor_stride: int = 0          # 0: start and end only
    snapshot_stride: int = 0         # 0: keep start and end only
    charge_k_max: int = 1
    lambdas: np.ndarray | None = None
    boundary_params: tuple[BoundaryParams, BoundaryParams] | None = None
    max_growth: float = 100.0

    def validate(self, kind: str, spec: fl.GridSpec) -> None:
        if self.scheme != "rk4":
            raise ValueError("rk4 is the only supported scheme")
        if kind not in FLOW_KINDS:
            raise ValueError(f"unknown flow kind {kind!r}")
        dx = spec.spacing
        budget = 0.2 * dx * dx if _SECOND_ORDER[kind] else 2.0 * dx
        if self.step > budget * (1 + 1e-12):
            raise ValueError(
                f"step {self.step:.3g} exceeds the stability budget "
                f"{budget:.3g} for flow {kind!r}")


def suggested_step(kind: str, spec: fl.GridSpec) -> float:
    """Empirical defaults: 0.1 dx^2 for second-order flows, 0.1 dx otherwise."""
    dx = spec.spacing
    return 0.1 * dx * dx if _SECOND_ORDER[kind] else 0.1 * dx


# ---------------------------------------------------------------------------
# right-hand sides

def _hm_core(u: np.ndarray, spec: fl.GridSpec, c: complex) -> np.ndarray:
    sp, sm, sz = u
    d2p = fl.diff(sp, spec, 2)
    d2m = fl.diff(sm, spec, 2)
    d2z = fl.diff(sz, spec, 2)
    out = np.empty_like(u)
    out[0] = (sp * d2z - d2p * sz) / c**2
    out[1] = -(sm * d2z - d2m * sz) / c**2
    out[2] = (d2p * sm - sp * d2m) / (2.0 * c**2)
    return out


def _dual_core(u: np.ndarray, dot: np.ndarray, c: complex) -> np.ndarray:
    """Equal-space equations with the analytic time derivatives supplied."""
    sp, sm, sz, gp, gm, gz = u
    dp, dm, dz = dot
    q = gp * gm + gz**2
    out = np.empty_like(u)
    out[0] = gp
    out[1] = gm
    out[2] = gz
    out[3] = (sp * dz - dp * sz) - sp * q / c**2
    out[4] = -(sm * dz - dm * sz) - sm * q / c**2
    out[5] = (dp * sm - sp * dm) / 2.0 - sz * q / c**2
    return out


def _higher_core(u: np.ndarray, sdot: np.ndarray, sddot: np.ndarray,
                 gdot: np.ndarray, c: complex) -> np.ndarray:
    """Order-2 equal-space equations with supplied time derivatives."""
    sp, sm, sz, gp, gm, gz = u
    dp, dm, dz = sdot
    ddp, ddm, ddz = sddot
    ep, em, ez = gdot
    q = gz**2 + gp * gm
    kin = (dz**2 + dp * dm) / c**2 - q**2 / (2.0 * c**6)
    a_pm = dp * sm - sp * dm          # (Sdot_+ S_- - S_+ Sdot_-)
    a_pz = dp * sz - sp * dz          # (Sdot_+ S_z - S_+ Sdot_z)
    a_mz = dm * sz - sm * dz
    out = np.empty_like(u)
    out[0] = (sp * ez - sz * ep) / c**2 + q * gp / (2.0 * c**4)
    out[1] = (sz * em - sm * ez) / c**2 + q * gm / (2.0 * c**4)
    out[2] = (sm * ep - sp * em) / (2.0 * c**2) + q * gz / (2.0 * c**4)
    out[3] = ((gp * ez - ep * gz) / c**2 + ddp + sp * kin
              + (gz**2 * a_pz + gp**2 * a_mz + gp * gz * a_pm)
              / (2.0 * c**4))
    out[4] = ((em * gz - gm * ez) / c**2 + ddm + sm * kin
              + (-gz**2 * a_mz - gm**2 * a_pz + gm * gz * a_pm)
              / (2.0 * c**4))
    out[5] = ((ep * gm - gp * em) / (2.0 * c**2) + ddz + sz * kin
              + (gp * gz * a_mz - gm * gz * a_pz
                 + 0.5 * (gz**2 - gp * gm) * a_pm)
              / (2.0 * c**4))
    return out


def _rhs_stack(kind: str, u: np.ndarray, spec: fl.GridSpec, c: complex,
               convention: str) -> np.ndarray:
    """Flow increments on the stacked state; the dispatch point for RK4."""
    if kind == "hm":
        out = _hm_core(u, spec, c)
        return -1j * out if convention == "real" else out
    alpha = hi.axis_factor(spec.axis, convention)
    if kind == "dual":
        dot = alpha * np.stack([fl.diff(u[i], spec) for i in range(3)])
        return _dual_core(u, dot, c)
    if kind == "higher":
        sdot = alpha * np.stack([fl.diff(u[i], spec) for i in range(3)])
        sddot = alpha**2 * np.stack([fl.diff(u[i], spec, 2) for i in range(3)])
        gdot = alpha * np.stack([fl.diff(u[i], spec) for i in range(3, 6)])
        return _higher_core(u, sdot, sddot, gdot, c)
    # swapped flows: the primes become plain grid derivatives, and the
    # whole right-hand side is a time evolution
    beta = -1j if convention == "real" else 1.0
    if kind == "tEvo_dual":
        dot = np.stack([fl.diff(u[i], spec) for i in range(3)])
        return beta * _dual_core(u, dot, c)
    if kind == "tEvo_higher":
        sdot = np.stack([fl.diff(u[i], spec) for i in range(3)])
        sddot = np.stack([fl.diff(u[i], spec, 2) for i in range(3)])
        gdot = np.stack([fl.diff(u[i], spec) for i in range(3, 6)])
        return beta * _higher_core(u, sdot, sddot, gdot, c)
    raise ValueError(f"unknown flow kind {kind!r}")


def hm_time_rhs(g: fl.SpinGrid, convention: str = "paper") -> np.ndarray:
    """Magnet-equation increments (3, n)."""
    return _rhs_stack("hm", g.stack(), g.spec, g.c, convention)


def dual_space_rhs(g: fl.DualGrid, convention: str = "paper") -> np.ndarray:
    """Equal-space increments (6, n) on a time-axis grid."""
    return _rhs_stack("dual", g.stack(), g.spec, g.c, convention)


def higher_space_rhs(g: fl.DualGrid, convention: str = "paper") -> np.ndarray:
    """Order-2 tower increments (6, n) on a time-axis grid."""
    return _rhs_stack("higher", g.stack(), g.spec, g.c, convention)


def swapped_flows(g: fl.DualGrid, which: str, convention: str = "paper"
                  ) -> np.ndarray:
    """Space/time swapped variants evolving in time on a space-axis grid."""
    if which not in ("tEvo_dual", "tEvo_higher"):
        raise ValueError("which must be tEvo_dual or tEvo_higher")
    return _rhs_stack(which, g.stack(), g.spec, g.c, convention)


# ---------------------------------------------------------------------------
# monitors and reports

@dataclass
class ConservationReport:
    kind: str
    convention: str
    checkpoints: list = field(default_factory=list)
    casimir: list = field(default_factory=list)
    dual_casimir: list = field(default_factory=list)
    charges: dict = field(default_factory=dict)      # k -> list of complex
    transfer_scan: list = field(default_factory=list)  # list of arrays
    boundary_residuals: list = field(default_factory=list)
    lambdas: np.ndarray | None = None

    def record(self, t: float, g: fl.SpinGrid, cfg: EvolutionConfig,
               orientation: fl.Axis) -> None:
        self.checkpoints.append(float(t))
        if "casimirs" in cfg.monitors:
            dev = np.abs(g.sz**2 + g.sp * g.sm - g.c**2)
            self.casimir.append(float(np.max(dev)))
            if isinstance(g, fl.DualGrid):
                dev2 = np.abs(2 * g.sz * g.gz + g.sp * g.gm + g.sm * g.gp)
                self.dual_casimir.append(float(np.max(dev2)))
        if "charges" in cfg.monitors:
            series = hi.charges(g, orientation, cfg.charge_k_max,
                                open_bc=g.spec.boundary is fl.Boundary.OPEN
                                and cfg.boundary_params is not None,
                                params=cfg.boundary_params,
                                convention=cfg.convention)
            for k, v in series.values.items():
                self.charges.setdefault(k, []).append(v)
        if "transfer_scan" in cfg.monitors:
            lams = cfg.lambdas if cfg.lambdas is not None \
                else mo.conservation_lambdas()
            self.lambdas = np.asarray(lams, dtype=complex)
            open_bc = (g.spec.boundary is fl.Boundary.OPEN
                       and cfg.boundary_params is not None)
            vals = mo.scan(g, self.lambdas, orientation, open_bc,
                           cfg.boundary_params, cfg.convention)
            self.transfer_scan.append(vals)
        if "boundary_residuals" in cfg.monitors and cfg.boundary_params:
            res = max(hi.boundary_residual(g, orientation, +1,
                                           cfg.boundary_params[0]),
                      hi.boundary_residual(g, orientation, -1,
                                           cfg.boundary_params[1]))
            self.boundary_residuals.append(float(res))

    def _unwrap_charges(self) -> dict:
        """Continuity-tracked charge traces (2 pi i branch steps removed)."""
        out = {}
        for k, vals in self.charges.items():
            arr = np.asarray(vals, dtype=complex).copy()
            for i in range(1, len(arr)):
                jump = (arr[i] - arr[i - 1]).imag / (2.0 * np.pi)
                arr[i] -= 2j * np.pi * np.round(jump)
            out[k] = arr
        return out

    def final_drifts(self) -> dict:
        out = {}
        if self.casimir:
            out["casimir_drift"] = float(max(self.casimir))
            if self.dual_casimir:
                out["dual_casimir_drift"] = float(max(self.dual_casimir))
        charge_drift = {}
        unwrapped = self._unwrap_charges()
        tower = max((abs(a[0]) for a in unwrapped.values()), default=1.0)
        for k, arr in unwrapped.items():
            # identically-zero members are measured against the tower scale
            scale = max(abs(arr[0]), 1e-6 * tower, 1e-300)
            charge_drift[str(k)] = float(np.max(np.abs(arr - arr[0])) / scale)
        if charge_drift:
            out["charges"] = charge_drift
        if self.transfer_scan:
            t0 = self.transfer_scan[0]
            rel = [float(np.max(np.abs(t - t0) / np.abs(t0)))
                   for t in self.transfer_scan]
            out["transfer_scan"] = max(rel)
        if self.boundary_residuals:
            out["boundary_residuals"] = float(max(self.boundary_residuals))
        return out

    def to_json_dict(self) -> dict:
        def c2pair(z):
            return [float(np.real(z)), float(np.imag(z))]

        doc = {
            "kind": self.kind,
            "convention": self.convention,
            "checkpoints": self.checkpoints,
            "casimir": self.casimir,
            "dual_casimir": self.dual_casimir,
            "charges": {str(k): [c2pair(v) for v in vals]
                        for k, vals in self.charges.items()},
            "boundary_residuals": self.boundary_residuals,
            "final": self.final_drifts(),
        }
        if self.transfer_scan:
            doc["transfer_scan"] = {
                "lambdas": [c2pair(l) for l in self.lambdas],
                "values": [[c2pair(v) for v in vals]
                           for vals in self.transfer_scan],
            }
        return doc

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list
    report: ConservationReport


def evolve(g: fl.SpinGrid, kind: str, cfg: EvolutionConfig) -> Trajectory:
    """RK4 trajectory with monitoring; grids are immutable, steps make new ones."""
    cfg.validate(kind, g.spec)
    if _NEEDS_DUAL[kind] and not isinstance(g, fl.DualGrid):
        raise TypeError(f"flow {kind!r} needs a DualGrid")
    if g.spec.boundary is fl.Boundary.OPEN and cfg.boundary_params is not None:
        orientation = _MONITOR_ORIENTATION[kind]
        res0 = max(hi.boundary_residual(g, orientation, +1, cfg.boundary_params[0]),
                   hi.boundary_residual(g, orientation, -1, cfg.boundary_params[1]))
        if res0 > 1e-8:
            raise EvolutionError(
                f"initial data violates the boundary constraints: {res0:.3g}")
    orientation = _MONITOR_ORIENTATION[kind]
    u = g.stack()
    scale0 = float(np.max(np.abs(u)))
    dt = cfg.step
    spec, c, conv = g.spec, g.c, cfg.convention

    mon_stride = cfg.monitor_stride if cfg.monitor_stride > 0 else cfg.n_steps
    snap_stride = cfg.snapshot_stride if cfg.snapshot_stride > 0 else cfg.n_steps

    report = ConservationReport(kind, conv)
    snaps = [g.with_stack(u)]
    times = [0.0]
    report.record(0.0, snaps[0], cfg, orientation)

    for step in range(1, cfg.n_steps + 1):
        k1 = _rhs_stack(kind, u, spec, c, conv)
        k2 = _rhs_stack(kind, u + 0.5 * dt * k1, spec, c, conv)
        k3 = _rhs_stack(kind, u + 0.5 * dt * k2, spec, c, conv)
        k4 = _rhs_stack(kind, u + dt * k3, spec, c, conv)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bad = not np.all(np.isfinite(u))
        if bad or np.max(np.abs(u)) > cfg.max_growth * max(scale0, 1.0):
            raise EvolutionError(
                f"instability at step {step}/{cfg.n_steps} "
                f"(t={step * dt:.4g}): "
                + ("non-finite state" if bad else "norm blowup"))
        here = step * dt
        if step % snap_stride == 0 or step == cfg.n_steps:
            snaps.append(g.with_stack(u))
            times.append(here)
        if step % mon_stride == 0 or step == cfg.n_steps:
            report.record(here, g.with_stack(u), cfg, orientation)

    return Trajectory(np.asarray(times), snaps, report)


# ---------------------------------------------------------------------------
# space-like boundary closure

def open_boundary_closure(g: fl.SpinGrid,
                          params: tuple[BoundaryParams, BoundaryParams]):
    """Boundary derivative triples solving the space-like constraints.

    At each end the three bilinear relations fix S' up to its component
    along S; the Casimir tangency row S- dS+ + S+ dS- + 2 Sz dSz = 0 closes
    the system.  Solved by least squares; the report carries the residual
    and condition number of each stacked system.
    """
    if g.spec.boundary is not fl.Boundary.OPEN:
        raise ValueError("closure needs an open grid")
    out = {}
    c2 = g.c**2
    for side, par in (("plus", params[0]), ("minus", params[1])):
        i = -1 if side == "plus" else 0
        sgn = 1.0 if side == "plus" else -1.0
        sp, sm, sz = g.sp[i], g.sm[i], g.sz[i]
        a = par.alpha
        rows = np.array([
            [-a * sm, a * sp, 0.0],
            [-a * sz, 0.0, a * sp],
            [0.0, -a * sz, a * sm],
            [sm, sp, 2.0 * sz],
        ], dtype=complex)
        rhs = np.array([
            sgn * c2 * (par.beta * sp - par.gamma * sm),
            sgn * c2 * (par.delta * sp - par.gamma * sz),
            sgn * c2 * (par.delta * sm - par.beta * sz),
            0.0,
        ], dtype=complex)
        sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        resid = float(np.max(np.abs(rows @ sol - rhs)))
        cond = float(np.linalg.cond(rows))
        out[side] = {"derivative": sol, "residual": resid, "cond": cond}
    return out
