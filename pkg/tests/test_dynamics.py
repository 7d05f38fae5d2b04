import numpy as np
import pytest

from hmlab import dynamics as dy
from hmlab import fields as fl
from hmlab import monodromy as mo
from hmlab.algebra import BoundaryParams
from conftest import hm_patch, pooled_order


def test_north_pole_fixed_point():
    g = fl.make_spin_data(fl.GridSpec(64, np.pi), 1.0, "north_pole")
    for conv in ("paper", "real"):
        assert np.max(np.abs(dy.hm_time_rhs(g, conv))) == 0.0
    gd = fl.attach_sigma(g, *np.zeros((3, 64)))
    assert np.max(np.abs(dy.dual_space_rhs(gd, "paper"))) == 0.0
    assert np.max(np.abs(dy.higher_space_rhs(gd, "paper"))) == 0.0
    assert np.max(np.abs(dy.swapped_flows(gd, "tEvo_dual", "real"))) == 0.0
    assert np.max(np.abs(dy.swapped_flows(gd, "tEvo_higher", "real"))) == 0.0


def test_real_convention_preserves_reality():
    g = fl.make_spin_data(fl.GridSpec(64, np.pi), 1.0, "twist", seed=1,
                          amplitude=0.4)
    r = dy.hm_time_rhs(g, "real")
    assert np.max(np.abs(np.conj(r[0]) - r[1])) < 1e-13
    assert np.max(np.abs(np.imag(1j * r[2] * 0) + np.abs(np.conj(r[2]) - r[2]))) < 1e-13


def test_linearized_dispersion():
    n = 256
    spec = fl.GridSpec(n, np.pi)
    x = spec.points
    k, eps = 3, 1e-6
    sp = eps * np.exp(1j * k * x)
    sm = eps * np.exp(-1j * k * x)
    sz = np.sqrt(1 - sp * sm)
    g = fl.SpinGrid(spec, 1.0, sp, sm, sz)
    r = dy.hm_time_rhs(g, "real")
    assert np.max(np.abs(r[0] + 1j * k**2 * sp)) / eps < 1e-4


def test_dual_flow_constant_data():
    ts = fl.GridSpec(64, np.pi, axis=fl.Axis.TIME)
    base = fl.make_spin_data(ts, 1.0, "twist", seed=1, amplitude=0.0)
    const = fl.attach_sigma(
        fl.SpinGrid(ts, 1.0, np.full(64, base.sp[0]), np.full(64, base.sm[0]),
                    np.full(64, base.sz[0])), *np.zeros((3, 64)))
    assert np.max(np.abs(dy.dual_space_rhs(const, "paper"))) == 0.0
    assert np.max(np.abs(dy.higher_space_rhs(const, "paper"))) == 0.0


def test_dual_rhs_is_tangent_to_both_casimirs():
    """d/dx of both constraints vanishes algebraically along the flow."""
    ts = fl.GridSpec(64, np.pi, axis=fl.Axis.TIME)
    g = fl.make_dual_data(ts, 1.0, "fourier_random", seed=9, amplitude=0.4,
                          complex_fields=True)
    r = dy.dual_space_rhs(g, "paper")
    d_c2 = 2 * g.sz * r[2] + r[0] * g.sm + g.sp * r[1]
    assert np.max(np.abs(d_c2)) < 1e-13
    d_ct = (2 * r[2] * g.gz + 2 * g.sz * r[5] + r[0] * g.gm + g.sp * r[4]
            + r[1] * g.gp + g.sm * r[3])
    assert np.max(np.abs(d_ct)) < 1e-12


def test_higher_component_vs_vector_form(rng):
    ts = fl.GridSpec(64, np.pi, axis=fl.Axis.TIME)
    g = fl.make_dual_data(ts, 1.0, "fourier_random", seed=8, amplitude=0.4,
                          complex_fields=True)
    rhs = dy.higher_space_rhs(g, "paper")

    def tocart(p, m, z):
        return np.stack([(p + m) / 2, (p - m) / 2j, z])

    def cross(a, b):
        return np.stack([a[1] * b[2] - a[2] * b[1],
                         a[2] * b[0] - a[0] * b[2],
                         a[0] * b[1] - a[1] * b[0]])

    s = tocart(g.sp, g.sm, g.sz)
    sig = tocart(g.gp, g.gm, g.gz)
    sd = np.stack([fl.diff(v, ts) for v in s])
    sigd = np.stack([fl.diff(v, ts) for v in sig])
    sdd = np.stack([fl.diff(v, ts, 2) for v in s])
    sig2 = np.sum(sig * sig, axis=0)
    want_s = 1j * cross(s, sigd) + sig2 * sig / 2
    want_g = (1j * cross(sig, sigd) - 1j * sig2 * cross(s, sd) / 2 + sdd
              + s * (np.sum(sd * sd, axis=0) - sig2**2 / 2)
              + 1j * sig * np.sum(sig * cross(s, sd), axis=0))
    got = np.concatenate([tocart(*rhs[:3]), tocart(*rhs[3:])])
    assert np.max(np.abs(got - np.concatenate([want_s, want_g]))) < 1e-12


def test_swapped_involution():
    xs = fl.GridSpec(96, np.pi, axis=fl.Axis.SPACE)
    gx = fl.make_dual_data(xs, 1.0, "twist", seed=7, amplitude=0.3)
    ts = fl.GridSpec(96, np.pi, axis=fl.Axis.TIME)
    gt = fl.DualGrid(ts, 1.0, gx.sp, gx.sm, gx.sz, gx.gp, gx.gm, gx.gz)
    for swapped, plain in (("tEvo_dual", dy.dual_space_rhs),
                           ("tEvo_higher", dy.higher_space_rhs)):
        a = dy.swapped_flows(gx, swapped, "paper")
        b = plain(gt, "paper")
        assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        dy.swapped_flows(gx, "hm")


def test_duality_cross_check_refines():
    """Magnet-flow patches satisfy the equal-space equations with a
    residual that shrinks at order >= 3."""
    errs = []
    for n in (32, 48, 72):
        _, patch = hm_patch(n)
        xs, ts = patch.x_spec, patch.t_spec
        sig = {k: fl.diff(patch.data[k], xs, axis=1) for k in fl.SPIN_FIELDS}
        dsig = {k: fl.diff(sig[k], xs, axis=1) for k in fl.SPIN_FIELDS}
        worst = 0.0
        for j in range(0, xs.n_points, 7):
            line = fl.DualGrid(ts, 1.0, patch.data["S+"][:, j],
                               patch.data["S-"][:, j], patch.data["Sz"][:, j],
                               sig["S+"][:, j], sig["S-"][:, j],
                               sig["Sz"][:, j])
            rhs = dy.dual_space_rhs(line, "real")
            target = np.stack([sig["S+"][:, j], sig["S-"][:, j],
                               sig["Sz"][:, j], dsig["S+"][:, j],
                               dsig["S-"][:, j], dsig["Sz"][:, j]])
            worst = max(worst, np.max(np.abs((rhs - target)[:, 2:-2])))
        errs.append(worst)
    assert pooled_order(errs, 1.5) >= 3.0


def test_rk4_self_convergence_all_flows():
    spec_x = fl.GridSpec(48, np.pi)
    spec_t = fl.GridSpec(48, np.pi, axis=fl.Axis.TIME)
    spin = fl.make_spin_data(spec_x, 1.0, "twist", seed=5, amplitude=0.3)
    dual_t = fl.make_dual_data(spec_t, 1.0, "twist", seed=5, amplitude=0.3,
                               sigma_amplitude=0.2)
    dual_x = fl.make_dual_data(spec_x, 1.0, "twist", seed=5, amplitude=0.3,
                               sigma_amplitude=0.2)
    cases = {"hm": spin, "dual": dual_t, "higher": dual_t,
             "tEvo_dual": dual_x, "tEvo_higher": dual_x}
    for kind, g in cases.items():
        base = dy.suggested_step(kind, g.spec)
        total = 16 * base
        ends = []
        for n in (16, 32, 64):
            cfg = dy.EvolutionConfig(step=total / n, n_steps=n,
                                     convention="real", monitors=())
            ends.append(dy.evolve(g, kind, cfg).snapshots[-1].stack())
        e1 = np.max(np.abs(ends[0] - ends[2]))
        e2 = np.max(np.abs(ends[1] - ends[2]))
        order = np.log2(e1 / e2) - 1  # crude two-level estimate
        assert order >= 2.8, (kind, e1, e2)


def test_evolve_monitoring_and_errors():
    g = fl.make_spin_data(fl.GridSpec(64, np.pi), 1.0, "north_pole")
    cfg = dy.EvolutionConfig(step=1e-4, n_steps=1000, convention="real",
                             monitors=("casimirs", "charges"),
                             monitor_stride=250, charge_k_max=1)
    tr = dy.evolve(g, "hm", cfg)
    d = tr.report.final_drifts()
    assert d["casimir_drift"] == 0.0
    assert all(v == 0.0 for v in d["charges"].values())
    # stability budget enforcement
    with pytest.raises(ValueError):
        dy.EvolutionConfig(step=1.0, n_steps=1).validate("hm", g.spec)
    # norm blowup aborts with a diagnostic: the complexified flow amplifies
    # a grid-frequency mode like exp(k^2 t)
    n = g.spec.n_points
    sp = 0.3 * (-1.0 + 0j) ** np.arange(n)
    bad = fl.SpinGrid(g.spec, 1.0, sp, np.conj(sp), np.sqrt(1 - sp * np.conj(sp)))
    cfg2 = dy.EvolutionConfig(step=dy.suggested_step("hm", g.spec),
                              n_steps=400, convention="paper", monitors=())
    with pytest.raises(dy.EvolutionError):
        dy.evolve(bad, "hm", cfg2)
    # flow/grid mismatch
    with pytest.raises(TypeError):
        dy.evolve(g, "dual", cfg)


def test_open_run_rejects_incompatible_data():
    ts = fl.GridSpec(129, np.pi, fl.Boundary.OPEN, fl.Axis.TIME)
    gd = fl.make_open_time_data(ts, 1.0, seed=3, amplitude=0.3)
    bad = (BoundaryParams(0.0, 1.0, 0.0, 0.0),
           BoundaryParams(0.0, 1.0, 0.0, 0.0))
    cfg = dy.EvolutionConfig(step=dy.suggested_step("dual", ts), n_steps=10,
                             convention="real", monitors=(),
                             boundary_params=bad)
    with pytest.raises(dy.EvolutionError):
        dy.evolve(gd, "dual", cfg)


def test_open_boundary_closure(rng):
    spec = fl.GridSpec(129, np.pi, fl.Boundary.OPEN)
    g = fl.make_spin_data(spec, 1.0, "fourier_random", seed=2, amplitude=0.4)
    # K proportional to the identity forces S' = 0
    out = dy.open_boundary_closure(g, (BoundaryParams(), BoundaryParams()))
    for side in ("plus", "minus"):
        assert np.max(np.abs(out[side]["derivative"])) < 1e-14
        assert out[side]["residual"] < 1e-14
    # generic parameters: solve-then-check
    params = (BoundaryParams(1.0 + 0.3j, 0.2, -0.3, 0.15),
              BoundaryParams(0.8, -0.1j, 0.25, 0.05))
    out = dy.open_boundary_closure(g, params)
    for side in ("plus", "minus"):
        assert out[side]["residual"] < 1e-10
        assert out[side]["cond"] < 1e3
    with pytest.raises(ValueError):
        dy.open_boundary_closure(
            fl.make_spin_data(fl.GridSpec(64, np.pi), 1.0, "north_pole"),
            params)


def test_sensitivity_guard_breaks_conservation():
    """A 1e-3 right-hand-side perturbation is detected by the drift monitor."""
    spec = fl.GridSpec(96, np.pi)
    g = fl.make_spin_data(spec, 1.0, "twist", seed=12, amplitude=0.2)
    dt = 0.1 * spec.spacing**2
    n = int(np.ceil(0.25 / dt))
    cfg = dy.EvolutionConfig(step=0.25 / n, n_steps=n, convention="real",
                             monitors=("casimirs", "charges"),
                             monitor_stride=max(1, n // 8), charge_k_max=1)
    clean = dy.evolve(g, "hm", cfg).report.final_drifts()

    original = dy._hm_core

    def broken(u, spec_, c):
        out = original(u, spec_, c)
        out[0] = out[0] + 1e-3 * u[0]
        return out

    dy._hm_core = broken
    try:
        dirty = dy.evolve(g, "hm", cfg).report.final_drifts()
    finally:
        dy._hm_core = original
    assert clean["casimir_drift"] < 1e-11
    assert clean["charges"]["0"] < 1e-6
    assert dirty["casimir_drift"] > 1e-4
    assert dirty["charges"]["0"] > 1e-4


def test_report_json_schema(tmp_path):
    spec = fl.GridSpec(64, np.pi)
    g = fl.make_spin_data(spec, 1.0, "twist", seed=12, amplitude=0.2)
    dt = dy.suggested_step("hm", spec)
    cfg = dy.EvolutionConfig(step=dt, n_steps=40, convention="real",
                             monitors=("casimirs", "charges", "transfer_scan"),
                             monitor_stride=20, charge_k_max=0,
                             lambdas=mo.conservation_lambdas())
    tr = dy.evolve(g, "hm", cfg)
    path = tmp_path / "report.json"
    tr.report.write_json(path)
    import json
    doc = json.loads(path.read_text())
    assert set(doc["final"]) >= {"casimir_drift", "charges", "transfer_scan"}
    assert doc["transfer_scan"]["lambdas"]
    assert len(doc["checkpoints"]) == len(doc["casimir"])


def test_closure_north_pole_boundary():
    """With beta = gamma = 0 a polar boundary spin admits S' = 0 for any
    alpha, delta."""
    spec = fl.GridSpec(65, 1.0, fl.Boundary.OPEN)
    g = fl.make_spin_data(spec, 1.0, "north_pole")
    params = (BoundaryParams(0.7, 0.0, 0.0, 1.3),
              BoundaryParams(1.1, 0.0, 0.0, -0.4))
    out = dy.open_boundary_closure(g, params)
    for side in ("plus", "minus"):
        assert np.max(np.abs(out[side]["derivative"])) < 1e-12
        assert out[side]["residual"] < 1e-12
