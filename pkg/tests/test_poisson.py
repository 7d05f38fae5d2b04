import numpy as np
import pytest

from hmlab import dynamics as dy
from hmlab import fields as fl
from hmlab import poisson as po
from conftest import random_dual_point, random_spin_point


@pytest.fixture(scope="module")
def tables():
    return (po.equal_time_table(), po.equal_space_table(),
            po.equal_space_cartesian_table(1.0))


def test_point_bracket_examples(tables, rng):
    tt, ts, tc = tables
    assert po.point_bracket(tt, "S+", "Sz", fl.SpinPoint(2.0, 0.1, 0.3)) == 2.0
    assert po.point_bracket(tt, "S+", "S-", fl.SpinPoint(0, 0, 1.2)) == -2.4
    p = random_dual_point(rng)
    for a in ("S+", "S-", "Sz"):
        for b in ("S+", "S-", "Sz"):
            assert po.point_bracket(ts, a, b, p) == 0
    north = fl.DualPoint(0, 0, 1.0, 0.3, 0.3, 0.0)
    assert po.point_bracket(tc, "Sx", "Sigx", north) == -1.0
    with pytest.raises(KeyError):
        po.point_bracket(tt, "Sig+", "Sz", p)


def test_bracket_antisymmetry(tables, rng):
    _, ts, _ = tables
    p = random_dual_point(rng)
    vals = po.table_values(ts, p)
    jac = ts.jac(vals)
    assert np.max(np.abs(jac + jac.T)) == 0.0


def test_pm_and_cartesian_tables_agree_on_shell(tables, rng):
    """The closed-form ladder-field table is the Cartesian one rewritten with the
    Casimir; both give the same numbers at constraint-satisfying points."""
    _, ts, tc = tables
    for _ in range(5):
        p = random_dual_point(rng)
        got = po.point_bracket(ts, "S+", "Sig-", p)
        # {Sx+iSy, Sigx-iSigy} expanded through the Cartesian table
        want = (po.point_bracket(tc, "Sx", "Sigx", p)
                - 1j * po.point_bracket(tc, "Sx", "Sigy", p)
                + 1j * po.point_bracket(tc, "Sy", "Sigx", p)
                + po.point_bracket(tc, "Sy", "Sigy", p))
        assert abs(got - want) < 1e-13


def test_jacobi_residual(tables, rng):
    for t in tables:
        worst = 0.0
        for _ in range(100):
            p = random_dual_point(rng)
            worst = max(worst, po.jacobi_residual(t, p))
        assert worst < 1e-12


def test_jacobi_detects_sign_flip(rng):
    # flipping {Sig+, Sig-} leaves the antisymmetry intact but breaks Jacobi
    t = po.equal_space_table()
    table = dict(t.table)
    table[(3, 4)] = -table[(3, 4)]
    broken = po.BracketTable("equal_space", t.fields, table)
    p = random_dual_point(rng)
    assert po.jacobi_residual(broken, p) > 1e-2
    # the sl2 {S+,S-} rescaling is an isomorphism; distorting {S+,Sz} is not
    tt = po.equal_time_table()
    table = dict(tt.table)
    table[(0, 2)] = (1.0 + 1e-3) * table[(0, 2)]
    scaled = po.BracketTable("equal_time", tt.fields, table)
    p2 = random_spin_point(rng)
    assert po.jacobi_residual(scaled, p2) > 1e-4


def test_casimir_centrality_algebraic(tables, rng):
    """J grad(c^2) and J grad(ctilde) vanish as exact polynomials."""
    tt, ts, _ = tables
    n = 3
    c2 = (po.Poly.var(n, 2) * po.Poly.var(n, 2)
          + po.Poly.var(n, 0) * po.Poly.var(n, 1))
    for i in range(3):
        flow = po.Poly(n)
        for j in range(3):
            flow = flow + c2.diff(j) * tt.structure(j, i)
        assert not flow.terms  # every monomial cancels exactly
    m = 6
    sp, sm, sz, gp, gm, gz = (po.Poly.var(m, k) for k in range(6))
    ctil = 2.0 * sz * gz + sp * gm + sm * gp
    c2d = sz * sz + sp * sm
    for target in (ctil, c2d):
        for i in range(6):
            flow = po.Poly(m)
            for j in range(6):
                flow = flow + target.diff(j) * ts.structure(j, i)
            assert not flow.terms


def test_functional_bracket_antisymmetry_and_self(rng):
    spec = fl.GridSpec(32, np.pi)
    g = fl.make_spin_data(spec, 1.0, "twist", seed=1, amplitude=0.3)
    t = po.equal_time_table()

    def f_one(grid):
        return fl.integrate(grid.sz**2, grid.spec)

    def f_two(grid):
        return fl.integrate(grid.sp * grid.sm * grid.sz, grid.spec)

    assert po.functional_bracket(f_one, f_one, g, t) == 0
    ab = po.functional_bracket(f_one, f_two, g, t)
    ba = po.functional_bracket(f_two, f_one, g, t)
    assert abs(ab + ba) < 1e-10 * max(1.0, abs(ab))


def charge_functional(k):
    def func(grid):
        c = grid.c
        dsp = fl.diff(grid.sp, grid.spec)
        dsm = fl.diff(grid.sm, grid.spec)
        dsz = fl.diff(grid.sz, grid.spec)
        if k == 0:
            return fl.integrate((grid.sp * dsm - dsp * grid.sm) / (c + grid.sz),
                                grid.spec) / (4 * c)
        return -fl.integrate(dsp * dsm + dsz**2, grid.spec) / (4 * c**3)
    return func


def test_charge_involution_decreases_under_refinement():
    t = po.equal_time_table()
    vals = []
    for n in (24, 48, 96):
        g = fl.make_spin_data(fl.GridSpec(n, np.pi), 1.0, "twist", seed=2,
                              amplitude=0.4)
        vals.append(abs(po.functional_bracket(charge_functional(0),
                                              charge_functional(1), g, t,
                                              h=1e-5)))
    assert vals[-1] < 1e-6  # smooth twist grid example tolerance
    order = np.log2(vals[0] / vals[2]) / 2
    assert order >= 2.0


def h_t_functional(grid):
    c = grid.c
    dp = fl.diff(grid.sp, grid.spec)
    dm = fl.diff(grid.sm, grid.spec)
    q = grid.gp * grid.gm + grid.gz**2
    dens = (dp * grid.sm - grid.sp * dm) / (c + grid.sz) + q / c**2
    return 0.5 * fl.integrate(dens, grid.spec)


def test_hamilton_flow_matches_dual_equations():
    """The bracket flow of the equal-space Hamiltonian is the closed-form
    space-evolution: S' = Sigma and the Sigma' equations."""
    spec = fl.GridSpec(128, np.pi, axis=fl.Axis.TIME)
    g = fl.make_dual_data(spec, 1.0, "twist", seed=4, amplitude=0.25,
                          sigma_amplitude=0.2)
    t = po.equal_space_table()

    res = po.hamilton_flow_residual(
        h_t_functional, g, lambda grid: dy.dual_space_rhs(grid, "paper"), t,
        h=1e-5)
    assert res < 1e-5
    flow = po.hamilton_flow(h_t_functional, g, t, h=1e-5)
    target = dy.dual_space_rhs(g, "paper")
    assert np.max(np.abs(flow[:3] - target[:3])) < 1e-6  # S' = Sigma
    assert np.max(np.abs(flow[3:] - target[3:])) < 1e-5


def test_casimir_flow_vanishes():
    spec = fl.GridSpec(48, np.pi, axis=fl.Axis.TIME)
    g = fl.make_dual_data(spec, 1.0, "twist", seed=4, amplitude=0.25)
    t = po.equal_space_table()

    def casimir_func(grid):
        return fl.integrate(grid.sz**2 + grid.sp * grid.sm, grid.spec)

    flow = po.hamilton_flow(casimir_func, g, t, h=1e-5)
    assert np.max(np.abs(flow)) < 1e-8


def test_canonical_coords(rng):
    sig0 = fl.DualPoint(0.6 + 0.48j, 0.6 - 0.48j, 0.4, 0, 0, 0)
    c0 = po.canonical_coords(sig0, c=1.0)
    assert c0.phi1 == 0 and c0.phi2 == 0
    # direct formula check at S = c(1,1,1)/sqrt(3)
    s = 1.0 / np.sqrt(3.0)
    p = fl.DualPoint(s + 1j * s, s - 1j * s, s, 0.3 + 0.1j, 0.3 - 0.1j, -0.6)
    got = po.canonical_coords(p, c=1.0)
    gx, gy, gz = 0.3, 0.1, -0.6
    assert abs(got.psi1 - s**2) < 1e-15
    assert abs(got.phi1 - (gz / s - gx / s) / 2) < 1e-14
    assert abs(got.phi2 - (gz / s - gy / s) / 2) < 1e-14
    with pytest.raises(ZeroDivisionError):
        po.canonical_coords(fl.DualPoint(0.5, 0.5, np.sqrt(0.75)))


def test_canonical_brackets(rng):
    tc = po.equal_space_cartesian_table(1.0)
    worst = 0.0
    count = 0
    while count < 100:
        p = random_dual_point(rng, complexify=False)
        sx, sy, sz = fl.cartesian(p.spin)
        if min(abs(sx), abs(sy), abs(sz)) < 0.15:
            continue
        count += 1
        gx = (p.sig_plus + p.sig_minus) / 2
        gy = (p.sig_plus - p.sig_minus) / 2j
        gz = p.sig_z
        g_psi = ([2 * sx, 0, 0, 0, 0, 0], [0, 2 * sy, 0, 0, 0, 0])
        g_phi = ([gx / sx**2 / 2, 0, -gz / sz**2 / 2, -1 / (2 * sx), 0, 1 / (2 * sz)],
                 [0, gy / sy**2 / 2, -gz / sz**2 / 2, 0, -1 / (2 * sy), 1 / (2 * sz)])
        for i in range(2):
            for j in range(2):
                want = 1.0 if i == j else 0.0
                got = po.point_function_bracket(tc, g_psi[i], g_phi[j], p)
                worst = max(worst, abs(got - want))
        worst = max(worst, abs(po.point_function_bracket(tc, g_psi[0], g_psi[1], p)))
        worst = max(worst, abs(po.point_function_bracket(tc, g_phi[0], g_phi[1], p)))
    assert worst < 1e-10


def test_dual_casimir_functional_is_central():
    """The bracket of the equal-space Hamiltonian with the quadratic
    constraint functional vanishes."""
    spec = fl.GridSpec(48, np.pi, axis=fl.Axis.TIME)
    g = fl.make_dual_data(spec, 1.0, "twist", seed=4, amplitude=0.25,
                          sigma_amplitude=0.2)
    t = po.equal_space_table()

    def dual_casimir_func(grid):
        return fl.integrate(2 * grid.sz * grid.gz + grid.sp * grid.gm
                            + grid.sm * grid.gp, grid.spec)

    got = po.functional_bracket(h_t_functional, dual_casimir_func, g, t,
                                h=1e-5)
    assert abs(got) < 1e-8
