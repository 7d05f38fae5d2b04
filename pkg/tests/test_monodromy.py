import numpy as np
import pytest

from hmlab import fields as fl
from hmlab import hierarchy as hi
from hmlab import monodromy as mo
from hmlab.algebra import BoundaryParams, PoleError


@pytest.fixture(scope="module")
def twist():
    return fl.make_spin_data(fl.GridSpec(128, np.pi), 1.0, "twist", seed=2,
                             amplitude=0.5)


def test_north_pole_transport():
    g = fl.make_spin_data(fl.GridSpec(128, np.pi), 1.0, "north_pole")
    for lam in (0.5, 1.0, 0.3 + 0.4j):
        t = mo.full_transport(g, lam)
        want = np.diag([np.exp(np.pi / lam), np.exp(-np.pi / lam)])
        assert np.max(np.abs(t - want)) < 1e-10 * np.max(np.abs(want))
        assert abs(mo.transfer(g, lam) - 2 * np.cosh(np.pi / lam)) \
            < 1e-10 * abs(np.cosh(np.pi / lam))


def test_transport_semigroup_and_det(twist):
    lam = 0.9
    t_ab = mo.transport(twist, lam, 0, 50)
    t_bc = mo.transport(twist, lam, 50, 128)
    t_ac = mo.transport(twist, lam, 0, 128)
    assert np.max(np.abs(t_bc @ t_ab - t_ac)) < 1e-12 * np.max(np.abs(t_ac))
    assert abs(np.linalg.det(t_ac) - 1.0) < 1e-12
    # time orientation determinant needs the tangency constraint
    ts = fl.GridSpec(128, np.pi, axis=fl.Axis.TIME)
    gd = fl.make_dual_data(ts, 1.0, "twist", seed=3, amplitude=0.3)
    t_t = mo.full_transport(gd, 0.8)
    assert abs(np.linalg.det(t_t) - 1.0) < 1e-11


def test_transport_index_contract(twist):
    with pytest.raises(IndexError):
        mo.transport(twist, 0.9, 10, 5)
    with pytest.raises(PoleError):
        mo.transport(twist, 0.0, 0, 5)
    assert np.allclose(mo.transport(twist, 0.9, 7, 7), np.eye(2))


def test_step_halving_orders():
    ref = mo.transfer(fl.make_spin_data(fl.GridSpec(1024, np.pi), 1.0, "twist",
                                        seed=2, amplitude=0.5), 0.9,
                      richardson=True)
    for rich, want in ((False, 2.0), (True, 4.0)):
        errs = []
        for n in (64, 128, 256):
            g = fl.make_spin_data(fl.GridSpec(n, np.pi), 1.0, "twist", seed=2,
                                  amplitude=0.5)
            errs.append(abs(mo.transfer(g, 0.9, richardson=rich) - ref))
        order = np.log2(errs[0] / errs[2]) / 2
        assert order > want - 0.3


def test_dual_north_pole_time_transfer():
    ts = fl.GridSpec(128, np.pi, axis=fl.Axis.TIME)
    base = fl.make_spin_data(ts, 1.0, "north_pole")
    g = fl.attach_sigma(base, *np.zeros((3, 128)))
    lam = 0.8
    want = 2 * np.cosh(np.pi / lam**2)
    assert abs(mo.transfer(g, lam) - want) < 1e-10 * abs(want)


def test_transfer_consistent_with_charge_series(twist):
    big = fl.make_spin_data(fl.GridSpec(512, np.pi), 1.0, "twist", seed=3,
                            amplitude=0.3)
    ch = hi.charges(big, fl.Axis.SPACE, 2)
    errs = []
    for lam in (0.2, 0.1, 0.05):
        t = mo.transfer(big, lam, richardson=True)
        partial = ch[-1] / lam + ch[0] + lam * ch[1] + lam**2 * ch[2]
        errs.append(abs(np.log(t) - partial))
    # truncation error shrinks like lam^3
    assert errs[2] < 1e-4
    order = np.log2(errs[0] / errs[2]) / 2
    assert order > 2.5


def test_open_transfer_identity_k():
    spec = fl.GridSpec(129, np.pi, fl.Boundary.OPEN)
    g = fl.make_spin_data(spec, 1.0, "north_pole")
    lam = 0.7
    got = mo.open_transfer(g, lam)
    want = 2 * np.cosh(2 * np.pi / lam)
    assert abs(got - want) < 1e-10 * abs(want)


def test_open_transfer_scaling_bilinearity():
    spec = fl.GridSpec(129, np.pi, fl.Boundary.OPEN)
    g = fl.make_spin_data(spec, 1.0, "fourier_random", seed=6, amplitude=0.4)
    kp = BoundaryParams(0.7 + 0.1j, 0.3, -0.2, 0.4)
    km = BoundaryParams(1.2, -0.5, 0.15, 0.2j)
    s = 1.7 - 0.6j
    kp_s = BoundaryParams(s * kp.alpha, s * kp.beta, s * kp.gamma, s * kp.delta)
    km_s = BoundaryParams(s * km.alpha, s * km.beta, s * km.gamma, s * km.delta)
    lam = 0.8
    t1 = mo.open_transfer(g, lam, kplus=kp, kminus=km)
    t2 = mo.open_transfer(g, lam, kplus=kp_s, kminus=km_s)
    assert abs(t2 - s**2 * t1) < 1e-11 * abs(t2)


def test_open_transfer_requires_open_grid(twist):
    with pytest.raises(ValueError):
        mo.open_transfer(twist, 0.7)


def test_diagonalization_residual(twist):
    g = fl.make_spin_data(fl.GridSpec(128, np.pi), 1.0, "north_pole")
    assert mo.diagonalization_residual(g, 0.3, k_max=0) < 1e-12
    res = [mo.diagonalization_residual(twist, 0.05, k_max=k) for k in (0, 1, 2)]
    assert res[0] > res[1] > res[2]
    # time orientation with on-shell-style Sigma data
    ts = fl.GridSpec(128, np.pi, axis=fl.Axis.TIME)
    gd = fl.make_dual_data(ts, 1.0, "twist", seed=3, amplitude=0.25,
                           sigma_amplitude=0.2)
    res_t = [mo.diagonalization_residual(gd, 0.2, fl.Axis.TIME, k_max=k)
             for k in (0, 1, 2)]
    assert res_t[0] > res_t[1] > res_t[2]


def test_scan_and_defaults(twist):
    lams = mo.default_lambdas()
    assert len(lams) == 12
    vals = mo.scan(twist, lams[:3])
    vals2 = mo.scan(twist, lams[:3])
    assert np.array_equal(vals, vals2)  # deterministic
    assert np.all(np.isfinite(vals))


def test_series_divergence_flag(twist):
    assert not mo.series_diverging(twist, 0.05)
    assert mo.series_diverging(twist, 5.0)
