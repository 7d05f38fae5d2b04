import numpy as np
import pytest

from hmlab import dynamics as dy
from hmlab import fields as fl
from hmlab import lax as lx


def random_sphere_vec(rng, c=1.0, complexify=True):
    n = rng.normal(size=3) + (0.4j * rng.normal(size=3) if complexify else 0.0)
    n = n / np.sqrt(np.sum(n * n))
    return c * n


def random_spin_point(rng, c=1.0, complexify=True) -> fl.SpinPoint:
    s = random_sphere_vec(rng, c, complexify)
    return fl.SpinPoint(s[0] + 1j * s[1], s[0] - 1j * s[1], s[2])


def random_dual_point(rng, c=1.0, complexify=True) -> fl.DualPoint:
    s = random_sphere_vec(rng, c, complexify)
    sig = rng.normal(size=3) + (0.3j * rng.normal(size=3) if complexify else 0.0)
    sig = sig - (np.sum(s * sig) / c**2) * s
    return fl.DualPoint(s[0] + 1j * s[1], s[0] - 1j * s[1], s[2],
                        sig[0] + 1j * sig[1], sig[0] - 1j * sig[1], sig[2])


def hm_patch(n_x, n_samples=13, seed=4, amp=0.35, convention="real",
             dt_factor=0.05):
    """Magnet-flow patch with time sampling comparable to the grid spacing."""
    spec = fl.GridSpec(n_x, np.pi)
    g = fl.make_spin_data(spec, 1.0, "twist", seed=seed, amplitude=amp)
    dt = dt_factor * spec.spacing**2
    m = max(1, round(spec.spacing / dt))
    cfg = dy.EvolutionConfig(step=dt, n_steps=m * (n_samples - 1),
                             convention=convention, snapshot_stride=m,
                             monitors=())
    tr = dy.evolve(g, "hm", cfg)
    return tr, lx.patch_from_trajectory(tr.times, tr.snapshots, convention)


def higher_patch(n_t, n_samples=13, seed=6, amp=0.3, convention="paper",
                 kind="higher"):
    """Order-2 dual-flow patch; short spatial extent keeps the sideways
    growth of roundoff modes far below the stencil error."""
    spec = fl.GridSpec(n_t, np.pi, axis=fl.Axis.TIME)
    g = fl.make_dual_data(spec, 1.0, "twist", seed=seed, amplitude=amp,
                          sigma_amplitude=0.25)
    step = 0.05 * spec.spacing**2
    m = max(1, round(spec.spacing / 4.0 / step))
    cfg = dy.EvolutionConfig(step=step, n_steps=m * (n_samples - 1),
                             convention=convention, snapshot_stride=m,
                             monitors=())
    tr = dy.evolve(g, kind, cfg)
    return tr, lx.patch_from_trajectory(tr.times, tr.snapshots, convention)


def pooled_order(errs, ratio):
    """Least-squares slope assuming a constant refinement ratio."""
    errs = np.asarray(errs, dtype=float)
    steps = len(errs) - 1
    return float(np.log(errs[0] / errs[-1]) / (steps * np.log(ratio)))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
