"""Equal-time and equal-space Poisson structures on the grid.

Point brackets are stored as exact polynomials in the local field values, so
the Jacobi identity can be checked at a point by exact differentiation of the
structure functions.  Functional brackets discretize the ultralocal delta as
delta_{mn}/dx and differentiate functionals numerically (central differences
with one Richardson sweep).

Three tables are provided: the equal-time exchange relations in the ladder
fields, the equal-space table in the ladder fields, and the equal-space table
in Cartesian components (the latter carries the Casimir constant c^2 in its
constant terms and is the natural home of the canonical coordinates).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import fields as fl

PM_FIELDS = ("S+", "S-", "Sz")
PM_DUAL_FIELDS = ("S+", "S-", "Sz", "Sig+", "Sig-", "Sigz")
CART_FIELDS = ("Sx", "Sy", "Sz", "Sigx", "Sigy", "Sigz")


class Poly:
    """Sparse multivariate polynomial with complex coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for expo, coef in terms.items():
                if coef != 0:
                    self.terms[tuple(expo)] = complex(coef)

    @classmethod
    def const(cls, nvars: int, value: complex) -> "Poly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        expo = [0] * nvars
        expo[i] = 1
        return cls(nvars, {tuple(expo): 1.0})

    def _binary(self, other, sign):
        if not isinstance(other, Poly):
            other = Poly.const(self.nvars, other)
        out = dict(self.terms)
        for expo, coef in other.terms.items():
            out[expo] = out.get(expo, 0.0) + sign * coef
        return Poly(self.nvars, out)

    def __add__(self, other):
        return self._binary(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __rsub__(self, other):
        return (-self)._binary(other, 1.0)

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.nvars, {e: c * other for e, c in self.terms.items()})
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def diff(self, i: int) -> "Poly":
        out = {}
        for expo, coef in self.terms.items():
            if expo[i] == 0:
                continue
            e = list(expo)
            e[i] -= 1
            out[tuple(e)] = out.get(tuple(e), 0.0) + coef * expo[i]
        return Poly(self.nvars, out)

    def eval(self, values) -> complex | np.ndarray:
        """Evaluate at a point (sequence of scalars or broadcastable arrays)."""
        acc = 0.0
        for expo, coef in self.terms.items():
            term = coef
            for i, e in enumerate(expo):
                if e:
                    term = term * np.asarray(values[i]) ** e
            acc = acc + term
        return acc


@dataclass
class BracketTable:
    kind: str
    fields: tuple
    table: dict  # (i, j) with i < j -> Poly

    @property
    def nvars(self) -> int:
        return len(self.fields)

    def index(self, name: str) -> int:
        return self.fields.index(name)

    def structure(self, i: int, j: int) -> Poly:
        if i == j:
            return Poly(self.nvars)
        if i < j:
            return self.table.get((i, j), Poly(self.nvars))
        return -self.table.get((j, i), Poly(self.nvars))

    def jac(self, values) -> np.ndarray:
        """Antisymmetric structure matrix J_ij = {u_i, u_j} at field values.

        Broadcasts: scalar values give (n, n); arrays give (n, n) + shape.
        """
        probe = np.asarray(values[0])
        n = self.nvars
        out = np.zeros((n, n) + probe.shape, dtype=complex)
        for (i, j), poly in self.table.items():
            val = poly.eval(values)
            out[i, j] = val
            out[j, i] = -val
        return out


def equal_time_table() -> BracketTable:
    """Ladder-field exchange relations {S+-, Sz} = +-S+-, {S+, S-} = -2Sz."""
    n = 3
    sp, sm, sz = (Poly.var(n, i) for i in range(3))
    table = {
        (0, 1): -2.0 * sz,
        (0, 2): sp,
        (1, 2): -1.0 * sm,
    }
    return BracketTable("equal_time", PM_FIELDS, table)


def equal_space_table() -> BracketTable:
    """Equal-space brackets of the six ladder fields.

    The ladder {S+, Sig-} structure is stored as -(2 Sz^2 + S+ S-); it
    matches the Cartesian table on the Casimir surface.
    """
    n = 6
    sp, sm, sz, gp, gm, gz = (Poly.var(n, i) for i in range(6))
    cross = -(2.0 * sz * sz + sp * sm)
    table = {
        (0, 3): sp * sp,
        (0, 4): cross,
        (0, 5): sp * sz,
        (1, 3): cross,
        (1, 4): sm * sm,
        (1, 5): sm * sz,
        (2, 3): sp * sz,
        (2, 4): sm * sz,
        (2, 5): -1.0 * sp * sm,
        (3, 4): sp * gm - gp * sm,
        (3, 5): sp * gz - gp * sz,
        (4, 5): sm * gz - gm * sz,
    }
    return BracketTable("equal_space", PM_DUAL_FIELDS, table)


def equal_space_cartesian_table(c: complex = 1.0) -> BracketTable:
    """Equal-space brackets of the Cartesian components.

    {S_i, S_j} = 0, {S_i, Sig_j} = S_i S_j - c^2 delta_ij,
    {Sig_i, Sig_j} = S_i Sig_j - S_j Sig_i.
    """
    n = 6
    s = [Poly.var(n, i) for i in range(3)]
    g = [Poly.var(n, i + 3) for i in range(3)]
    c2 = Poly.const(n, c * c)
    table = {}
    for i in range(3):
        for j in range(3):
            poly = s[i] * s[j]
            if i == j:
                poly = poly - c2
            table[(i, j + 3)] = poly
    for i in range(3):
        for j in range(i + 1, 3):
            table[(i + 3, j + 3)] = s[i] * g[j] - s[j] * g[i]
    return BracketTable("equal_space_cartesian", CART_FIELDS, table)


def table_values(t: BracketTable, p) -> list:
    """Field values of a point in the order of the table's variables."""
    if t.kind == "equal_time":
        return [p.s_plus, p.s_minus, p.s_z]
    if t.kind == "equal_space":
        return [p.s_plus, p.s_minus, p.s_z, p.sig_plus, p.sig_minus, p.sig_z]
    sx, sy, sz = fl.cartesian(p.spin if isinstance(p, fl.DualPoint) else p)
    gx = (p.sig_plus + p.sig_minus) / 2.0
    gy = (p.sig_plus - p.sig_minus) / 2.0j
    return [sx, sy, sz, gx, gy, p.sig_z]


def point_bracket(t: BracketTable, f: str, g: str, p) -> complex:
    """Delta-stripped bracket {f, g} evaluated at the point."""
    for name in (f, g):
        if name not in t.fields:
            raise KeyError(f"field {name!r} not in {t.kind} table")
    values = table_values(t, p)
    return complex(t.structure(t.index(f), t.index(g)).eval(values))


def jacobi_residual(t: BracketTable, p) -> float:
    """Max over field triples of |{{f,g},h} + {{g,h},f} + {{h,f},g}|.

    Inner brackets are expanded exactly: {{f,g},h} = sum_l dP_fg/du_l P_lh.
    """
    values = table_values(t, p)
    n = t.nvars

    def double(i, j, k):
        acc = 0.0
        pij = t.structure(i, j)
        for l in range(n):
            d = pij.diff(l)
            if not d.terms:
                continue
            acc = acc + d.eval(values) * t.structure(l, k).eval(values)
        return acc

    worst = 0.0
    for i, j, k in itertools.combinations(range(n), 3):
        total = double(i, j, k) + double(j, k, i) + double(k, i, j)
        worst = max(worst, abs(total))
    return float(worst)


def point_function_bracket(t: BracketTable, grad_f, grad_g, p) -> complex:
    """{F, G} at a point for scalar functions with supplied gradients.

    Gradients are sequences of partial derivatives in the table's field
    order, evaluated at the point.
    """
    values = table_values(t, p)
    jac = t.jac(values)
    gf = np.asarray(grad_f, dtype=complex)
    gg = np.asarray(grad_g, dtype=complex)
    return complex(gf @ jac @ gg)


# ---------------------------------------------------------------------------
# functional brackets on grids

def _grid_fields(t: BracketTable, g: fl.SpinGrid) -> list:
    if t.kind == "equal_time":
        return [g.sp, g.sm, g.sz]
    if t.kind == "equal_space":
        return [g.sp, g.sm, g.sz, g.gp, g.gm, g.gz]
    sx = (g.sp + g.sm) / 2.0
    sy = (g.sp - g.sm) / 2.0j
    gx = (g.gp + g.gm) / 2.0
    gy = (g.gp - g.gm) / 2.0j
    return [sx, sy, g.sz, gx, gy, g.gz]


def _stack_for_table(t: BracketTable, g: fl.SpinGrid) -> np.ndarray:
    return np.stack(_grid_fields(t, g))


def _grid_from_stack(t: BracketTable, g: fl.SpinGrid, u: np.ndarray) -> fl.SpinGrid:
    if t.kind == "equal_time":
        return fl.SpinGrid(g.spec, g.c, u[0], u[1], u[2])
    if t.kind == "equal_space":
        return fl.DualGrid(g.spec, g.c, u[0], u[1], u[2], u[3], u[4], u[5])
    sp = u[0] + 1j * u[1]
    sm = u[0] - 1j * u[1]
    gp = u[3] + 1j * u[4]
    gm = u[3] - 1j * u[4]
    return fl.DualGrid(g.spec, g.c, sp, sm, u[2], gp, gm, u[5])


def grad_functional(F, g: fl.SpinGrid, t: BracketTable,
                    h: float | None = None) -> np.ndarray:
    """dF/du_{i,n} by central differences with one Richardson sweep.

    Functionals must be complex-analytic in the nodal values (every
    quantity in this package is), so a real step probes the full complex
    derivative.
    """
    u0 = _stack_for_table(t, g)
    scale = max(1.0, float(np.max(np.abs(u0))))
    h = 1e-6 * scale if h is None else h

    def _diff_at(step):
        out = np.empty_like(u0)
        work = u0.copy()
        for i in range(u0.shape[0]):
            for nidx in range(u0.shape[1]):
                keep = work[i, nidx]
                work[i, nidx] = keep + step
                fp = F(_grid_from_stack(t, g, work))
                work[i, nidx] = keep - step
                fm = F(_grid_from_stack(t, g, work))
                work[i, nidx] = keep
                out[i, nidx] = (fp - fm) / (2.0 * step)
        return out

    d1 = _diff_at(h)
    d2 = _diff_at(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def functional_bracket(F, G, g: fl.SpinGrid, t: BracketTable,
                       h: float | None = None) -> complex:
    """Discrete ultralocal bracket sum_n (dF)^T J(u_n) (dG) / dx."""
    if F is G:
        return 0.0 + 0.0j
    gf = grad_functional(F, g, t, h)
    gg = grad_functional(G, g, t, h)
    jac = t.jac(_grid_fields(t, g))  # (nf, nf, n)
    contracted = np.einsum("in,ijn,jn->", gf, jac, gg)
    return complex(contracted / g.spec.spacing)


def hamilton_flow(charge, g: fl.SpinGrid, t: BracketTable,
                  h: float | None = None) -> np.ndarray:
    """{charge, u_{j,m}} for every field and node; shape (nf, n)."""
    gc = grad_functional(charge, g, t, h)
    jac = t.jac(_grid_fields(t, g))
    return np.einsum("im,ijm->jm", gc, jac) / g.spec.spacing


def hamilton_flow_residual(charge, g: fl.SpinGrid, rhs, t: BracketTable,
                           h: float | None = None) -> float:
    """Max deviation between the bracket flow of `charge` and `rhs(g)`.

    ``rhs`` returns field increments in the table's field order.
    """
    flow = hamilton_flow(charge, g, t, h)
    target = np.asarray(rhs(g))
    return float(np.max(np.abs(flow - target)))


# ---------------------------------------------------------------------------
# canonical coordinates

@dataclass(frozen=True)
class CanonicalPoint:
    psi1: complex
    psi2: complex
    phi1: complex
    phi2: complex


def canonical_coords(p: fl.DualPoint, c: complex | None = None,
                     guard: float = 1e-8) -> CanonicalPoint:
    """Darboux pair (psi_i, phi_i) of the equal-space structure.

    psi1 = Sx^2, phi1 = (Sigz/Sz - Sigx/Sx)/(2 c^2), and the y-analogues.
    Defined away from the coordinate planes S_x S_y S_z = 0.
    """
    sx, sy, sz = fl.cartesian(p.spin)
    gx = (p.sig_plus + p.sig_minus) / 2.0
    gy = (p.sig_plus - p.sig_minus) / 2.0j
    gz = p.sig_z
    c = np.sqrt(fl.casimir(p.spin)) if c is None else c
    if min(abs(sx), abs(sy), abs(sz)) < guard:
        raise ZeroDivisionError("canonical coordinates singular: a Cartesian "
                                "spin component is (numerically) zero")
    phi1 = (gz / sz - gx / sx) / (2.0 * c**2)
    phi2 = (gz / sz - gy / sy) / (2.0 * c**2)
    return CanonicalPoint(sx**2, sy**2, phi1, phi2)
