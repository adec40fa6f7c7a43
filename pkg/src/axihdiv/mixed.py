"""Mixed discretization of the weighted Poisson problem.

Find ``z_h`` in C_h and ``p_h`` in D_h with

    (z_h, w)_r - (p_h, div^k w)_r = 0         for all w in C_h,
    (div^k z_h, s)_r              = (f, s)_r  for all s in D_h.

The pressure vanishes weakly on the outer boundary; no condition is imposed
on the flux.
"""

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import sympy
from scipy.sparse.linalg import splu

from .assembly import assemble_div, assemble_mass_c, assemble_mass_d, l2r_error
from .mesh import MeshHierarchy, MeshLevel
from .quadrature import NORM_DEGREE, triangle_rule
from .spaces import check_mode, pi_S

__all__ = [
    "ManufacturedSolution",
    "manufactured_solution",
    "SaddleSystem",
    "assemble_saddle",
    "solve_mixed",
    "ErrorRow",
    "error_table",
    "error_table_csv",
]


@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form evaluators ``p(r, z)``, ``z(r, z) -> (3, ...)``, ``f(r, z)``."""

    k: int
    p: object
    z: object
    f: object


@lru_cache(maxsize=None)
def manufactured_solution(k) -> ManufacturedSolution:
    """Smooth pressure vanishing on the outer boundary of the unit square,
    its flux ``z = -grad^{k*} p`` and the source ``f = div^k z``."""
    k = check_mode(k)
    r, zz = sympy.symbols("r z", positive=True)
    pi = sympy.pi
    p = sympy.sin(pi * zz) * sympy.cos(pi * r / 2) * r**2
    zr = -2 * r * sympy.cos(pi * r / 2) * sympy.sin(pi * zz) \
        + r**2 * pi * sympy.sin(pi * r / 2) * sympy.sin(pi * zz) / 2
    zt = -k * r * sympy.sin(pi * zz) * sympy.cos(pi * r / 2)
    zz_ = -r**2 * pi * sympy.cos(pi * r / 2) * sympy.cos(pi * zz)
    f = sympy.simplify(sympy.diff(zr, r) + (zr - k * zt) / r + sympy.diff(zz_, zz))

    p_fn = sympy.lambdify((r, zz), p, "numpy")
    z_fns = [sympy.lambdify((r, zz), c, "numpy") for c in (zr, zt, zz_)]
    f_fn = sympy.lambdify((r, zz), f, "numpy")

    def z_fn(rv, zv):
        rv, zv = np.broadcast_arrays(np.asarray(rv, float), np.asarray(zv, float))
        return np.stack([np.broadcast_to(g(rv, zv), rv.shape) for g in z_fns])

    def f_fn_b(rv, zv):
        rv, zv = np.broadcast_arrays(np.asarray(rv, float), np.asarray(zv, float))
        return np.broadcast_to(f_fn(rv, zv), rv.shape)

    return ManufacturedSolution(k, p_fn, z_fn, f_fn_b)


@dataclass(eq=False)
class SaddleSystem:
    mass_c: sp.csr_matrix
    div: sp.csr_matrix
    mass_d: sp.csr_matrix

    @property
    def matrix(self):
        """Symmetric indefinite block matrix ``[[M_C, -B^T], [-B, 0]]``."""
        return sp.bmat([[self.mass_c, -self.div.T], [-self.div, None]], format="csc")


def assemble_saddle(level: MeshLevel, k) -> SaddleSystem:
    return SaddleSystem(assemble_mass_c(level, k), assemble_div(level, k), assemble_mass_d(level))


def _load_d(level, f, degree=NORM_DEGREE):
    rule = triangle_rule(degree)
    x = rule.physical_points(level.coords)
    vals = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
    return (vals * x[..., 0] * rule.weights[None, :]).sum(1) * level.areas


def solve_mixed(level: MeshLevel, k, f, system=None, return_residual=False):
    """Coefficients ``(z_h, p_h)`` of the discrete mixed problem.

    ``f`` is a scalar field ``f(r, z)``; it enters through its moments
    ``int_K f r``.  With ``return_residual`` the relative residuals of the
    two block equations are returned as well.
    """
    k = check_mode(k)
    S = assemble_saddle(level, k) if system is None else system
    F = _load_d(level, f)
    nc = S.mass_c.shape[0]
    rhs = np.concatenate([np.zeros(nc), -F])
    sol = splu(S.matrix).solve(rhs)
    zh, ph = sol[:nc], sol[nc:]
    if not return_residual:
        return zh, ph
    r1 = S.mass_c @ zh - S.div.T @ ph
    r2 = S.div @ zh - F
    scale1 = max(np.abs(S.mass_c @ zh).max(), np.abs(S.div.T @ ph).max(), 1e-300)
    scale2 = max(np.abs(F).max(), 1e-300)
    return zh, ph, (np.abs(r1).max() / scale1, np.abs(r2).max() / scale2)


@dataclass
class ErrorRow:
    level: int
    err_z: float
    err_p: float
    err_pis: float
    rate_z: float = float("nan")
    rate_p: float = float("nan")
    rate_pis: float = float("nan")


def _rate(prev, cur):
    return float(np.log2(prev / cur))


def error_table(domain, k, max_level, min_level=1):
    """Errors of the mixed method against the manufactured solution, with
    rates ``log2(e_{l-1} / e_l)``."""
    ms = manufactured_solution(k)
    H = MeshHierarchy.build(domain, max_level)
    rows = []
    for l in range(min_level, max_level + 1):
        L = H.levels[l - 1]
        zh, ph = solve_mixed(L, k, ms.f)
        ez = l2r_error(L, "C", zh, ms.z, k=k)
        ep = l2r_error(L, "D", ph, ms.p)
        d = pi_S(ms.p, L) - ph
        es = float(np.sqrt(d @ (assemble_mass_d(L) @ d)))
        row = ErrorRow(l, ez, ep, es)
        if rows:
            prev = rows[-1]
            row.rate_z = _rate(prev.err_z, ez)
            row.rate_p = _rate(prev.err_p, ep)
            row.rate_pis = _rate(prev.err_pis, es)
        rows.append(row)
    return rows


CSV_HEADER = "level,err_z,rate_z,err_p,rate_p,err_PiSp,rate_PiSp"


def error_table_csv(rows):
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        vals = [r.err_z, r.rate_z, r.err_p, r.rate_p, r.err_pis, r.rate_pis]
        buf.write(str(r.level) + "," + ",".join("" if np.isnan(v) else repr(float(v)) for v in vals) + "\n")
    return buf.getvalue()
