"""Sparse weighted operators on one mesh level.

All matrices come from element loops with dense local blocks; duplicates
are summed when converting to CSR.  The weight r is folded into the
integrands, which are polynomial, so fixed Gauss rules integrate them exactly.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .mesh import MeshLevel
from .quadrature import ASSEMBLY_DEGREE, NORM_DEGREE, triangle_rule
from .spaces import (
    c_basis_values,
    c_div_values,
    c_local_dofs,
    check_mode,
    evaluate,
)

__all__ = [
    "assemble_mass_c",
    "assemble_mass_d",
    "assemble_div",
    "assemble_divdiv",
    "assemble_lambda",
    "assemble_load",
    "l2r_error",
    "grad_h",
    "lambda_norm",
    "write_coo",
]


def _scatter(level, local, ndofs):
    dofs = c_local_dofs(level)
    rows = np.repeat(dofs, 4, axis=1).ravel()
    cols = np.tile(dofs, (1, 4)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(ndofs, ndofs))


def _int_r(level):
    # r is affine, so its integral is |K| times r at the centroid
    return level.areas * level.coords[:, :, 0].mean(axis=1)


def assemble_mass_c(level: MeshLevel, k, degree=ASSEMBLY_DEGREE):
    """L2_r mass matrix of C_h."""
    k = check_mode(k)
    rule = triangle_rule(degree)
    phi = c_basis_values(level, k, rule.points)
    x = rule.physical_points(level.coords)
    w = rule.weights[None, :] * level.areas[:, None] * x[..., 0]
    local = np.einsum("tq,tqic,tqjc->tij", w, phi, phi)
    return _scatter(level, local, level.ne + level.nt)


def assemble_mass_d(level: MeshLevel):
    """Diagonal L2_r mass matrix of D_h."""
    return sp.diags(_int_r(level)).tocsr()


def assemble_div(level: MeshLevel, k):
    """Coupling B with ``B[K, j] = int_K div^k(phi_j) r``."""
    k = check_mode(k)
    vals = c_div_values(level, k) * _int_r(level)[:, None]
    rows = np.repeat(np.arange(level.nt), 4)
    return sp.csr_matrix(
        (vals.ravel(), (rows, c_local_dofs(level).ravel())),
        shape=(level.nt, level.ne + level.nt),
    )


def assemble_divdiv(level: MeshLevel, k):
    """The (div^k u, div^k v)_r block."""
    d = c_div_values(level, check_mode(k))
    local = _int_r(level)[:, None, None] * d[:, :, None] * d[:, None, :]
    return _scatter(level, local, level.ne + level.nt)


def assemble_lambda(level: MeshLevel, k):
    """The H_r(div^k) inner product matrix on C_h (symmetric positive definite)."""
    A = assemble_mass_c(level, k) + assemble_divdiv(level, k)
    A.sort_indices()
    return A


def assemble_load(level: MeshLevel, k, F, degree=NORM_DEGREE):
    """Entries ``(F, phi_j)_r`` for a vector field ``F(r, z)``."""
    k = check_mode(k)
    rule = triangle_rule(degree)
    phi = c_basis_values(level, k, rule.points)
    x = rule.physical_points(level.coords)
    vals = np.moveaxis(np.asarray(F(x[..., 0], x[..., 1]), dtype=float), 0, -1)
    w = rule.weights[None, :] * level.areas[:, None] * x[..., 0]
    local = np.einsum("tq,tqic,tqc->ti", w, phi, vals)
    return np.bincount(
        c_local_dofs(level).ravel(), local.ravel(), minlength=level.ne + level.nt
    )


def l2r_error(level: MeshLevel, space, coeffs, exact=None, k=1, weight=1,
              degree=NORM_DEGREE, per_triangle=False):
    """Weighted L2 distance between a discrete function and a field.

    The norm is ``sqrt(sum_K int_K |u_h - u|^2 r^weight)``; ``exact=None``
    gives the norm of ``u_h`` itself.
    """
    rule = triangle_rule(degree)
    uh = evaluate(level, space, coeffs, rule.points, k=k)
    x = rule.physical_points(level.coords)
    diff = uh
    if exact is not None:
        ex = np.asarray(exact(x[..., 0], x[..., 1]), dtype=float)
        ex = ex[..., None] if ex.ndim == 2 else np.moveaxis(ex, 0, -1)
        diff = uh - ex
    w = rule.weights[None, :] * level.areas[:, None] * x[..., 0] ** weight
    local = np.einsum("tq,tqc,tqc->t", w, diff, diff)
    return local if per_triangle else float(np.sqrt(local.sum()))


def grad_h(level: MeshLevel, k, d, mass_c=None, div=None):
    """Discrete gradient D_h -> C_h: the L2_r adjoint of -div^k.

    Solves ``M_C g = -B^T d``.
    """
    M = assemble_mass_c(level, k) if mass_c is None else mass_c
    B = assemble_div(level, k) if div is None else div
    return splu(M.tocsc()).solve(-(B.T @ np.asarray(d, dtype=float)))


def lambda_norm(A, x):
    return float(np.sqrt(max(x @ (A @ x), 0.0)))


def write_coo(A, path):
    """Write a sparse matrix as ``row col value`` lines (0-based)."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    with open(path, "w") as fh:
        for i, j, v in zip(C.row[order], C.col[order], C.data[order]):
            fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")
