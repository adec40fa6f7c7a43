"""Executable checks of the structural identities of the discretization."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import assemble_lambda, assemble_mass_c, assemble_div, grad_h, l2r_error
from .mesh import MeshHierarchy, MeshLevel
from .multigrid import build_prolongation
from .quadrature import triangle_rule
from .spaces import (
    check_mode,
    curl_b_coeffs,
    curl_matrix,
    div_k,
    div_matrix,
    grad_a_coeffs,
    grad_matrix,
    interp_canonical_c,
    interp_tilde_c,
    interp_tilde_d,
    weighted_clement,
    clement_nedelec,
)

__all__ = [
    "CheckResult",
    "numeric_rank",
    "check_complex",
    "check_commuting_interp",
    "check_helmholtz",
    "check_transfer",
    "run_suite",
    "SUITES",
    "interpolation_errors",
    "fitted_slope",
]

RANK_TOL = 1e-10


@dataclass
class CheckResult:
    """Outcome of one check.  Composite checks carry their sub-results in
    ``parts`` and use the number of failing parts as residual."""

    name: str
    residual: float
    tolerance: float
    parts: list = field(default_factory=list)

    @property
    def passed(self):
        return bool(self.residual <= self.tolerance) and all(p.passed for p in self.parts)

    @property
    def status(self):
        return "Pass" if self.passed else "Fail"

    def lines(self, indent=""):
        out = [f"{indent}{self.status:4s}  {self.name}  residual={self.residual:.3e}  tol={self.tolerance:.1e}"]
        for p in self.parts:
            out.extend(p.lines(indent + "  "))
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _composite(name, parts):
    # the composite residual counts failing parts
    return CheckResult(name, float(sum(not p.passed for p in parts)), 0.0, parts)


def numeric_rank(A, tol=RANK_TOL):
    """Rank from a column-pivoted QR: pivots above ``tol`` times the largest."""
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    R = sla.qr(A, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(R))
    return int(np.count_nonzero(d > tol * d[0])) if d[0] > 0 else 0


def check_complex(level: MeshLevel, k) -> CheckResult:
    """div . curl = 0, curl . grad = 0 (local and global), the alternating
    dimension count, and surjectivity of div onto D_h."""
    k = check_mode(k)
    eye6, eye3 = np.eye(6), np.eye(3)
    local_dc = max(abs(div_k(curl_b_coeffs(b, k), k)) for b in eye6)
    local_cg = max(np.abs(curl_b_coeffs(grad_a_coeffs(a, k), k)).max() for a in eye3)

    G, C, D = grad_matrix(level, k), curl_matrix(level, k), div_matrix(level, k)
    dc = abs(D @ C).max() if (D @ C).nnz else 0.0
    cg = abs(C @ G).max() if (C @ G).nnz else 0.0
    scale_dc = abs(D).max() * abs(C).max()
    scale_cg = abs(C).max() * abs(G).max()

    nv, ne, nt = level.nv, level.ne, level.nt
    alt = nv - (nv + ne) + (ne + nt) - nt
    rank_div = numeric_rank(D)
    return _composite(f"complex k={k}", [
        CheckResult("local div.curl", float(local_dc), 1e-12),
        CheckResult("local curl.grad", float(local_cg), 1e-12),
        CheckResult("global div.curl (relative)", float(dc / scale_dc), 1e-12),
        CheckResult("global curl.grad (relative)", float(cg / scale_cg), 1e-12),
        CheckResult("alternating dimension sum", float(abs(alt)), 0.0),
        CheckResult("dim D_h - rank div", float(nt - rank_div), 0.0),
    ])


def _average_div(level, k, u, div_u, degree=16):
    rule = triangle_rule(degree)
    x = rule.physical_points(level.coords)
    if div_u is not None:
        vals = np.asarray(div_u(x[..., 0], x[..., 1]), dtype=float)
        return vals @ rule.weights
    # without a closed form: boundary flux plus the zero-order part
    from .spaces import _edge_flux
    u_vals = np.asarray(u(x[..., 0], x[..., 1]), dtype=float)
    zero = ((u_vals[0] - k * u_vals[1]) / x[..., 0]) @ rule.weights
    flux = _edge_flux(level, u, 12)
    return (level.tri_signs * flux[level.tri_edges]).sum(1) / level.areas + zero


def check_commuting_interp(level: MeshLevel, k, u=None, div_u=None, tol=1e-10) -> CheckResult:
    """``div^k`` of the canonical interpolant equals the element average of
    ``div^k u``.  Defaults to the manufactured flux field and its closed-form
    divergence."""
    k = check_mode(k)
    if u is None:
        from .mixed import manufactured_solution
        ms = manufactured_solution(k)
        u, div_u = ms.z, ms.f
    lhs = div_matrix(level, k) @ interp_canonical_c(u, level, k)
    rhs = _average_div(level, k, u, div_u)
    scale = max(1.0, np.abs(rhs).max())
    return CheckResult(f"commuting interpolation k={k}", float(np.abs(lhs - rhs).max() / scale), tol)


def check_helmholtz(level: MeshLevel, k, nprobe=8, seed=0, ranks=True) -> CheckResult:
    """curl B_h is L2_r-orthogonal to grad_h D_h and the two ranges span C_h."""
    k = check_mode(k)
    M = assemble_mass_c(level, k)
    B = assemble_div(level, k)
    C = curl_matrix(level, k)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(nprobe):
        c = C @ rng.standard_normal(C.shape[1])
        g = grad_h(level, k, rng.standard_normal(level.nt), mass_c=M, div=B)
        nc, ng = np.sqrt(c @ (M @ c)), np.sqrt(g @ (M @ g))
        worst = max(worst, abs(c @ (M @ g)) / (nc * ng))
    parts = [CheckResult("orthogonality (relative)", float(worst), 1e-10)]
    if ranks:
        # range(grad_h) = M^{-1} range(B^T); rank is invariant under M^{-1}
        rc = numeric_rank(C)
        rg = numeric_rank(B.T)
        parts.append(CheckResult("dim C_h - rank curl - rank grad_h",
                                 float(abs(level.ne + level.nt - rc - rg)), 0.0))
    return _composite(f"helmholtz k={k}", parts)


def _eval_c_at(level, coeffs, tri, x, k):
    """Evaluate a C_h function at points ``x`` (n, 2) lying in triangles ``tri``."""
    c = level.coords[tri]
    s = level.tri_signs[tri]
    ce = coeffs[level.tri_edges[tri]]
    area2 = 2.0 * level.areas[tri]
    urz = np.zeros_like(x)
    for i in range(3):
        urz += ((ce[:, i] * s[:, i]) / area2)[:, None] * (x - c[:, i, :])
    sigma = coeffs[level.ne + tri]
    ut = (urz[:, 0] + sigma * x[:, 0]) / k
    return np.column_stack([urz[:, 0], ut, urz[:, 1]])


def check_transfer(hierarchy: MeshHierarchy, level, k, seed=0) -> CheckResult:
    """Galerkin coherence of the prolongation into ``level`` (1-based) and
    pointwise reproduction of coarse functions on the fine mesh."""
    k = check_mode(k)
    if level <= 1:
        return CheckResult(f"transfer level 1 k={k} (identity)", 0.0, 0.0)
    coarse, fine = hierarchy.levels[level - 2], hierarchy.levels[level - 1]
    cmap = hierarchy.child_maps[level - 2]
    P = build_prolongation(coarse, fine, cmap, k)
    Ac, Af = assemble_lambda(coarse, k), assemble_lambda(fine, k)
    gal = abs(Ac - (P.T @ Af @ P)).max() / abs(Ac).max()

    rng = np.random.default_rng(seed)
    u = rng.standard_normal(Ac.shape[0])
    uf = P @ u
    rule = triangle_rule(6)
    parent = np.repeat(np.arange(coarse.nt), 4)
    child = cmap.tri_children.ravel()
    xf = rule.physical_points(fine.coords[child])          # (4 nT, nq, 2)
    nq = xf.shape[1]
    x = xf.reshape(-1, 2)
    vf = _eval_c_at(fine, uf, np.repeat(child, nq), x, k)
    vc = _eval_c_at(coarse, u, np.repeat(parent, nq), x, k)
    point = np.abs(vf - vc).max() / max(np.abs(vc).max(), 1e-300)
    return _composite(f"transfer level {level - 1}->{level} k={k}", [
        CheckResult("Galerkin coherence (relative)", float(gal), 1e-10),
        CheckResult("pointwise reproduction (relative)", float(point), 1e-12),
    ])


SUITES = ("complex", "interp", "helmholtz", "transfer")


def run_suite(suite, domain, level, k):
    """Run one named suite on one level of a fresh hierarchy."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    H = MeshHierarchy.build(domain, level)
    L = H.levels[level - 1]
    if suite == "complex":
        return check_complex(L, k)
    if suite == "interp":
        return check_commuting_interp(L, k)
    if suite == "helmholtz":
        return check_helmholtz(L, k, ranks=L.ne + L.nt <= 5000)
    return check_transfer(H, level, k)


# --------------------------------------------------------------------------
# error decay of the quasi-interpolants


def _smooth_c_field(k):
    from .mixed import manufactured_solution
    return manufactured_solution(k).z


def _smooth_b_field(r, z):
    # every component carries a factor r, so the derived Nedelec field is smooth
    return np.stack([r * np.cos(z) * np.exp(r), r * np.sin(r + z), r * np.cos(2 * r - z)])


def _smooth_scalar(r, z):
    return np.sin(np.pi * r) * np.cos(z) + r * z


def _smooth_vector(r, z):
    return np.stack([np.cos(np.pi * z) * np.exp(r), np.sin(2 * r) * z])


def interpolation_errors(domain, k, levels):
    """Weighted L2 errors of the four quasi-interpolants on the given levels.

    Returns ``{name: [error per level]}``; the Nedelec operator is measured
    in L2_{r^3}, the others in L2_r.
    """
    k = check_mode(k)
    H = MeshHierarchy.build(domain, max(levels))
    uc = _smooth_c_field(k)

    def b_field(r, z):
        return _smooth_b_field(r, z)

    def ned_field(r, z):
        ur, ut, uz = _smooth_b_field(r, z)
        return np.stack([(k * ur + ut) / r, k * uz / r])

    out = {"interp_tilde_d": [], "interp_tilde_c": [], "weighted_clement": [], "clement_nedelec": []}
    for l in levels:
        L = H.levels[l - 1]
        out["interp_tilde_d"].append(l2r_error(L, "C", interp_tilde_d(uc, L, k), uc, k=k))
        out["interp_tilde_c"].append(l2r_error(L, "B", interp_tilde_c(b_field, L, k), b_field, k=k))
        out["weighted_clement"].append(l2r_error(L, "P1", weighted_clement(_smooth_scalar, L),
                                                 _smooth_scalar))
        out["clement_nedelec"].append(l2r_error(L, "ND", clement_nedelec(_smooth_vector, L),
                                                _smooth_vector, weight=3))
    return out


def fitted_slope(levels, errors):
    """Least-squares slope of ``-log2(error)`` against the level index."""
    return float(-np.polyfit(np.asarray(levels, float), np.log2(errors), 1)[0])
