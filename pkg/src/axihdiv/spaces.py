"""Lowest-order Fourier finite element spaces for a fixed mode k.

Local shape spaces on a triangle, written with coefficient vectors:

* A_1: ``u = r (a1 + a2 r + a3 z)``
* B_1: ``u = (b1 + b4 r + b3 z - b6 r z, -k b1 + b2 r - k b3 z, b5 r + b6 r^2)``
* C_1: ``u = (k g1 + g2 r, g1 + g3 r, g4 + g2 z)``
* D_1: constants

Global degrees of freedom:

* A_h: value of u/r at every vertex (u = r * P1 Lagrange)
* B_h: u_theta at every vertex, then for every edge the tangential moment
  (global direction) of ``((k u_r + u_theta)/r, k u_z/r)``, a Nedelec field
* C_h: for every edge the normal flux of (u_r, u_z) (global normal), then
  for every triangle the constant ``(k u_theta - u_r)/r``
* D_h: one value per triangle

Vector fields are callables ``u(r, z)`` returning an array whose first axis
holds the components (u_r, u_theta, u_z); scalar fields return an array of
the shape of ``r``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .mesh import MeshLevel, Tag, patch_arrays
from .quadrature import edge_rule, triangle_area, triangle_rule

__all__ = [
    "check_mode",
    "SpaceDofMap",
    "dof_map",
    # local elements
    "eval_a", "grad_k_a", "grad_a_coeffs",
    "eval_b", "curl_k_b", "curl_b_coeffs", "b_dofs_from_coeffs", "reconstruct_b",
    "eval_c", "div_k", "c_dofs", "reconstruct_c", "c_local_basis",
    # global evaluation
    "evaluate", "barycentric_gradients", "c_local_dofs", "b_local_dofs",
    "c_basis_values", "c_div_values",
    # interpolants
    "interp_canonical_c", "interp_tilde_d", "weighted_clement", "clement_nedelec",
    "interp_tilde_c", "pi_S", "axis_edge_choice",
    # discrete operators
    "grad_matrix", "curl_matrix", "div_matrix",
]


def check_mode(k) -> int:
    if int(k) != k or abs(int(k)) < 1:
        raise ValueError(f"Fourier mode must be an integer with |k| >= 1, got {k!r}")
    return int(k)


@dataclass(frozen=True)
class SpaceDofMap:
    """Block layout of the global coefficient vector of one space."""

    space: str
    k: int
    vertex_block: int
    edge_block: int
    triangle_block: int

    @property
    def ndofs(self):
        return self.vertex_block + self.edge_block + self.triangle_block

    def vertex_dofs(self):
        return np.arange(self.vertex_block)

    def edge_dofs(self):
        return self.vertex_block + np.arange(self.edge_block)

    def triangle_dofs(self):
        return self.vertex_block + self.edge_block + np.arange(self.triangle_block)


def dof_map(level: MeshLevel, space: str, k=1) -> SpaceDofMap:
    k = check_mode(k)
    space = space.upper()
    blocks = {
        "A": (level.nv, 0, 0),
        "B": (level.nv, level.ne, 0),
        "C": (0, level.ne, level.nt),
        "D": (0, 0, level.nt),
    }
    if space not in blocks:
        raise ValueError(f"unknown space {space!r}")
    return SpaceDofMap(space, k, *blocks[space])


# --------------------------------------------------------------------------
# local elements


def eval_a(alpha, r, z):
    a1, a2, a3 = alpha
    return r * (a1 + a2 * r + a3 * z)


def grad_k_a(alpha, k, r, z):
    """grad^k of an A_1 function: (d_r u, -k u / r, d_z u), 1/r cancelled."""
    a1, a2, a3 = alpha
    q = a1 + a2 * r + a3 * z
    return np.array([q + a2 * r, -k * q, a3 * r + 0 * z])


def grad_a_coeffs(alpha, k):
    """B_1 coefficients of grad^k applied to an A_1 function."""
    a1, a2, a3 = alpha
    return np.array([a1, -k * a2, a3, 2 * a2, a3, 0.0])


def eval_b(beta, k, r, z):
    b1, b2, b3, b4, b5, b6 = beta
    return np.array([
        b1 + b4 * r + b3 * z - b6 * r * z,
        -k * b1 + b2 * r - k * b3 * z,
        b5 * r + b6 * r * r + 0 * z,
    ])


def curl_b_coeffs(beta, k):
    """C_1 coefficients of curl^k applied to a B_1 function."""
    b1, b2, b3, b4, b5, b6 = beta
    return np.array([b3 - b5, -k * b6, -3.0 * b6, k * b4 + 2.0 * b2])


def curl_k_b(beta, k, r, z):
    """curl^k of a B_1 function evaluated at (r, z)."""
    return eval_c(curl_b_coeffs(beta, k), k, r, z)


def eval_c(gamma, k, r, z):
    g1, g2, g3, g4 = gamma
    return np.array([k * g1 + g2 * r + 0 * z, g1 + g3 * r + 0 * z, g4 + g2 * z + 0 * r])


def div_k(gamma, k):
    """div^k of a C_1 function; it is the constant 3 g2 - k g3."""
    _, g2, g3, _ = gamma
    return 3.0 * g2 - k * g3


def _local_geometry(tri):
    """Return the triangle as an array and its signed area."""
    tri = np.asarray(tri, dtype=float)
    area = float(triangle_area(tri))
    if not abs(area) > 1e-14 * max(1.0, np.abs(tri).max()) ** 2:
        raise ValueError("degenerate triangle")
    return tri, area


def _edge_points(tri, i, npts):
    """Gauss points, weights*length and unit tangent on local edge i."""
    a, b = tri[(i + 1) % 3], tri[(i + 2) % 3]
    t, w = edge_rule(npts)
    d = b - a
    length = np.hypot(*d)
    x = a[None, :] + t[:, None] * d[None, :]
    return x, w * length, d / length


def c_dofs(u, tri, k, degree=12, edge_points=8):
    """Local canonical DOFs [flux e0, flux e1, flux e2, sigma_K].

    Edge i is opposite vertex i and fluxes use outward normals; sigma_K is
    the mean of ``(k u_theta - u_r)/r`` over K.
    """
    k = check_mode(k)
    tri, area = _local_geometry(tri)
    orient = np.sign(area)
    rule = triangle_rule(degree)
    x = rule.physical_points(tri)
    vals = np.asarray(u(x[:, 0], x[:, 1]), dtype=float)
    sig_k = ((k * vals[1] - vals[0]) / x[:, 0]) @ rule.weights
    out = np.empty(4)
    for i in range(3):
        xe, we, t = _edge_points(tri, i, edge_points)
        ve = np.asarray(u(xe[:, 0], xe[:, 1]), dtype=float)
        out[i] = orient * ((ve[0] * t[1] - ve[2] * t[0]) @ we)
    out[3] = sig_k
    if not np.all(np.isfinite(out)):
        raise ValueError("field is not admissible: non-finite DOF integral")
    return out


def reconstruct_c(dofs, tri, k):
    """The unique C_1 function (as coefficients) with the given local DOFs."""
    k = check_mode(k)
    tri, area = _local_geometry(tri)
    area = abs(area)
    s = np.asarray(dofs[:3], dtype=float)
    # sum_i s_i (x - a_i) / (2|K|) = (a + c r, b + c z)
    c = s.sum() / (2 * area)
    ab = -(s @ tri) / (2 * area)
    g2 = c
    g1 = ab[0] / k
    g4 = ab[1]
    g3 = (dofs[3] + g2) / k
    return np.array([g1, g2, g3, g4])


def c_local_basis(tri, k):
    """Rows are C_1 coefficients of the four local basis functions."""
    return np.array([reconstruct_c(e, tri, k) for e in np.eye(4)])


def b_dofs_from_coeffs(beta, tri, k):
    """Local B DOFs of a B_1 function: u_theta at the vertices, then the
    tangential moments of the Nedelec field along each edge, edge i running
    from vertex i+1 to vertex i+2."""
    tri, _ = _local_geometry(tri)
    b1, b2, b3, b4, b5, b6 = beta
    ut = -k * b1 + b2 * tri[:, 0] - k * b3 * tri[:, 1]
    # Nedelec field (kb4 + b2 - k b6 z, k b5 + k b6 r) is affine; midpoint rule is exact
    out = np.empty(6)
    out[:3] = ut
    for i in range(3):
        a, b = tri[(i + 1) % 3], tri[(i + 2) % 3]
        m = 0.5 * (a + b)
        nt = np.array([k * b4 + b2 - k * b6 * m[1], k * b5 + k * b6 * m[0]])
        out[3 + i] = nt @ (b - a)
    return out


def reconstruct_b(dofs, tri, k):
    """The unique B_1 function (as coefficients) with the given local DOFs."""
    k = check_mode(k)
    tri, area = _local_geometry(tri)
    # u_theta = c0 + c1 r + c2 z through the vertex values
    V = np.column_stack([np.ones(3), tri])
    c0, c1, c2 = np.linalg.solve(V, np.asarray(dofs[:3], dtype=float))
    # Nedelec (bb - a z, cc + a r): moments are linear in (bb, cc, a)
    M = np.empty((3, 3))
    for i in range(3):
        p, q = tri[(i + 1) % 3], tri[(i + 2) % 3]
        m, d = 0.5 * (p + q), q - p
        M[i] = [d[0], d[1], -m[1] * d[0] + m[0] * d[1]]
    bb, cc, a = np.linalg.solve(M, np.asarray(dofs[3:], dtype=float))
    return np.array([-c0 / k, c1, -c2 / k, (bb - c1) / k, cc / k, a / k])


# --------------------------------------------------------------------------
# global evaluation


def barycentric_gradients(level: MeshLevel):
    """(nT, 3, 2) gradients of the barycentric coordinates."""
    c = level.coords
    area2 = 2.0 * level.areas
    g = np.empty((level.nt, 3, 2))
    for i in range(3):
        j, m = (i + 1) % 3, (i + 2) % 3
        g[:, i, 0] = (c[:, j, 1] - c[:, m, 1]) / area2
        g[:, i, 1] = (c[:, m, 0] - c[:, j, 0]) / area2
    return g


def _points(level, bary):
    return np.einsum("qi,tid->tqd", bary, level.coords)


def c_local_dofs(level: MeshLevel):
    return np.column_stack([level.tri_edges, level.ne + np.arange(level.nt)])


def b_local_dofs(level: MeshLevel):
    return np.column_stack([level.triangles, level.nv + level.tri_edges])


def c_basis_values(level: MeshLevel, k, bary):
    """(nT, nq, 4, 3) values of the signed local C_h basis functions."""
    c = level.coords
    x = _points(level, bary)
    area2 = 2.0 * level.areas
    out = np.zeros(x.shape[:2] + (4, 3))
    for i in range(3):
        s = (level.tri_signs[:, i] / area2)[:, None, None]
        rt = s * (x - c[:, None, i, :])
        out[:, :, i, 0] = rt[..., 0]
        out[:, :, i, 1] = rt[..., 0] / k
        out[:, :, i, 2] = rt[..., 1]
    out[:, :, 3, 1] = x[..., 0] / k
    return out


def c_div_values(level: MeshLevel, k):
    """(nT, 4) constant div^k of the signed local C_h basis functions."""
    d = np.empty((level.nt, 4))
    d[:, :3] = level.tri_signs / level.areas[:, None]
    d[:, 3] = -1.0
    return d


def _whitney(level, bary):
    """(nT, nq, 3, 2) signed lowest-order Nedelec basis values."""
    g = barycentric_gradients(level)
    out = np.empty((level.nt, len(bary), 3, 2))
    for i in range(3):
        a, b = (i + 1) % 3, (i + 2) % 3
        s = level.tri_signs[:, i][:, None, None]
        out[:, :, i, :] = s * (
            bary[None, :, a, None] * g[:, None, b, :] - bary[None, :, b, None] * g[:, None, a, :]
        )
    return out


def evaluate(level: MeshLevel, space: str, coeffs, bary, k=1):
    """Evaluate a finite element function at barycentric points of every
    triangle.

    ``space`` is one of ``A``, ``B``, ``C``, ``D`` or the auxiliary scalar
    ``P1`` and 2-vector ``ND`` spaces.  Returns ``(nT, nq, ncomp)``.
    """
    space = space.upper()
    coeffs = np.asarray(coeffs, dtype=float)
    bary = np.asarray(bary, dtype=float)
    nq = len(bary)
    if space == "D":
        return np.broadcast_to(coeffs[:, None, None], (level.nt, nq, 1)).copy()
    if space in ("P1", "A"):
        vals = np.einsum("qi,ti->tq", bary, coeffs[level.triangles])
        if space == "A":
            vals = vals * _points(level, bary)[..., 0]
        return vals[..., None]
    if space == "ND":
        w = _whitney(level, bary)
        return np.einsum("tqid,ti->tqd", w, coeffs[level.tri_edges])
    k = check_mode(k)
    if space == "C":
        phi = c_basis_values(level, k, bary)
        return np.einsum("tqic,ti->tqc", phi, coeffs[c_local_dofs(level)])
    if space == "B":
        ut = np.einsum("qi,ti->tq", bary, coeffs[level.triangles])
        nd = evaluate(level, "ND", coeffs[level.nv:], bary)
        r = _points(level, bary)[..., 0]
        return np.stack([(r * nd[..., 0] - ut) / k, ut, r * nd[..., 1] / k], axis=-1)
    raise ValueError(f"unknown space {space!r}")


# --------------------------------------------------------------------------
# interpolants


def _edge_flux(level, u, npts, weight_r=False):
    """Normal flux (global normals) of u_rz on every edge."""
    t, w = edge_rule(npts)
    p0 = level.vertices[level.edges[:, 0]]
    d = level.vertices[level.edges[:, 1]] - p0
    x = p0[:, None, :] + t[None, :, None] * d[:, None, :]
    vals = np.asarray(u(x[..., 0], x[..., 1]), dtype=float)
    # u_rz . n * |e| with n = (t_z, -t_r), d = |e| t
    fn = vals[0] * d[:, None, 1] - vals[2] * d[:, None, 0]
    if weight_r:
        fn = fn * x[..., 0]
    return fn @ w


def _tri_quad(level, degree):
    rule = triangle_rule(degree)
    x = rule.physical_points(level.coords)
    return x, rule.weights[None, :] * level.areas[:, None]


def interp_canonical_c(u, level: MeshLevel, k, degree=16, edge_points=10):
    """Canonical C_h interpolant: edge fluxes and triangle means of
    ``(k u_theta - u_r)/r``."""
    k = check_mode(k)
    x, wq = _tri_quad(level, degree)
    vals = np.asarray(u(x[..., 0], x[..., 1]), dtype=float)
    sig = ((k * vals[1] - vals[0]) / x[..., 0] * wq).sum(axis=1) / level.areas
    out = np.concatenate([_edge_flux(level, u, edge_points), sig])
    if not np.all(np.isfinite(out)):
        raise ValueError("field is not admissible: non-finite DOF integral")
    return out


def axis_edge_choice(level: MeshLevel):
    """For every vertex on the axis, the incident edge off the axis with the
    smallest global index.  Returns ``(axis_vertices, edges)``."""
    axis = np.flatnonzero(level.on_axis())
    off = level.edge_tags != Tag.GAMMA0
    _, _, ep, ei = patch_arrays(level)
    chosen = np.empty(len(axis), dtype=np.int64)
    for j, a in enumerate(axis):
        cand = ei[ep[a]:ep[a + 1]]
        cand = cand[off[cand] & ((level.edges[cand, 0] == a) | (level.edges[cand, 1] == a))]
        chosen[j] = cand.min()
    return axis, chosen


def interp_tilde_d(u, level: MeshLevel, k, degree=16, edge_points=10):
    """C_h interpolant built from weighted degrees of freedom.

    The triangle DOF is the r^3-weighted mean of ``(k u_theta - u_r)/r``.
    The Raviart-Thomas part is fixed by plain fluxes on edges away from
    the axis, r-weighted fluxes on one chosen edge per axis vertex, and
    the moments ``int_K r div_rz u_rz`` on triangles touching the axis.
    """
    k = check_mode(k)
    x, wq = _tri_quad(level, degree)
    r = x[..., 0]
    vals = np.asarray(u(r, x[..., 1]), dtype=float)
    sig = ((k * vals[1] - vals[0]) * r * r * wq).sum(1) / ((r ** 3) * wq).sum(1)

    ne = level.ne
    axis = level.on_axis()
    touch = axis[level.edges[:, 0]] | axis[level.edges[:, 1]]
    flux = np.zeros(ne)
    free = ~touch
    flux[free] = _edge_flux(level, u, edge_points)[free]

    unknown = np.flatnonzero(touch)
    if len(unknown):
        col = -np.ones(ne, dtype=np.int64)
        col[unknown] = np.arange(len(unknown))
        rows, cols, data, rhs = [], [], [], []
        av, ea = axis_edge_choice(level)
        bflux = _edge_flux(level, u, edge_points, weight_r=True)
        rmean = level.vertices[level.edges[ea]][:, :, 0].mean(axis=1)
        for j, e in enumerate(ea):
            rows.append(j)
            cols.append(col[e])
            data.append(rmean[j])
            rhs.append(bflux[e])
        # int_K r div u = int_dK r u.n - int_K u_r
        tri_axis = np.flatnonzero(axis[level.triangles].any(axis=1))
        int_r = (r * wq).sum(1)
        int_ur = (vals[0] * wq).sum(1)
        row = len(ea)
        for t in tri_axis:
            val = -int_ur[t]
            known = 0.0
            for i in range(3):
                e = level.tri_edges[t, i]
                s = level.tri_signs[t, i]
                val += s * bflux[e]
                coef = s * int_r[t] / level.areas[t]
                if col[e] >= 0:
                    rows.append(row)
                    cols.append(col[e])
                    data.append(coef)
                else:
                    known += coef * flux[e]
            rhs.append(val - known)
            row += 1
        if row != len(unknown):
            raise ValueError("weighted DOFs are not unisolvent on this mesh")
        G = sp.csr_matrix((data, (rows, cols)), shape=(row, len(unknown)))
        flux[unknown] = spsolve(G.tocsc(), np.asarray(rhs))
    out = np.concatenate([flux, sig])
    if not np.all(np.isfinite(out)):
        raise ValueError("field is not admissible: non-finite DOF integral")
    return out


def _first_triangle_per_vertex(level):
    tp, ti, _, _ = patch_arrays(level)
    return ti[tp[:-1]]


def weighted_clement(u, level: MeshLevel, degree=10):
    """P1 vertex values of the r-weighted Clement quasi-interpolant.

    Each vertex uses the L2_r projection onto affine functions on its
    lowest-index incident triangle, evaluated at the vertex.
    """
    kt = _first_triangle_per_vertex(level)
    rule = triangle_rule(degree)
    tri = level.coords[kt]
    x = rule.physical_points(tri)
    w = rule.weights[None, :] * level.areas[kt, None] * x[..., 0]
    lam = rule.points
    G = np.einsum("vq,qa,qb->vab", w, lam, lam)
    rhs = np.einsum("vq,vq,qa->va", w, np.asarray(u(x[..., 0], x[..., 1]), dtype=float), lam)
    coef = np.linalg.solve(G, rhs[..., None])[..., 0]
    loc = np.argmax(level.triangles[kt] == np.arange(level.nv)[:, None], axis=1)
    return coef[np.arange(level.nv), loc]


def clement_nedelec(v, level: MeshLevel, degree=10):
    """Edge moments of the r^3-weighted Clement operator onto Nedelec.

    Each edge uses the L2_{r^3} projection onto ND_1 on its lowest-index
    adjacent triangle; the moment is taken along the global edge direction.
    """
    kt = level.edge_tris[:, 0]
    rule = triangle_rule(degree)
    tri = level.coords[kt]
    x = rule.physical_points(tri)
    cen = tri.mean(axis=1)
    w = rule.weights[None, :] * level.areas[kt, None] * x[..., 0] ** 3
    # ND_1 basis (1, 0), (0, 1), (-(z - zc), r - rc)
    nq = len(rule.weights)
    phi = np.zeros((level.ne, nq, 3, 2))
    phi[:, :, 0, 0] = 1.0
    phi[:, :, 1, 1] = 1.0
    phi[:, :, 2, 0] = -(x[..., 1] - cen[:, None, 1])
    phi[:, :, 2, 1] = x[..., 0] - cen[:, None, 0]
    G = np.einsum("eq,eqad,eqbd->eab", w, phi, phi)
    vals = np.moveaxis(np.asarray(v(x[..., 0], x[..., 1]), dtype=float), 0, -1)
    rhs = np.einsum("eq,eqad,eqd->ea", w, phi, vals)
    c = np.linalg.solve(G, rhs[..., None])[..., 0]
    p0 = level.vertices[level.edges[:, 0]]
    d = level.vertices[level.edges[:, 1]] - p0
    m = p0 + 0.5 * d
    fr = c[:, 0] - c[:, 2] * (m[:, 1] - cen[:, 1])
    fz = c[:, 1] + c[:, 2] * (m[:, 0] - cen[:, 0])
    return fr * d[:, 0] + fz * d[:, 1]


def interp_tilde_c(u, level: MeshLevel, k, degree=10):
    """B_h quasi-interpolant: weighted Clement for u_theta at the vertices and
    the r^3-weighted Nedelec Clement operator for
    ``((k u_r + u_theta)/r, k u_z/r)`` on the edges."""
    k = check_mode(k)

    def u_theta(r, z):
        return np.asarray(u(r, z), dtype=float)[1]

    def nedelec_part(r, z):
        ur, ut, uz = np.asarray(u(r, z), dtype=float)
        return np.array([(k * ur + ut) / r, k * uz / r])

    return np.concatenate([
        weighted_clement(u_theta, level, degree),
        clement_nedelec(nedelec_part, level, degree),
    ])


def pi_S(p, level: MeshLevel, degree=10):
    """L2_r-orthogonal projection onto piecewise constants."""
    x, wq = _tri_quad(level, degree)
    r = x[..., 0]
    vals = np.asarray(p(r, x[..., 1]), dtype=float)
    return (vals * r * wq).sum(1) / (r * wq).sum(1)


# --------------------------------------------------------------------------
# discrete operators between the global spaces


def grad_matrix(level: MeshLevel, k):
    """grad^k as a sparse map A_h -> B_h."""
    k = check_mode(k)
    nv, ne = level.nv, level.ne
    e = np.arange(ne)
    rows = np.concatenate([np.arange(nv), nv + e, nv + e])
    cols = np.concatenate([np.arange(nv), level.edges[:, 1], level.edges[:, 0]])
    data = np.concatenate([np.full(nv, -k), np.full(ne, k), np.full(ne, -k)]).astype(float)
    return sp.csr_matrix((data, (rows, cols)), shape=(nv + ne, nv))


def curl_matrix(level: MeshLevel, k):
    """curl^k as a sparse map B_h -> C_h."""
    check_mode(k)
    nv, ne, nt = level.nv, level.ne, level.nt
    e = np.arange(ne)
    # flux through an edge: -(tangential moment + u_theta(hi) - u_theta(lo))
    rows = [e, e, e]
    cols = [nv + e, level.edges[:, 1], level.edges[:, 0]]
    data = [-np.ones(ne), -np.ones(ne), np.ones(ne)]
    # sigma_K = -(1/|K|) * circulation of the Nedelec field
    t = np.repeat(np.arange(nt), 3)
    rows.append(ne + t)
    cols.append(nv + level.tri_edges.ravel())
    data.append(-(level.tri_signs / level.areas[:, None]).ravel())
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ne + nt, nv + ne),
    )


def div_matrix(level: MeshLevel, k):
    """div^k as a sparse map C_h -> D_h (values per triangle)."""
    k = check_mode(k)
    loc = c_local_dofs(level)
    vals = c_div_values(level, k)
    rows = np.repeat(np.arange(level.nt), 4)
    return sp.csr_matrix((vals.ravel(), (rows, loc.ravel())), shape=(level.nt, level.ne + level.nt))
