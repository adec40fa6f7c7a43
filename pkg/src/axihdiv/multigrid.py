"""Geometric multigrid V-cycle with vertex-patch smoothers on C_h.

The smoother visits one subspace per mesh vertex: all C_h basis functions
supported in the vertex patch.  A multiplicative sweep solves the patch
problems one after another against the current residual (block
Gauss-Seidel); the backward sweep visits them in reverse order, which makes
it the Lambda-adjoint of the forward sweep and the V-cycle symmetric.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.linalg import splu

from .assembly import assemble_lambda, lambda_norm
from .mesh import MeshHierarchy, MeshLevel, ChildMap, patch_arrays
from .spaces import check_mode

__all__ = [
    "build_prolongation",
    "patch_dofs",
    "Smoother",
    "VCycle",
    "SolveReport",
    "solve_mg",
    "random_initial_guess",
    "measure_delta",
    "contraction_table",
]


def build_prolongation(coarse: MeshLevel, fine: MeshLevel, cmap: ChildMap, k):
    """Sparse embedding C_{l-1} -> C_l.

    Column j holds the fine canonical DOFs of coarse basis function j.  The
    normal component of a Raviart-Thomas field is constant along any
    straight segment, so fine fluxes are exact midpoint evaluations; the
    triangle DOF of every child equals that of its parent.
    """
    check_mode(k)
    nt = coarse.nt
    mid = fine.tri_edges[cmap.tri_children[:, 3]]          # (nT, 3)
    halves = cmap.edge_children[coarse.tri_edges]           # (nT, 3, 2)
    fe = np.concatenate([halves.reshape(nt, 6), mid], axis=1)   # (nT, 9)

    p0 = fine.vertices[fine.edges[fe, 0]]
    d = fine.vertices[fine.edges[fe, 1]] - p0
    m = p0 + 0.5 * d                                         # (nT, 9, 2)
    c = coarse.coords
    area2 = 2.0 * coarse.areas
    vals = np.empty((nt, 9, 3))
    for i in range(3):
        s = (coarse.tri_signs[:, i] / area2)[:, None]
        xi = s[..., None] * (m - c[:, None, i, :])
        vals[:, :, i] = xi[..., 0] * d[..., 1] - xi[..., 1] * d[..., 0]
    rows = np.repeat(fe[:, :, None], 3, axis=2).ravel()
    cols = np.repeat(coarse.tri_edges[:, None, :], 9, axis=1).ravel()
    vals = vals.ravel()
    keep = np.abs(vals) > 1e-12 * np.abs(vals).max()
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    # halves of interior coarse edges are seen from both neighbours
    key = rows * coarse.ne + cols
    _, first = np.unique(key, return_index=True)
    rows, cols, vals = rows[first], cols[first], vals[first]

    trows = fine.ne + cmap.tri_children.ravel()
    tcols = coarse.ne + np.repeat(np.arange(nt), 4)
    P = sp.csr_matrix(
        (np.concatenate([vals, np.ones(4 * nt)]),
         (np.concatenate([rows, trows]), np.concatenate([cols, tcols]))),
        shape=(fine.ne + fine.nt, coarse.ne + coarse.nt),
    )
    P.sort_indices()
    return P


def patch_dofs(level: MeshLevel):
    """C_h DOFs supported in each vertex patch, compressed: (ptr, dofs)."""
    tp, ti, ep, ei = patch_arrays(level)
    nv = level.nv
    sizes = (tp[1:] - tp[:-1]) + (ep[1:] - ep[:-1])
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    dofs = np.empty(ptr[-1], dtype=np.int64)
    for v in range(nv):
        e = ei[ep[v]:ep[v + 1]]
        t = level.ne + ti[tp[v]:tp[v + 1]]
        dofs[ptr[v]:ptr[v + 1]] = np.concatenate([e, t])
    return ptr, dofs


@njit(cache=True)
def _patch_inverses(indptr, indices, data, pptr, pdofs, n):
    npatch = len(pptr) - 1
    iptr = np.zeros(npatch + 1, dtype=np.int64)
    for p in range(npatch):
        m = pptr[p + 1] - pptr[p]
        iptr[p + 1] = iptr[p] + m * m
    out = np.empty(iptr[-1])
    pos = -np.ones(n, dtype=np.int64)
    for p in range(npatch):
        lo = pptr[p]
        m = pptr[p + 1] - lo
        for a in range(m):
            pos[pdofs[lo + a]] = a
        M = np.zeros((m, m))
        for a in range(m):
            i = pdofs[lo + a]
            for q in range(indptr[i], indptr[i + 1]):
                b = pos[indices[q]]
                if b >= 0:
                    M[a, b] += data[q]
        Minv = np.linalg.inv(M)
        for a in range(m):
            for b in range(m):
                out[iptr[p] + a * m + b] = Minv[a, b]
        for a in range(m):
            pos[pdofs[lo + a]] = -1
    return iptr, out


@njit(cache=True)
def _multiplicative(indptr, indices, data, pptr, pdofs, iptr, inv, x, f, backward):
    npatch = len(pptr) - 1
    maxm = 0
    for p in range(npatch):
        maxm = max(maxm, pptr[p + 1] - pptr[p])
    r = np.empty(maxm)
    for s in range(npatch):
        p = npatch - 1 - s if backward else s
        lo = pptr[p]
        m = pptr[p + 1] - lo
        for a in range(m):
            i = pdofs[lo + a]
            acc = f[i]
            for q in range(indptr[i], indptr[i + 1]):
                acc -= data[q] * x[indices[q]]
            r[a] = acc
        off = iptr[p]
        for a in range(m):
            acc = 0.0
            for b in range(m):
                acc += inv[off + a * m + b] * r[b]
            x[pdofs[lo + a]] += acc


@njit(cache=True)
def _additive(pptr, pdofs, iptr, inv, res, damping):
    npatch = len(pptr) - 1
    out = np.zeros(len(res))
    for p in range(npatch):
        lo = pptr[p]
        m = pptr[p + 1] - lo
        off = iptr[p]
        for a in range(m):
            acc = 0.0
            for b in range(m):
                acc += inv[off + a * m + b] * res[pdofs[lo + b]]
            out[pdofs[lo + a]] += damping * acc
    return out


@dataclass(eq=False)
class Smoother:
    """Vertex-patch subspace correction for one level."""

    A: sp.csr_matrix
    ptr: np.ndarray
    dofs: np.ndarray
    inv_ptr: np.ndarray
    inv: np.ndarray
    variant: str = "multiplicative"
    damping: float = 0.25

    @classmethod
    def build(cls, level: MeshLevel, A, variant="multiplicative", damping=0.25):
        if variant not in ("multiplicative", "additive"):
            raise ValueError(f"unknown smoother {variant!r}")
        ptr, dofs = patch_dofs(level)
        A = sp.csr_matrix(A)
        A.sort_indices()
        iptr, inv = _patch_inverses(A.indptr, A.indices, A.data, ptr, dofs, A.shape[0])
        return cls(A, ptr, dofs, iptr, inv, variant, damping)

    @property
    def npatches(self):
        return len(self.ptr) - 1

    def patch(self, j):
        return self.dofs[self.ptr[j]:self.ptr[j + 1]]

    def sweep(self, x, f, backward=False):
        """One smoothing step; returns a new iterate."""
        x = np.array(x, dtype=float)
        f = np.asarray(f, dtype=float)
        if self.variant == "multiplicative":
            A = self.A
            _multiplicative(A.indptr, A.indices, A.data, self.ptr, self.dofs,
                            self.inv_ptr, self.inv, x, f, backward)
            return x
        res = f - self.A @ x
        return x + _additive(self.ptr, self.dofs, self.inv_ptr, self.inv, res, self.damping)


@dataclass(eq=False)
class VCycle:
    """Operators, transfers and smoothers of a mesh hierarchy for one mode."""

    k: int
    hierarchy: MeshHierarchy
    operators: list
    prolongations: list            # prolongations[i]: level i -> i + 1
    smoothers: list                # smoothers[0] is None (exact coarse solve)
    coarse_lu: object = field(repr=False, default=None)

    @classmethod
    def build(cls, hierarchy: MeshHierarchy, k, smoother="multiplicative", damping=0.25):
        k = check_mode(k)
        levels = hierarchy.levels
        ops = [assemble_lambda(L, k) for L in levels]
        prol = [
            build_prolongation(levels[i], levels[i + 1], hierarchy.child_maps[i], k)
            for i in range(len(levels) - 1)
        ]
        sm = [None] + [
            Smoother.build(levels[i], ops[i], smoother, damping) for i in range(1, len(levels))
        ]
        lu = splu(ops[0].tocsc())
        return cls(k, hierarchy, ops, prol, sm, lu)

    @property
    def nlevels(self):
        return len(self.operators)

    @property
    def A(self):
        return self.operators[-1]

    def cycle(self, u, f, level=None):
        """One V-cycle ``mg_l(u, f)``; ``level`` is 1-based (default: finest)."""
        l = self.nlevels if level is None else level
        if l < 1 or l > self.nlevels:
            raise ValueError("level out of range")
        return self._cycle(l - 1, np.asarray(u, dtype=float), np.asarray(f, dtype=float))

    def _cycle(self, i, u, f):
        if i == 0:
            return self.coarse_lu.solve(f)
        A, S, P = self.operators[i], self.smoothers[i], self.prolongations[i - 1]
        v = S.sweep(u, f)
        rc = P.T @ (f - A @ v)
        v = v + P @ self._cycle(i - 1, np.zeros(P.shape[1]), rc)
        return S.sweep(v, f, backward=True)

    def error_operator(self, e, level=None):
        """Apply E_l: the error propagation of one V-cycle."""
        e = np.asarray(e, dtype=float)
        return self.cycle(e, np.zeros_like(e), level)


@dataclass
class SolveReport:
    iterations: int
    norms: list                    # Lambda-norm of the error, starting with x0
    ratios: list
    rate: float
    converged: bool
    rate_stat: str = "arithmetic"

    @property
    def status(self):
        return "converged" if self.converged else "diverged"


def _rate(ratios, stat):
    if not ratios:
        return 0.0
    if stat == "arithmetic":
        return float(np.mean(ratios))
    if stat == "geometric":
        return float(np.exp(np.mean(np.log(np.maximum(ratios, 1e-300)))))
    raise ValueError(f"unknown rate statistic {stat!r}")


def solve_mg(state: VCycle, f, x0, tol=1e-7, max_iters=100, rate_stat="arithmetic",
             exact=None):
    """Iterate ``x_n = mg(x_{n-1}, f)`` until the Lambda-norm of the error
    drops below ``tol`` relative to the initial error.

    The error is measured against ``exact`` if given, else against the
    direct solution (zero when ``f`` vanishes).
    """
    A = state.A
    f = np.asarray(f, dtype=float)
    x = np.array(x0, dtype=float)
    if exact is None:
        exact = np.zeros_like(f) if not np.any(f) else splu(A.tocsc()).solve(f)
    norms = [lambda_norm(A, x - exact)]
    ratios = []
    if norms[0] == 0.0:
        return SolveReport(0, norms, ratios, 0.0, True, rate_stat)
    converged = False
    for _ in range(max_iters):
        x = state.cycle(x, f)
        norms.append(lambda_norm(A, x - exact))
        ratios.append(norms[-1] / norms[-2])
        if norms[-1] / norms[0] < tol:
            converged = True
            break
    return SolveReport(len(ratios), norms, ratios, _rate(ratios, rate_stat), converged, rate_stat)


def random_initial_guess(n, seed):
    """I.i.d. uniform entries on [-1, 1] from a seeded generator."""
    return np.random.default_rng(seed).uniform(-1.0, 1.0, n)


def measure_delta(state: VCycle, level=None, iters=30, seed=0):
    """Estimate ``max Lambda(E u, u) / Lambda(u, u)`` by power iteration.

    E is Lambda-symmetric, so the Rayleigh quotients of the power iterates
    increase toward its largest eigenvalue.  Returns ``(delta, quotients)``.
    """
    l = state.nlevels if level is None else level
    A = state.operators[l - 1]
    u = random_initial_guess(A.shape[0], seed)
    u /= lambda_norm(A, u)
    quotients = []
    for _ in range(iters):
        Eu = state.error_operator(u, l)
        quotients.append(float(Eu @ (A @ u)))
        nrm = lambda_norm(A, Eu)
        if nrm == 0.0:
            break
        u = Eu / nrm
    return max(quotients), quotients


def contraction_table(domain, modes, max_level, tol=1e-7, seed=7, smoother="multiplicative",
                      rate_stat="arithmetic", min_level=2, max_iters=100):
    """Average contraction rates of the V-cycle for f = 0 and a random start.

    Returns ``{mode: [(level, SolveReport), ...]}`` for levels
    ``min_level..max_level``.
    """
    H = MeshHierarchy.build(domain, max_level)
    out = {}
    for k in modes:
        rows = []
        for l in range(min_level, max_level + 1):
            sub = MeshHierarchy(H.domain, H.levels[:l], H.child_maps[:l - 1])
            state = VCycle.build(sub, k, smoother)
            n = state.A.shape[0]
            rep = solve_mg(state, np.zeros(n), random_initial_guess(n, seed), tol,
                           max_iters, rate_stat)
            rows.append((l, rep))
        out[k] = rows
    return out
