"""Quadrature on triangles and edges.

Triangle rules are collapsed (Duffy) Gauss rules: a Gauss-Jacobi rule in the
collapsed direction absorbs the Jacobian, so a rule with ``m*m`` points is
exact for bivariate polynomials of total degree ``2*m - 1``.  Weights are
stored relative to the triangle area, so ``sum(weights) == 1``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "QuadratureRule",
    "triangle_rule",
    "edge_rule",
    "integrate",
    "weighted_mass_degree",
    "ASSEMBLY_DEGREE",
    "NORM_DEGREE",
]

# degree used for all assembled matrices; the integrands are degree 3
ASSEMBLY_DEGREE = 4
# degree used for manufactured-solution error norms
NORM_DEGREE = 10


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points (n, 3), relative weights (n,), exactness degree."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def physical_points(self, tri):
        """Map the rule onto one triangle (3, 2) or a batch (nT, 3, 2)."""
        return np.einsum("qi,...id->...qd", self.points, np.asarray(tri, dtype=float))


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    if degree < 0:
        raise ValueError("degree must be non-negative")
    m = max(1, (degree + 2) // 2)
    # u in [0, 1] carries the (1 - u) Jacobian through the Jacobi weight
    tu, wu = roots_jacobi(m, 1.0, 0.0)
    tv, wv = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (1.0 + tu)
    v = 0.5 * (1.0 + tv)
    wu = 0.25 * wu
    wv = 0.5 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    # reference triangle has area 1/2
    weights = 2.0 * W.ravel()
    bary.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(bary, weights, 2 * m - 1)


@lru_cache(maxsize=None)
def edge_rule(npoints: int):
    """Gauss-Legendre on [0, 1]: (parameters, weights summing to 1)."""
    t, w = np.polynomial.legendre.leggauss(npoints)
    t = 0.5 * (1.0 + t)
    w = 0.5 * w
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def triangle_area(tri):
    tri = np.asarray(tri, dtype=float)
    d1 = tri[..., 1, :] - tri[..., 0, :]
    d2 = tri[..., 2, :] - tri[..., 0, :]
    return 0.5 * (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])


def integrate(rule: QuadratureRule, tri, f):
    """Return sum_q w_q |K| f(x_q) for a scalar field ``f(r, z)``.

    ``tri`` may be a single triangle (3, 2) or a batch (nT, 3, 2); in the
    batched case one integral per triangle is returned.
    """
    x = rule.physical_points(tri)
    vals = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, x.shape[:-1])
    return np.abs(triangle_area(tri)) * (vals @ rule.weights)


def weighted_mass_degree() -> int:
    """Polynomial degree of the weighted element-matrix integrands.

    Components of C_1 functions are affine, their products quadratic, and
    the weight r adds one more degree.
    """
    return 3
