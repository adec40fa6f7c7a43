"""Triangulations of the meridian half-plane and their uniform refinement.

Coordinates are (r, z) with r >= 0.  Numbering is deterministic: vertices are
ordered lexicographically by (z, r), triangles by centroid (z, r), and edges
by their (lower, higher) vertex-index pair.  The global direction of an edge
runs from its lower to its higher vertex index; its global normal is that
direction rotated by -90 degrees.
"""

import json
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

__all__ = [
    "Tag",
    "MeshLevel",
    "ChildMap",
    "MeshHierarchy",
    "VertexPatch",
    "build_coarse",
    "refine",
    "vertex_patches",
    "patch_arrays",
    "mesh_to_json",
    "DOMAINS",
]

DOMAINS = ("square", "lshape")


class Tag(IntEnum):
    INTERIOR = 0
    GAMMA0 = 1
    GAMMA1 = 2


@dataclass(frozen=True, eq=False)
class MeshLevel:
    vertices: np.ndarray      # (nV, 2) float, columns (r, z)
    triangles: np.ndarray     # (nT, 3) counterclockwise
    edges: np.ndarray         # (nE, 2) lower index first
    tri_edges: np.ndarray     # (nT, 3) edge opposite local vertex i
    tri_signs: np.ndarray     # (nT, 3) +1 where ccw direction == global direction
    edge_tris: np.ndarray     # (nE, 2) adjacent triangles, -1 padding
    vertex_tags: np.ndarray   # (nV,) Tag values
    edge_tags: np.ndarray     # (nE,) Tag values

    @property
    def nv(self):
        return len(self.vertices)

    @property
    def ne(self):
        return len(self.edges)

    @property
    def nt(self):
        return len(self.triangles)

    @property
    def coords(self):
        """Triangle vertex coordinates, shape (nT, 3, 2)."""
        return self.vertices[self.triangles]

    @property
    def areas(self):
        c = self.coords
        d1 = c[:, 1] - c[:, 0]
        d2 = c[:, 2] - c[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def edge_tangents(self):
        """Unit global tangents (nE, 2)."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return d / np.hypot(d[:, 0], d[:, 1])[:, None]

    @property
    def edge_normals(self):
        t = self.edge_tangents
        return np.column_stack([t[:, 1], -t[:, 0]])

    @property
    def h(self):
        return float(self.edge_lengths.max())

    def on_axis(self):
        """Boolean mask of vertices with r == 0."""
        return self.vertices[:, 0] == 0.0

    def __repr__(self):
        return f"MeshLevel(nv={self.nv}, ne={self.ne}, nt={self.nt})"


@dataclass(frozen=True, eq=False)
class ChildMap:
    """Coarse-to-fine incidence between two consecutive levels."""

    vertex: np.ndarray          # (nV_c,) fine index of each coarse vertex
    edge_midpoint: np.ndarray   # (nE_c,) fine vertex at each coarse edge midpoint
    edge_children: np.ndarray   # (nE_c, 2) fine halves; column 0 touches edges[:, 0]
    tri_children: np.ndarray    # (nT_c, 4) corner children at local v0, v1, v2, then middle


@dataclass(frozen=True, eq=False)
class VertexPatch:
    center: int
    triangles: np.ndarray
    edges: np.ndarray           # edges whose support lies inside the patch


def _from_arrays(vertices, triangles):
    """Build a MeshLevel with canonical numbering.

    Returns the level plus the vertex and triangle permutations
    (``new_index[old_index]``).
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)

    vorder = np.lexsort((vertices[:, 0], vertices[:, 1]))
    vnew = np.empty_like(vorder)
    vnew[vorder] = np.arange(len(vorder))
    vertices = vertices[vorder]
    triangles = vnew[triangles]

    c = vertices[triangles]
    d1 = c[:, 1] - c[:, 0]
    d2 = c[:, 2] - c[:, 0]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(signed == 0.0):
        raise ValueError("degenerate triangle")
    flip = signed < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    cen = vertices[triangles].mean(axis=1)
    torder = np.lexsort((cen[:, 0], cen[:, 1]))
    tnew = np.empty_like(torder)
    tnew[torder] = np.arange(len(torder))
    triangles = triangles[torder]

    nt = len(triangles)
    local = np.stack(
        [triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1
    )  # (nT, 3, 2) ccw direction of edge opposite vertex i
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inv = np.unique(pairs, axis=0, return_inverse=True)
    tri_edges = inv.reshape(nt, 3)
    tri_signs = np.where(local[:, :, 0] < local[:, :, 1], 1, -1).astype(np.int64)

    ne = len(edges)
    flat = tri_edges.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=ne)
    if counts.max() > 2:
        raise ValueError("non-manifold edge")
    edge_tris = -np.ones((ne, 2), dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    tri_of = order // 3
    edge_tris[:, 0] = tri_of[starts]
    two = counts == 2
    edge_tris[two, 1] = tri_of[starts[two] + 1]

    axis = vertices[:, 0] == 0.0
    boundary = counts == 1
    edge_tags = np.full(ne, Tag.INTERIOR, dtype=np.int64)
    on_axis = axis[edges[:, 0]] & axis[edges[:, 1]]
    edge_tags[boundary] = Tag.GAMMA1
    edge_tags[boundary & on_axis] = Tag.GAMMA0
    vertex_tags = np.full(len(vertices), Tag.INTERIOR, dtype=np.int64)
    vertex_tags[np.unique(edges[boundary].ravel())] = Tag.GAMMA1
    vertex_tags[axis] = Tag.GAMMA0

    level = MeshLevel(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        tri_edges=tri_edges,
        tri_signs=tri_signs,
        edge_tris=edge_tris,
        vertex_tags=vertex_tags,
        edge_tags=edge_tags,
    )
    for a in vars(level).values():
        a.setflags(write=False)
    return level, vnew, tnew


def build_coarse(domain: str) -> MeshLevel:
    """Coarsest triangulation of the unit square or the L-shape.

    The square is split along the (0,0)-(1,1) diagonal.  The L-shape
    [0,1]^2 minus [0.5,1]^2 is three half-unit squares, each split along
    the diagonal through the reentrant corner (0.5, 0.5).
    """
    domain = domain.lower()
    if domain == "square":
        v = [(0, 0), (1, 0), (1, 1), (0, 1)]
        t = [(0, 1, 2), (0, 2, 3)]
    elif domain == "lshape":
        v = [(0, 0), (0.5, 0), (1, 0), (0, 0.5), (0.5, 0.5), (1, 0.5), (0, 1), (0.5, 1)]
        t = [
            (0, 1, 4), (0, 4, 3),   # lower-left square, diagonal (0,0)-(.5,.5)
            (1, 2, 4), (2, 5, 4),   # lower-right square, diagonal (1,0)-(.5,.5)
            (3, 4, 6), (4, 7, 6),   # upper-left square, diagonal (0,1)-(.5,.5)
        ]
    else:
        raise ValueError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    return _from_arrays(v, t)[0]


def refine(level: MeshLevel):
    """Uniform red refinement: each triangle splits into four similar ones.

    Returns ``(fine_level, ChildMap)``.
    """
    nv, ne = level.nv, level.ne
    mids = 0.5 * (level.vertices[level.edges[:, 0]] + level.vertices[level.edges[:, 1]])
    vertices = np.vstack([level.vertices, mids])
    t = level.triangles
    m = nv + level.tri_edges   # midpoint opposite local vertex i
    children = np.stack(
        [
            np.column_stack([t[:, 0], m[:, 2], m[:, 1]]),
            np.column_stack([m[:, 2], t[:, 1], m[:, 0]]),
            np.column_stack([m[:, 1], m[:, 0], t[:, 2]]),
            np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
        ],
        axis=1,
    )  # (nT, 4, 3)
    fine, vnew, tnew = _from_arrays(vertices, children.reshape(-1, 3))

    tri_children = tnew[np.arange(4 * level.nt).reshape(-1, 4)]
    vmap = vnew[:nv]
    emid = vnew[nv + np.arange(ne)]
    # fine.edges is lexicographically sorted, so its integer keys are too
    n = fine.nv
    keys = fine.edges[:, 0] * n + fine.edges[:, 1]

    def find(a, b):
        return np.searchsorted(keys, np.minimum(a, b) * n + np.maximum(a, b))

    halves = np.column_stack([
        find(vmap[level.edges[:, 0]], emid),
        find(vmap[level.edges[:, 1]], emid),
    ])
    cmap = ChildMap(vertex=vmap, edge_midpoint=emid, edge_children=halves,
                    tri_children=tri_children)
    return fine, cmap


@dataclass(frozen=True, eq=False)
class MeshHierarchy:
    """Nested levels; ``levels[0]`` is the coarsest (level 1)."""

    domain: str
    levels: list = field(default_factory=list)
    child_maps: list = field(default_factory=list)   # child_maps[i]: levels[i] -> levels[i+1]

    @classmethod
    def build(cls, domain: str, nlevels: int):
        if nlevels < 1:
            raise ValueError("need at least one level")
        levels = [build_coarse(domain)]
        maps = []
        for _ in range(nlevels - 1):
            fine, cm = refine(levels[-1])
            levels.append(fine)
            maps.append(cm)
        return cls(domain.lower(), levels, maps)

    def __len__(self):
        return len(self.levels)

    @property
    def finest(self):
        return self.levels[-1]


def patch_arrays(level: MeshLevel):
    """Vertex patches in compressed form.

    Returns ``(tri_ptr, tri_idx, edge_ptr, edge_idx)``: the triangles of the
    patch of vertex ``v`` are ``tri_idx[tri_ptr[v]:tri_ptr[v+1]]`` and the
    edges whose basis support lies in that patch are
    ``edge_idx[edge_ptr[v]:edge_ptr[v+1]]``.  An edge belongs to the patches
    of its endpoints; a boundary edge also belongs to the patch of the
    opposite vertex of its single triangle.
    """
    nv, nt = level.nv, level.nt
    tv = level.triangles.ravel()
    tt = np.repeat(np.arange(nt), 3)
    order = np.lexsort((tt, tv))
    tri_idx = tt[order]
    tri_ptr = np.concatenate([[0], np.cumsum(np.bincount(tv, minlength=nv))])

    ev = [level.edges[:, 0], level.edges[:, 1]]
    ee = [np.arange(level.ne)] * 2
    bnd = np.flatnonzero(level.edge_tris[:, 1] < 0)
    if len(bnd):
        k = level.edge_tris[bnd, 0]
        loc = np.argmax(level.tri_edges[k] == bnd[:, None], axis=1)
        ev.append(level.triangles[k, loc])
        ee.append(bnd)
    ev = np.concatenate(ev)
    ee = np.concatenate(ee)
    order = np.lexsort((ee, ev))
    edge_idx = ee[order]
    edge_ptr = np.concatenate([[0], np.cumsum(np.bincount(ev, minlength=nv))])
    return tri_ptr, tri_idx, edge_ptr, edge_idx


def vertex_patches(level: MeshLevel):
    """One VertexPatch per vertex, in ascending vertex order."""
    tp, ti, ep, ei = patch_arrays(level)
    return [
        VertexPatch(v, ti[tp[v]:tp[v + 1]], ei[ep[v]:ep[v + 1]])
        for v in range(level.nv)
    ]


def mesh_to_json(level: MeshLevel) -> str:
    names = {int(t): t.name for t in Tag}
    doc = {
        "vertices": level.vertices.tolist(),
        "triangles": level.triangles.tolist(),
        "edges": level.edges.tolist(),
        "tags": {
            "vertices": [names[int(t)] for t in level.vertex_tags],
            "edges": [names[int(t)] for t in level.edge_tags],
        },
    }
    return json.dumps(doc)
