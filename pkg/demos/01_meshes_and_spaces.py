"""Meshes, degrees of freedom and the discrete complex.

Run with ``python3 demos/01_meshes_and_spaces.py``.
"""

# %%
# Two meridian domains are available.  Refinement splits every triangle into
# four; level 1 is the coarse mesh.
import numpy as np

from axihdiv import MeshHierarchy
from axihdiv.spaces import curl_matrix, div_matrix, grad_matrix

for domain in ("square", "lshape"):
    H = MeshHierarchy.build(domain, 5)
    print(f"{domain}:")
    for l, L in enumerate(H.levels, start=1):
        on_axis = int(np.count_nonzero(L.vertices[:, 0] == 0.0))
        print(f"  level {l}: {L.nv:5d} vertices {L.ne:5d} edges {L.nt:5d} triangles"
              f"  ({on_axis} on the axis, h = {L.h:.4f})")

# %%
# The four spaces A_h -> B_h -> C_h -> D_h have dimensions V, V + E, E + T and T.
# Composing consecutive discrete operators gives zero matrices.
L = MeshHierarchy.build("lshape", 3).finest
for k in (1, -2):
    G, C, D = grad_matrix(L, k), curl_matrix(L, k), div_matrix(L, k)
    print(f"k={k:+d}: |curl grad| = {abs(C @ G).max() if (C @ G).nnz else 0.0:.1e}, "
          f"|div curl| = {abs(D @ C).max() if (D @ C).nnz else 0.0:.1e}")
    print(f"       shapes grad {G.shape}, curl {C.shape}, div {D.shape}")

# %%
# The structural suites bundle these identities with rank counts.
from axihdiv.verify import run_suite

for suite in ("complex", "helmholtz", "interp", "transfer"):
    print(run_suite(suite, "square", 3, 2))
