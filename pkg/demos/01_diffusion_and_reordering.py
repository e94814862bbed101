"""
Heat diffusion embeddings and why rows are sorted
=================================================

Each node starts with a one-hot feature vector and heat spreads along the
edges for T steps. Independently diffused graphs index their features by
their own node order, so rows are sorted before they are compared.
"""

import numpy as np

from iteralign import (build_diffusion_matrix, diffuse, init_features_identity,
                       normalize_rows, reorder_rows)
from iteralign.graph import Graph

np.set_printoptions(precision=3, suppress=True)

# A 3-node path: 0 - 1 - 2
path = Graph(3, [(0, 1), (1, 2)])

# The three diffusion operators on the same graph
for kind in ("rw", "sym", "sym-selfloop"):
    print(kind)
    print(build_diffusion_matrix(path, kind).toarray())

# Two diffusion steps with the default operator I + D^-1/2 A D^-1/2
q = build_diffusion_matrix(path, "sym-selfloop")
h = diffuse(q, init_features_identity(path), steps=2)
print("embeddings after T=2\n", h)

# Relabel the path as 2 - 0 - 1 and diffuse again
relabelled = path.permute([1, 2, 0])
h2 = diffuse(build_diffusion_matrix(relabelled, "sym-selfloop"),
             init_features_identity(relabelled), steps=2)

# Node 0 of the original graph is node 1 of the relabelled one, yet the raw
# rows differ because the feature columns are permuted as well
print("raw rows:   ", h[0], h2[1])

# After sorting each row the two embeddings agree exactly
print("sorted rows:", reorder_rows(h)[0], reorder_rows(h2)[1])

# Optional L2 normalisation keeps only the direction of each embedding
print("normalised: ", normalize_rows(reorder_rows(h))[0])
