# %% [markdown]
# # Sign patterns on grids
#
# A pattern is a sign vector `alpha`. States `p * alpha` with `|p| >= p0`
# are "in the pattern". On a connected graph those states are exactly the
# far-from-origin kernel of `Q = D + A1 - A2`, where `A1` keeps the edges
# joining opposite signs and `A2` the edges joining equal signs.

# %%
from pathlib import Path

import numpy as np

from lqpattern.graphs import grid_graph
from lqpattern.patterns import PatternSpec, build_pattern_matrix, is_in_pattern, pattern_from_kron
from lqpattern.render import render_snapshot

out = Path("out_notebooks")
out.mkdir(exist_ok=True)

# %% [markdown]
# Kronecker products of 7-vectors build 7x7 patterns. Vertices are
# numbered down each column first, so `kron(beta1, ones)` is constant
# within a column: vertical stripes.

# %%
beta1 = np.array([1, -1, 1, -1, 1, -1, 1.0])
ones = np.ones(7)
g = grid_graph(7, 7)
stripes = pattern_from_kron(beta1, ones)
checker = pattern_from_kron(beta1, beta1)
print(render_snapshot(stripes, g, out / "stripes"))
print(render_snapshot(checker, g, out / "checkerboard"))

# %% [markdown]
# `Q alpha = 0` by construction, and the kernel is one-dimensional.

# %%
spec = PatternSpec(stripes)
Q = build_pattern_matrix(g, spec)
print("||Q alpha|| =", np.linalg.norm(Q @ stripes))
print("kernel dimension =", int(np.sum(np.linalg.eigvalsh(Q) < 1e-9)))

# %% [markdown]
# Membership needs both the right signs (kernel of Q) and enough size.

# %%
for x, label in [(2 * stripes, "2 alpha"), (0.5 * stripes, "0.5 alpha"), (stripes + 0.1 * checker, "perturbed")]:
    print(f"{label:10s} in pattern: {is_in_pattern(x, g, spec)}")

# %% [markdown]
# The stripe is not a Laplacian eigenvector, so plain diffusion cannot
# hold it. Leaders have to supply a constant input.

# %%
L = g.laplacian
lam = stripes @ L @ stripes / (stripes @ stripes)
print("eigen residual:", np.linalg.norm(L @ stripes - lam * stripes) / np.linalg.norm(stripes))
