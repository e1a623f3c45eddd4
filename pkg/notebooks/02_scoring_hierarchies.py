# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Scoring segmentations
#
# Boundary similarity explains a hypothesis as edits of the reference. Exact
# matches are free. A boundary off by `d < n_t` positions is a transposition
# costing `d / n_t`. Anything else is an addition costing 1.

# %%
from tocseg import BoundarySet, boundary_edit_distance, boundary_f1, boundary_similarity

ref, hyp = BoundarySet(20, (5, 6)), BoundarySet(20, (6, 7))
ops = boundary_edit_distance(ref, hyp)
print(ops, "cost", ops.cost, "B", boundary_similarity(ref, hyp))
print("F1 exact", boundary_f1(ref, hyp), "F1 +-1", boundary_f1(ref, hyp, tolerance=1))

# %% [markdown]
# Pairing 6 with 6 looks natural, but it strands 5 and 7 at a cost of 2.
# Shifting both boundaries by one costs 1, so the alignment is solved exactly
# rather than greedily.
#
# For hierarchies every reference level is scored against every hypothesis
# level. Levels are then mapped monotonically: a deeper reference level may
# not map to a coarser hypothesis level.

# %%
import numpy as np

from tocseg import HierSegmentation, align_levels, b_hier, level_score_matrix

ref = HierSegmentation.from_positions(60, [{20, 40}, {10, 20, 30, 40, 50}])
hyp = HierSegmentation.from_positions(60, [{20}, {20, 41}, {10, 20, 31, 41, 50}])
m = level_score_matrix(ref, hyp, boundary_similarity)
print(np.round(m.values, 3))
phi, total = align_levels(m)
print("phi", phi.phi, "B_hier", b_hier(ref, hyp))

# %% [markdown]
# With one level on each side there is only one mapping, and B_hier reduces
# to plain B.

# %%
a = HierSegmentation.from_positions(60, [{20, 40}])
b = HierSegmentation.from_positions(60, [{21, 40, 55}])
print(b_hier(a, b), boundary_similarity(a.finest, b.finest))

# %% [markdown]
# Per-document matrices average into a heatmap. A hypothesis with fewer
# levels repeats its deepest column.

# %%
from tocseg import export_heatmap

print(export_heatmap([m, level_score_matrix(a, b, boundary_similarity)]))
