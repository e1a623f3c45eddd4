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
# # Outlines and boundaries
#
# A table of contents is the human-facing view of a segmentation. Each entry
# has a dotted number, a title and the sentence where the section starts.
# Turning it into boundaries gives one boundary set per depth, coarse first.

# %%
from tocseg import HierSegmentation, hierseg_to_segments, parse_toc, serialize_toc, toc_to_hierseg, validate_hierseg

raw = """Sure! Here is the outline:
```
1 Introduction [1]
2 Project Requirements [15]
2.1 User Interface [15]
2.2 Testing Strategies [42]
2.2.1 Unit Tests [47]
3 Wrap-up [80]
```"""
toc, diag = parse_toc(raw, n=90)
print(serialize_toc(toc))
print(diag.messages())

# %% [markdown]
# Boundary `p` sits between sentences `p` and `p + 1`. A section opening at
# sentence 15 therefore contributes boundary 14, at its own depth and every
# deeper one.

# %%
hs = toc_to_hierseg(toc, 90)
for level, bs in enumerate(hs.levels, start=1):
    print(level, bs.positions, hierseg_to_segments(hs, level))
print("violations:", validate_hierseg(hs))

# %% [markdown]
# Model output is rarely this tidy. Dotted numbers are only depth hints, so
# miscounted siblings are renumbered, and out-of-order or out-of-range
# starts are repaired. Every change is logged.

# %%
messy = """- **1 Opening [3]**
3 Results [40].
3.1.1.1 A detail [44]
2 Method [12]
2 Method again [12]
4 Appendix [400]"""
toc, diag = parse_toc(messy, n=120)
print(serialize_toc(toc))
for m in diag.messages():
    print(" ", m)

# %% [markdown]
# Persistence means a coarse boundary reappears at every finer level.
# A stack that breaks it is reported, not silently fixed.

# %%
broken = HierSegmentation.from_positions(20, [{4, 9}, {4}])
print(validate_hierseg(broken))
