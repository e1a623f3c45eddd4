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
# # TextTiling baseline
#
# Similarity between the windows on either side of each gap dips where the
# topic changes. Depth scores measure how far each dip falls below the
# peaks around it.

# %%
import random

import numpy as np

from tocseg import TilingConfig, depth_scores, gap_scores, lexical_vectors, smooth, texttile
from tocseg.model import Sentence, Transcript

rng = random.Random(0)
texts = []
for block in range(3):
    pool = [f"w{block}x{j}" for j in range(12)]
    texts += [" ".join(rng.choice(pool) for _ in range(8)) for _ in range(10)]
t = Transcript("synthetic", tuple(Sentence(i, s, 2.0 * i, 2.0 * i + 1.5) for i, s in enumerate(texts, start=1)))

g = gap_scores(lexical_vectors(t.texts), window_k=5)
print(np.round(smooth(g, 1), 2))
print(np.round(depth_scores(g, 1), 2))

# %%
print(texttile(t))

# %% [markdown]
# The threshold defaults to mean minus half a standard deviation of the
# depths. A fixed value can be set instead. Raising it never adds
# boundaries.

# %%
for th in (0.2, 0.8, 1.5, 3.0):
    print(th, texttile(t, config=TilingConfig(threshold_policy=th)).positions)

# %% [markdown]
# Sentence vectors are pluggable. Any callable returning one row per sentence
# works, and external embedding services can be wired in through a
# subprocess or an HTTP endpoint.

# %%
def char_trigrams(sentences):
    grams = sorted({s[i:i + 3] for s in sentences for i in range(len(s) - 2)})
    index = {g: k for k, g in enumerate(grams)}
    out = np.zeros((len(sentences), len(grams)))
    for row, s in enumerate(sentences):
        for i in range(len(s) - 2):
            out[row, index[s[i:i + 3]]] += 1
    return out


print(texttile(t, provider=char_trigrams))
