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
# # Prompting for an outline
#
# Every transcript line carries its sentence index. With pauses enabled the
# silence before each sentence is added, which gives the model a prosodic
# hint about where topics change.

# %%
from tocseg import PromptConfig, RunLog, StubChatClient, build_prompt, compute_pauses, run_toc_generation
from tocseg.model import Sentence, Transcript

lines = ["Good morning everyone.", "Today we plan the project.", "First the requirements.",
         "The interface must be simple.", "Users want few clicks.", "Now testing.",
         "We write unit tests first.", "Then integration tests.", "That's all for today."]
starts = [0.0, 2.1, 5.0, 7.6, 10.0, 14.2, 16.5, 19.0, 23.4]
t = Transcript("demo", tuple(Sentence(i, s, a, a + 2.0) for i, (s, a) in enumerate(zip(lines, starts), start=1)))

cfg = PromptConfig(include_pauses=True)
msgs = build_prompt(t, compute_pauses(t), cfg)
print(msgs[1]["content"])

# %% [markdown]
# A scripted client stands in for the chat endpoint. The first reply is
# unusable, so the pipeline asks again and quotes what went wrong.

# %%
stub = StubChatClient([
    "I think this lecture is about projects.",
    "1 Opening [1]\n2 Requirements [3]\n2.1 Interface [4]\n3 Testing [6]\n3.1 Unit tests [7]\n4 Closing [9]",
])
log = RunLog()
toc, diag, attempts = run_toc_generation(t, compute_pauses(t), stub, cfg, log)
print("attempts:", attempts)
print(stub.calls[1][-1]["content"])
for e in toc:
    print(e.dotted, e.title, e.start_index)

# %% [markdown]
# Scoring against a reference gives linear scores on the finest level plus
# the hierarchical score.

# %%
from tocseg import HierSegmentation, bootstrap, score_document, toc_to_hierseg

ref = HierSegmentation.from_positions(9, [{2, 5, 8}, {2, 3, 5, 6, 8}])
hyp = toc_to_hierseg(toc, 9)
for r in score_document("demo", ref, hyp):
    if r.metric != "B_level":
        print(r.metric, round(r.value, 4))

# %% [markdown]
# Across a corpus, documents are resampled with a seeded generator to give a
# spread alongside the mean.

# %%
print(bootstrap({"a": 0.61, "b": 0.74, "c": 0.55, "d": 0.80}, iterations=100, seed=7))
