import json
import random
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from conftest import block_document, make_transcript
from tocseg.errors import ProviderError
from tocseg.metrics import boundary_f1
from tocseg.model import BoundarySet
from tocseg.texttiling import (
    HttpProvider,
    SubprocessProvider,
    TilingConfig,
    depth_scores,
    gap_scores,
    lexical_vectors,
    provider_from_config,
    texttile,
)


def test_lexical_vectors():
    v = lexical_vectors(["a cat", "a dog", "", "a cat"])
    assert v.shape == (4, 2)  # vocabulary {cat, dog}; "a" is too short
    assert v[0] @ v[1] == 0
    assert (v[0] == v[3]).all()
    assert not v[2].any()


def test_gap_scores():
    v = np.array([[1, 0]] * 4 + [[0, 1]] * 4, dtype=float)
    g = gap_scores(v, 2)
    assert len(g) == 7
    assert g[3] == 0.0
    assert g[0] == pytest.approx(1.0) and g[6] == pytest.approx(1.0)
    assert len(gap_scores(np.ones((2, 3)), 5)) == 1
    assert gap_scores(np.zeros((3, 2)), 1).tolist() == [0.0, 0.0]


def test_depth_scores():
    assert depth_scores(np.array([0.9, 0.2, 0.9]))[1] == pytest.approx(1.4)
    assert depth_scores(np.array([0.5] * 6)).tolist() == [0.0] * 6
    d = depth_scores(np.array([0.9, 0.7, 0.5, 0.3]))
    # climbing is only possible to the left
    assert d.tolist() == pytest.approx([0.0, 0.2, 0.4, 0.6])


def test_three_blocks_exact():
    rng = random.Random(1)
    hits = 0
    for _ in range(10):
        t, truth = block_document(rng)
        if set(texttile(t).positions) == truth:
            hits += 1
    assert hits >= 8


def test_uniform_document_few_boundaries():
    rng = random.Random(2)
    counts = []
    for _ in range(20):
        pool = [f"v{j}" for j in range(10)]
        t = make_transcript([" ".join(rng.choice(pool) for _ in range(8)) for _ in range(30)])
        counts.append(len(texttile(t)))
    # random fluctuation produces some valleys, but far fewer than the gaps available
    assert np.mean(counts) < 6


def test_two_identical_sentences():
    t = make_transcript(["same words here", "same words here"])
    assert texttile(t) == BoundarySet(2)
    assert texttile(make_transcript(["only"])) == BoundarySet(1)


def test_vocabulary_renaming_invariant():
    rng = random.Random(3)
    for _ in range(10):
        t, _ = block_document(rng)
        words = sorted({w for s in t.texts for w in s.split()})
        shuffled = words[:]
        rng.shuffle(shuffled)
        rename = {a: "z" + b for a, b in zip(words, shuffled)}
        t2 = make_transcript([" ".join(rename[w] for w in s.split()) for s in t.texts])
        assert texttile(t) == texttile(t2)


def test_threshold_monotone():
    rng = random.Random(4)
    for _ in range(10):
        t, _ = block_document(rng, blocks=4, per=6)
        counts = [len(texttile(t, config=TilingConfig(threshold_policy=th)))
                  for th in np.linspace(-0.1, 2.0, 30)]
        assert counts == sorted(counts, reverse=True)


def test_f1_tolerance_one():
    rng = random.Random(5)
    scores = []
    for _ in range(20):
        t, truth = block_document(rng)
        scores.append(boundary_f1(BoundarySet(t.n, tuple(truth)), texttile(t), 1)[2])
    assert np.mean(scores) >= 0.9


def test_config_validation():
    with pytest.raises(ValueError):
        TilingConfig(window_k=0)
    with pytest.raises(ValueError):
        TilingConfig(smoothing_width=-1)
    with pytest.raises(ValueError):
        TilingConfig(threshold_policy="median")


EMBED_SCRIPT = """
import json, sys
req = json.load(sys.stdin)
vecs = [[float("alpha" in s), float("beta" in s), 0.1] for s in req["sentences"]]
json.dump({"vectors": vecs}, sys.stdout)
"""


def _two_topic():
    return make_transcript(["alpha one"] * 6 + ["beta two"] * 6)


def test_subprocess_provider(tmp_path):
    script = tmp_path / "embed.py"
    script.write_text(EMBED_SCRIPT)
    prov = provider_from_config({"kind": "subprocess", "command": [sys.executable, str(script)]})
    assert isinstance(prov, SubprocessProvider)
    assert texttile(_two_topic(), prov).positions == (6,)


def test_subprocess_provider_failure(tmp_path):
    script = tmp_path / "bad.py"
    script.write_text("import sys; sys.stderr.write('model missing'); sys.exit(3)")
    with pytest.raises(ProviderError, match="model missing"):
        texttile(_two_topic(), SubprocessProvider((sys.executable, str(script))))


def test_provider_exception_wrapped():
    def broken(sentences):
        raise RuntimeError("boom")

    with pytest.raises(ProviderError, match="boom"):
        texttile(_two_topic(), broken)
    with pytest.raises(ProviderError, match="shape"):
        texttile(_two_topic(), lambda s: np.ones((3, 2)))


class _EmbedHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.path == "/fail":
            self.send_response(500)
            self.end_headers()
            return
        vecs = [[float("alpha" in s), float("beta" in s)] for s in body["sentences"]]
        data = json.dumps({"vectors": vecs}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def embed_server():
    srv = ThreadingHTTPServer(("127.0.0.1", 0), _EmbedHandler)
    th = threading.Thread(target=srv.serve_forever, daemon=True)
    th.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()


def test_http_provider(embed_server):
    prov = provider_from_config({"kind": "http", "url": embed_server + "/embed"})
    assert isinstance(prov, HttpProvider)
    assert texttile(_two_topic(), prov).positions == (6,)
    with pytest.raises(ProviderError):
        texttile(_two_topic(), HttpProvider(embed_server + "/fail"))
