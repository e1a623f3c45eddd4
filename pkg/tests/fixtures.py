"""Small on-disk corpora and a scripted chat endpoint for pipeline tests."""

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

TOPICS = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"]


def doc_outline(k: int):
    """A two-level outline for document ``k``: (dotted number, title, start)."""
    return [
        ("1", "Welcome", 1),
        ("2", f"Topic {TOPICS[k % 6]}", 5),
        ("2.1", "Background", 5),
        ("2.2", "Details", 9 + k % 3),
        ("3", "Wrap-up", 15),
    ]


def toc_text(outline) -> str:
    return "".join(f"{num} {title} [{start}]\n" for num, title, start in outline)


def write_corpus(root: Path, docs: int = 5, speakers=None, n: int = 18, name: str = "mini",
                 protocol=None, bad_doc: int | None = None) -> Path:
    """Write transcripts, ToC references and a manifest; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for k in range(docs):
        doc_id = f"doc{k}"
        rows = [json.dumps({"doc_id": doc_id})]
        t = 0.0
        for i in range(1, n + 1):
            end = t + 2.0
            rows.append(json.dumps({"i": i, "text": f"[{doc_id}] sentence {i} about {TOPICS[(i + k) % 6]}.",
                                    "start": round(t, 2), "end": round(end, 2)}))
            t = end + (1.5 if i in (4, 14) else 0.3)
        if k == bad_doc:
            rows.append("{not json")
        (root / f"{doc_id}.jsonl").write_text("\n".join(rows) + "\n", encoding="utf-8")
        (root / f"{doc_id}.toc").write_text(toc_text(doc_outline(k)), encoding="utf-8")
        entry = {"doc_id": doc_id, "transcript": f"{doc_id}.jsonl", "reference": f"{doc_id}.toc"}
        if speakers:
            entry["speaker"] = speakers[k % len(speakers)]
        entries.append(entry)
    manifest = {"name": name, "documents": entries}
    if protocol:
        manifest["protocol"] = protocol
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


_DOC_RE = re.compile(r"\[(doc\d+)\]")


class StubEndpoint:
    """OpenAI-compatible chat endpoint on localhost replying with each document's reference ToC.

    ``mode`` selects the reply: ``"toc"`` (reference outline), ``"segments"``
    (finest reference segments as index lists) or ``"garbage"``.
    """

    def __init__(self, mode: str = "toc"):
        self.mode = mode
        self.requests: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                stub.requests.append(body)
                text = stub.reply(body["messages"])
                data = json.dumps({"choices": [{"message": {"role": "assistant", "content": text}}],
                                   "usage": {"prompt_tokens": 100, "completion_tokens": 20}}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"

    def reply(self, messages) -> str:
        doc = _DOC_RE.search(messages[1]["content"]).group(1)
        k = int(doc[3:])
        outline = doc_outline(k)
        if self.mode == "toc":
            return "Here is the table of contents:\n```\n" + toc_text(outline) + "```"
        if self.mode == "segments":
            n = sum(1 for line in messages[1]["content"].splitlines()[1:] if line.strip())
            starts = sorted({s for _, _, s in outline})
            bounds = starts[1:] + [n + 1]
            return json.dumps([list(range(a, b)) for a, b in zip(starts, bounds)])
        return "I'm sorry, I can't help with that."

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def write_config(path: Path, manifest: Path, out: Path, endpoint: str, **extra) -> Path:
    cfg = {"manifest": str(manifest), "output_dir": str(out), "seed": 7,
           "client": {"endpoint": endpoint, "model": "stub-model", "timeout": 10},
           "prompt": {"strategy": "toc", "max_retries": 1}}
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k] = {**cfg[k], **v}
        else:
            cfg[k] = v
    path.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
    return path
