"""Command-line driver: ingest, prompt, generate, baseline, score, report.

Every subcommand reads a JSON run configuration (``--config``).  Outputs go
under ``output_dir``::

    corpus/     normalized transcripts, references and manifest.json
    hyp/<m>/    hypotheses of method <m> (.toc text or .seg.json)
    logs/       JSONL run logs
    scores/     per-method records, aggregates and heatmaps
    report.md   combined results tables
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import __version__
from .errors import TocSegError
from .harness import (
    AggregateReport,
    ScoreRecord,
    aggregate,
    doc_matrices,
    export_heatmap,
    render_markdown,
    score_document,
)
from .ingest import (
    CorpusDocument,
    CorpusIndex,
    compute_pauses,
    dump_transcript,
    load_manifest,
    load_reference,
    load_transcript,
    manifest_json,
    strip_header,
)
from .llm import (
    ChatClient,
    PromptConfig,
    RunLog,
    build_prompt,
    run_segment_list,
    run_toc_generation,
)
from .model import HierSegmentation, toc_to_hierseg
from .texttiling import MEAN_MINUS_HALF_STD, TilingConfig, provider_from_config, texttile
from .tocformat import parse_toc, serialize_toc

log = logging.getLogger("tocseg")


@dataclass
class RunConfig:
    manifest: Path
    output_dir: Path
    method: str | None = None
    tuning: bool = False
    prompt: PromptConfig = field(default_factory=PromptConfig)
    client: dict = field(default_factory=dict)
    tiling: TilingConfig = field(default_factory=TilingConfig)
    provider: dict = field(default_factory=dict)
    baseline_method: str | None = None
    n_t: int = 2
    f1_tolerance: int = 0
    seed: int = 0
    bootstrap_iterations: int = 100
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent
        prompt_keys = {f.name for f in fields(PromptConfig)}
        tiling = dict(raw.get("tiling", {}))
        threshold = tiling.pop("threshold", MEAN_MINUS_HALF_STD)
        metrics = raw.get("metrics", {})
        seed = check_seed(int(raw.get("seed", 0)))
        return cls(
            manifest=base / raw["manifest"],
            output_dir=base / raw.get("output_dir", "run"),
            method=raw.get("method"),
            tuning=bool(raw.get("tuning", False)),
            prompt=PromptConfig(**{k: v for k, v in raw.get("prompt", {}).items() if k in prompt_keys}),
            client=dict(raw.get("client", {})),
            tiling=TilingConfig(int(tiling.get("window_k", 5)), int(tiling.get("smoothing_width", 1)), threshold),
            provider=dict(raw.get("provider", {})),
            baseline_method=raw.get("baseline_method"),
            n_t=int(metrics.get("n_t", 2)),
            f1_tolerance=int(metrics.get("f1_tolerance", 0)),
            seed=seed,
            bootstrap_iterations=int(raw.get("bootstrap_iterations", 100)),
            raw=raw,
        )

    @property
    def corpus_dir(self) -> Path:
        return self.output_dir / "corpus"

    def generation_key(self) -> dict:
        p = self.prompt
        return {"strategy": p.strategy, "include_pauses": p.include_pauses, "language_hint": p.language_hint,
                "temperature": p.temperature, "max_retries": p.max_retries, "prompt_version": p.prompt_version,
                "model": self.client.get("model"), "endpoint": self.client.get("endpoint")}

    def method_name(self) -> str:
        if self.method:
            return self.method
        base = "ToC" if self.prompt.strategy == "toc" else "SegmentLLM"
        name = f"{base} {self.client.get('model', 'LLM')}"
        return name + (" + Pause" if self.prompt.include_pauses else "")

    def baseline_name(self) -> str:
        if self.baseline_method:
            return self.baseline_method
        return "TextTiling" if self.provider.get("kind", "lexical") == "lexical" else "TT-BERT"


def check_seed(seed: int) -> int:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "method"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _map_docs(fn, docs, jobs):
    if jobs <= 1:
        return [fn(d) for d in docs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, docs))


def _read_header(path: Path) -> dict:
    out = {}
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            m = re.match(r"# ([\w-]+): (.*)$", line.rstrip("\n"))
            if not m:
                break
            out[m.group(1)] = m.group(2)
    return out


# -- ingest -----------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, args) -> int:
    corpus = load_manifest(cfg.manifest)
    out = cfg.corpus_dir
    out.mkdir(parents=True, exist_ok=True)
    ok_docs, failures = [], []
    for d in corpus.documents:
        try:
            t = load_transcript(d.transcript, d.doc_id)
            if d.speaker_id and not t.speaker_id:
                t = type(t)(t.doc_id, t.sentences, d.speaker_id)
            if d.reference is None:
                raise TocSegError(f"{d.doc_id}: no reference in manifest")
            notes: list[str] = []
            ref = load_reference(d.reference, t, notes)
        except (TocSegError, OSError, ValueError, KeyError) as exc:
            failures.append((d.doc_id, str(exc)))
            print(f"FAIL {d.doc_id}: {exc}")
            continue
        _write(out / f"{d.doc_id}.jsonl", dump_transcript(t))
        _write(out / f"{d.doc_id}.ref.json", json.dumps(ref.to_json()) + "\n")
        ok_docs.append(CorpusDocument(d.doc_id, d.speaker_id or t.speaker_id,
                                      Path(f"{d.doc_id}.jsonl"), Path(f"{d.doc_id}.ref.json")))
        print(f"ok   {d.doc_id}: n={t.n} levels={ref.depth}" + "".join(f"\n     {x}" for x in notes))
    normalized = CorpusIndex(tuple(ok_docs), corpus.name, corpus.protocol)
    _write(out / "manifest.json", json.dumps(manifest_json(normalized, out), indent=2, ensure_ascii=False) + "\n")
    if failures:
        print(f"{len(failures)} of {len(corpus.documents)} documents failed")
        return 1
    return 0


def _load_corpus(cfg: RunConfig) -> CorpusIndex:
    path = cfg.corpus_dir / "manifest.json"
    if not path.exists():
        raise TocSegError(f"{path} not found; run 'ingest' first")
    return load_manifest(path)


# -- prompt / generate --------------------------------------------------------

def cmd_prompt(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg)
    doc = corpus.by_id(args.doc) if args.doc else corpus.documents[0]
    t = load_transcript(doc.transcript, doc.doc_id)
    for m in build_prompt(t, compute_pauses(t), cfg.prompt):
        print(f"### {m['role']}\n{m['content']}\n")
    return 0


def make_client(cfg: RunConfig) -> ChatClient:
    c = cfg.client
    if "endpoint" not in c or "model" not in c:
        raise TocSegError("config 'client' needs 'endpoint' and 'model'")
    return ChatClient(c["endpoint"], c["model"], c.get("api_key_env"), float(c.get("timeout", 120)))


def cmd_generate(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg)
    client = make_client(cfg)
    method = cfg.method_name()
    hdir = cfg.output_dir / "hyp" / slug(method)
    hdir.mkdir(parents=True, exist_ok=True)
    gkey = config_hash(cfg.generation_key())
    kind = "toc" if cfg.prompt.strategy == "toc" else "boundaries"
    _write(hdir / "method.json", json.dumps(
        {"method": method, "tuning": cfg.tuning, "kind": kind, "config_hash": gkey}, indent=2) + "\n")
    (cfg.output_dir / "logs").mkdir(parents=True, exist_ok=True)
    run_log = RunLog(cfg.output_dir / "logs" / "generate.jsonl")

    def one(doc):
        target = hdir / (f"{doc.doc_id}.toc" if kind == "toc" else f"{doc.doc_id}.seg.json")
        if target.exists() and not args.force and _cached_hash(target) == gkey:
            run_log.write(event="cache-hit", doc_id=doc.doc_id, config_hash=gkey)
            return doc.doc_id, "cached"
        t = load_transcript(doc.transcript, doc.doc_id)
        pauses = compute_pauses(t)
        try:
            if kind == "toc":
                toc, diag, attempts = run_toc_generation(t, pauses, client, cfg.prompt, run_log)
                _write(target, f"# config-hash: {gkey}\n# doc-id: {doc.doc_id}\n" + serialize_toc(toc))
            else:
                bs, repairs, attempts = run_segment_list(t, client, cfg.prompt, run_log, pauses)
                _write(target, json.dumps({"config_hash": gkey, "doc_id": doc.doc_id,
                                           "n": t.n, "levels": [list(bs.positions)]}) + "\n")
        except TocSegError as exc:
            run_log.write(event="generation-failed", doc_id=doc.doc_id, error=str(exc),
                          diagnostics=getattr(exc, "diagnostics", []))
            return doc.doc_id, f"failed: {exc}"
        return doc.doc_id, f"ok ({attempts} attempt{'s' if attempts != 1 else ''})"

    results = _map_docs(one, corpus.documents, args.jobs)
    failed = 0
    for doc_id, status in results:
        print(f"{doc_id}: {status}")
        failed += status.startswith("failed")
    return 1 if failed else 0


def _cached_hash(path: Path) -> str | None:
    if path.suffix == ".toc":
        return _read_header(path).get("config-hash")
    try:
        return json.loads(path.read_text(encoding="utf-8")).get("config_hash")
    except (ValueError, OSError):
        return None


# -- baseline -----------------------------------------------------------------

def cmd_baseline(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg)
    provider = provider_from_config(cfg.provider)
    method = cfg.baseline_name()
    hdir = cfg.output_dir / "hyp" / slug(method)
    key = config_hash({"tiling": [cfg.tiling.window_k, cfg.tiling.smoothing_width,
                                  cfg.tiling.threshold_policy], "provider": cfg.provider})
    _write(hdir / "method.json", json.dumps(
        {"method": method, "tuning": False, "kind": "boundaries", "config_hash": key}, indent=2) + "\n")

    def one(doc):
        t = load_transcript(doc.transcript, doc.doc_id)
        try:
            bs = texttile(t, provider, cfg.tiling)
        except TocSegError as exc:
            return doc.doc_id, f"failed: {exc}"
        _write(hdir / f"{doc.doc_id}.seg.json", json.dumps(
            {"config_hash": key, "doc_id": doc.doc_id, "n": t.n, "levels": [list(bs.positions)]}) + "\n")
        return doc.doc_id, f"ok ({len(bs)} boundaries)"

    failed = 0
    for doc_id, status in _map_docs(one, corpus.documents, args.jobs):
        print(f"{doc_id}: {status}")
        failed += status.startswith("failed")
    return 1 if failed else 0


# -- score / report -------------------------------------------------------------

def load_hypothesis(path: Path, n: int) -> HierSegmentation:
    if path.suffix == ".toc":
        toc, _ = parse_toc(strip_header(path.read_text(encoding="utf-8")), n)
        return toc_to_hierseg(toc, n)
    return HierSegmentation.from_json(json.loads(path.read_text(encoding="utf-8")))


def _hyp_path(hdir: Path, doc_id: str) -> Path | None:
    for suffix in (".toc", ".seg.json"):
        p = hdir / f"{doc_id}{suffix}"
        if p.exists():
            return p
    return None


def cmd_score(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg)
    hyp_root = cfg.output_dir / "hyp"
    method_dirs = sorted(p for p in hyp_root.iterdir() if (p / "method.json").exists()) if hyp_root.exists() else []
    if args.method:
        method_dirs = [p for p in method_dirs if p.name == slug(args.method)]
    if not method_dirs:
        print("no hypotheses found; run 'generate' or 'baseline' first")
        return 1
    sdir = cfg.output_dir / "scores"
    h = config_hash({"metrics": [cfg.n_t, cfg.f1_tolerance], "seed": cfg.seed,
                     "iterations": cfg.bootstrap_iterations})
    missing_any = False
    for hdir in method_dirs:
        meta = json.loads((hdir / "method.json").read_text(encoding="utf-8"))
        records: list[ScoreRecord] = []
        missing = []
        for doc in corpus.documents:
            hp = _hyp_path(hdir, doc.doc_id)
            if hp is None:
                missing.append(doc.doc_id)
                continue
            t = load_transcript(doc.transcript, doc.doc_id)
            ref = load_reference(doc.reference, t)
            hyp = load_hypothesis(hp, t.n)
            records += score_document(doc.doc_id, ref, hyp, cfg.n_t, cfg.f1_tolerance)
        for d in missing:
            print(f"{meta['method']}: missing hypothesis for {d}")
        missing_any |= bool(missing)
        if not records:
            continue
        scored_ids = {r.doc_id for r in records}
        sub = CorpusIndex(tuple(d for d in corpus.documents if d.doc_id in scored_ids), corpus.name, corpus.protocol)
        rep = aggregate(records, sub, meta["method"], tuning=meta.get("tuning", False),
                        seed=cfg.seed, iterations=cfg.bootstrap_iterations)
        base = sdir / hdir.name
        header = {"config_hash": h, "hypothesis_hash": meta.get("config_hash"), "method": meta["method"]}
        _write(base.with_suffix(".records.jsonl"),
               json.dumps({"header": header}, sort_keys=True) + "\n"
               + "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in records))
        _write(base.with_suffix(".json"), json.dumps({**rep.to_json(), "header": header}, indent=2,
                                                     ensure_ascii=False, sort_keys=True) + "\n")
        _write(base.with_suffix(".md"), render_markdown([rep], header=f"config-hash: {h}"))
        _write(base.with_suffix(".heatmap.csv"),
               export_heatmap(list(doc_matrices(records).values()), header=f"config-hash: {h}"))
        print(f"{meta['method']} [{rep.protocol}, {rep.n_docs} docs]: "
              + ", ".join(f"{k}={v}" for k, v in rep.to_json()["metrics"].items()
                          for v in [f"{v['mean']}±{v['stddev']}"]))
    return 1 if missing_any else 0


def cmd_report(cfg: RunConfig, args) -> int:
    dirs = [cfg.output_dir / "scores"] + [Path(p) / "scores" for p in args.runs]
    reports = []
    for d in dirs:
        for p in sorted(d.glob("*.json")):
            reports.append(AggregateReport.from_json(json.loads(p.read_text(encoding="utf-8"))))
    if not reports:
        print("no score aggregates found; run 'score' first")
        return 1
    h = config_hash(sorted(json.dumps(r.to_json(), sort_keys=True) for r in reports))
    md = render_markdown(reports, header=f"config-hash: {h}")
    _write(cfg.output_dir / "report.md", md)
    _write(cfg.output_dir / "report.json", json.dumps(
        {"header": {"config_hash": h}, "results": [r.to_json() for r in reports]},
        indent=2, ensure_ascii=False, sort_keys=True) + "\n")
    print(md, end="")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "prompt": cmd_prompt,
    "generate": cmd_generate,
    "baseline": cmd_baseline,
    "score": cmd_score,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--jobs", type=int, default=1, help="documents processed in parallel")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tocseg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tocseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="validate and normalize a corpus")
    p = sub.add_parser("prompt", parents=[common], help="print the prompt for one document")
    p.add_argument("--doc", help="document id (default: first in corpus)")
    p.add_argument("--strategy", choices=["toc", "segment-list"])
    p.add_argument("--with-pauses", action="store_true")
    p = sub.add_parser("generate", parents=[common], help="query the chat endpoint for hypotheses")
    p.add_argument("--strategy", choices=["toc", "segment-list"])
    p.add_argument("--with-pauses", action="store_true")
    p.add_argument("--force", action="store_true", help="ignore cached hypotheses")
    sub.add_parser("baseline", parents=[common], help="run the TextTiling baseline")
    p = sub.add_parser("score", parents=[common], help="score hypotheses against references")
    p.add_argument("--method", help="score only this method")
    p = sub.add_parser("report", parents=[common], help="combine score aggregates into tables")
    p.add_argument("runs", nargs="*", help="additional run output directories")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = check_seed(args.seed)
        overrides = {}
        if getattr(args, "strategy", None):
            overrides["strategy"] = args.strategy
        if getattr(args, "with_pauses", False):
            overrides["include_pauses"] = True
        if overrides:
            cfg.prompt = PromptConfig(**{**cfg.prompt.__dict__, **overrides})
        return COMMANDS[args.command](cfg, args)
    except (TocSegError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
