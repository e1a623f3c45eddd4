"""Hierarchical topic segmentation of speech transcripts.

Build pause-annotated prompts, turn generated tables of contents into nested
segmentations, and score them with linear and hierarchical boundary metrics.
"""

__version__ = "0.1.0"

from .errors import TocSegError
from .harness import (
    ScoreRecord,
    aggregate,
    bootstrap,
    export_heatmap,
    loso_aggregate,
    render_markdown,
    score_document,
)
from .ingest import (
    TopicInterval,
    compute_pauses,
    intervals_to_hierseg,
    load_reference,
    load_transcript,
    loso_splits,
    snap_time_to_sentence,
)
from .llm import (
    ChatClient,
    PromptConfig,
    RunLog,
    StubChatClient,
    build_prompt,
    complete,
    run_segment_list,
    run_toc_generation,
)
from .metrics import (
    align_levels,
    b_hier,
    boundary_edit_distance,
    boundary_f1,
    boundary_similarity,
    level_score_matrix,
    pk,
    windowdiff,
)
from .model import (
    BoundarySet,
    HierSegmentation,
    Sentence,
    Toc,
    TocEntry,
    Transcript,
    hierseg_to_segments,
    toc_to_hierseg,
    validate_hierseg,
)
from .texttiling import TilingConfig, depth_scores, gap_scores, lexical_vectors, smooth, texttile
from .tocformat import parse_toc, repair_toc, serialize_toc

__all__ = [
    "ChatClient", "PromptConfig", "RunLog", "ScoreRecord", "StubChatClient", "TilingConfig",
    "aggregate", "bootstrap", "build_prompt", "complete", "depth_scores", "export_heatmap",
    "gap_scores", "lexical_vectors", "loso_aggregate", "render_markdown", "run_segment_list",
    "run_toc_generation", "score_document", "smooth", "texttile",
    "BoundarySet", "HierSegmentation", "Sentence", "Toc", "TocEntry", "TocSegError",
    "TopicInterval", "Transcript", "align_levels", "b_hier", "boundary_edit_distance",
    "boundary_f1", "boundary_similarity", "compute_pauses", "hierseg_to_segments",
    "intervals_to_hierseg", "level_score_matrix", "load_reference", "load_transcript",
    "loso_splits", "parse_toc", "pk", "repair_toc", "serialize_toc", "snap_time_to_sentence",
    "toc_to_hierseg", "validate_hierseg", "windowdiff",
]
