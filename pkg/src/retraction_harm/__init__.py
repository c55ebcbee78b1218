"""Citation-network analysis of the harm around retracted publications."""

from .comparator import (
    CohortCache,
    ComparatorAggregate,
    ComparatorKeyIndex,
    aggregate,
    comparator_set,
)
from .frontier import (
    FrontierLevel,
    PrePostSplit,
    classify_pre_post,
    compute_frontiers,
    dedup_frontiers,
    direct_citers,
    expand_frontier,
)
from .graph import CitationGraph, YearlyCitationIndex, build_graph, yearly_citations
from .harm import HarmTable, HarmVector, compute_harm_table, harm_total, harm_vector, harm_yearly
from .ingest import (
    DropCounters,
    build_corpus,
    dedup_by_doi,
    filter_analysis_corpus,
    load_journal_if,
    load_publications,
    load_retractions,
)
from .manifest import RunManifest, load_manifest
from .records import (
    Corpus,
    JournalIfRecord,
    PublicationRecord,
    RetractionRecord,
    normalize_doi,
    normalize_label,
    normalize_venue,
)
from .stats import (
    AnalysisTable,
    QuartileSummary,
    distance_analysis,
    field_analysis,
    format_cell,
    if_analysis,
    if_bin_label,
    parse_cell,
    prepost_analysis,
    quantiles,
)
from .synth import SynthConfig, SynthDataset, generate

__version__ = "0.1.0"
