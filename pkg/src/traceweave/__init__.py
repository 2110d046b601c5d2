"""Reconstruct, attribute, and analyze AI-assisted programming sessions."""

from .analytics import (
    OverviewAggregate,
    TrendResult,
    WorkSession,
    ai_share_trend,
    behavior_distribution,
    build_timeline,
    overview,
    segment_sessions,
)
from .attribution import (
    AttributionConfig,
    MatchCandidate,
    attribute_commits,
    external_source_flag,
    match_score,
    normalize_lines,
)
from .behavior import BehaviorLabel, LlmBackend, RuleBackend, classify_behavior
from .chats import IngestReport, ingest_chats, is_trivial_prompt
from .errors import BackendError, CorpusError
from .linediff import apply_file_diff, compute_file_diff
from .models import (
    Attribution,
    ChatRequest,
    ChatSession,
    CommitKind,
    EventKind,
    FileDiff,
    MatchClass,
    Origin,
    ShadowCommit,
    TextEditGroup,
    Timeline,
    TimelineEvent,
    ToolCall,
    UserRef,
    dump_timeline,
    hash_user_id,
    load_timeline,
    validate_timeline,
)
from .shadow import RepoSource, read_shadow_history
from .synth import GroundTruth, Perturbation, SynthConfig, generate

__version__ = "0.1.0"
