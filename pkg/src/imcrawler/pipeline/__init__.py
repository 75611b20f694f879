"""Post-capture pipeline: normalize, verify, store, filter and summarize."""

from .records import (
    PROFILE_COLUMNS,
    POST_COLUMNS,
    PROFILE_LIST_FIELDS,
    PROFILE_SCALAR_FIELDS,
    PostRecord,
    ProfileRecord,
    content_dict,
    read_posts_csv,
    read_profiles_csv,
    write_posts_csv,
    write_profiles_csv,
)
from .normalize import (
    MISSING,
    UNPARSEABLE,
    NormalizeResult,
    clean_text,
    normalize_raw,
    parse_count,
)
from .verify import (
    VerificationPolicy,
    VerificationReport,
    emit_reextract_list,
    verify_records,
)
from .store import RecordStore, StoreStats
from .stats import BehaviorSummary, behavior_summary, filter_by_city

__all__ = [
    "PROFILE_COLUMNS",
    "POST_COLUMNS",
    "PROFILE_LIST_FIELDS",
    "PROFILE_SCALAR_FIELDS",
    "PostRecord",
    "ProfileRecord",
    "content_dict",
    "read_posts_csv",
    "read_profiles_csv",
    "write_posts_csv",
    "write_profiles_csv",
    "MISSING",
    "UNPARSEABLE",
    "NormalizeResult",
    "clean_text",
    "normalize_raw",
    "parse_count",
    "VerificationPolicy",
    "VerificationReport",
    "emit_reextract_list",
    "verify_records",
    "RecordStore",
    "StoreStats",
    "BehaviorSummary",
    "behavior_summary",
    "filter_by_city",
]
