from ._drowsy import (
    ConfigError,
    Error,
    ParseError,
    baseline_classify,
    compute_metrics,
    detect_events,
    extract,
    format_model_comparison,
    project,
    solve_pnp,
    synthesize,
)

__all__ = [
    "ConfigError",
    "Error",
    "ParseError",
    "baseline_classify",
    "compute_metrics",
    "detect_events",
    "extract",
    "format_model_comparison",
    "project",
    "solve_pnp",
    "synthesize",
]
