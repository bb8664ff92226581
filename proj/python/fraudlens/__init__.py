"""Expert-guided fraud-evidence discovery pipeline.

Thin Python surface over the C++ core: synthetic corpus generation, the
variational subject prior, hybrid retrieval, two-phase expert analysis, and
issue/evidence recall evaluation. All functions are deterministic given their
seeds and run fully offline with the scripted provider.
"""

from fraudlens._core import (
    ConfigError,
    ParseError,
    ProviderError,
    ValidationError,
    build_index,
    default_vocabulary,
    evaluate,
    fit_prior,
    pseudo_log_likelihood,
    rank_subjects,
    run_all,
    search,
    synth,
    top_associations,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ParseError",
    "ProviderError",
    "ValidationError",
    "build_index",
    "default_vocabulary",
    "evaluate",
    "fit_prior",
    "pseudo_log_likelihood",
    "rank_subjects",
    "run_all",
    "search",
    "synth",
    "top_associations",
    "__version__",
]
