"""Readership distribution universality toolkit.

Thin Python layer over the C++ core: lognormal fitting, Shapiro-Wilk
log-normality tests, mean rescaling and collapse, CCDFs, characteristic
scores and scales, and top-z% tolerance analysis.
"""

from ._core import (  # noqa: F401
    CssResult,
    Discretization,
    Error,
    GroupStats,
    LognormalFit,
    PublicationRecord,
    SwTestResult,
    TieRule,
    TopVariant,
    TopZReport,
    TruncationRule,
    ZeroPolicy,
    ccdf,
    characteristic_scores,
    classify,
    collapse,
    count_stats,
    fit_lognormal,
    format_records,
    generate_corpus,
    group_sizes,
    lognormal_mean,
    parse_records,
    rescale,
    shapiro_wilk,
    sigma_z,
    test_lognormality,
    top_share_report,
)

__version__ = "0.1.0"
