"""Mediation analysis of language in oral-argument transcripts."""

from ._medlang import (
    ConfigError,
    DataError,
    MedlangError,
    NumericalError,
    ParseError,
    default_lexicon,
    estimate,
    exact_effects,
    measure_disfluency,
    measure_hedging,
    rerun,
    run,
    sha256_hex,
    simulate,
)

__all__ = [
    "ConfigError",
    "DataError",
    "MedlangError",
    "NumericalError",
    "ParseError",
    "default_lexicon",
    "estimate",
    "exact_effects",
    "measure_disfluency",
    "measure_hedging",
    "rerun",
    "run",
    "sha256_hex",
    "simulate",
]
