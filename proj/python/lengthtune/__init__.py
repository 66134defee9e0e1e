"""Length-aware tuning experiments for log-linear translation models.

Text arguments are whitespace tokenized. Library errors surface as
``lengthtune.Error``, a subclass of ``ValueError``.
"""

from ._lengthtune import (
    Error,
    corpus_bleu,
    experiment,
    kendall_tau,
    pearson,
    select,
    sentence_bleu,
    spearman,
    stats,
    synth,
    tune,
)

__all__ = [
    "Error",
    "corpus_bleu",
    "experiment",
    "kendall_tau",
    "pearson",
    "select",
    "sentence_bleu",
    "spearman",
    "stats",
    "synth",
    "tune",
]
