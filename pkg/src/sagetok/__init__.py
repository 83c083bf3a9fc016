"""Subword vocabulary construction toolkit.

Three trainers over one shared greedy encoder: bottom-up BPE, top-down
unigram-likelihood pruning, and contextual pruning driven by a skipgram
corpus-likelihood objective, plus an analysis suite for the resulting
vocabularies.
"""

__version__ = "0.1.0"

from .vocab import MARKER, Vocabulary  # noqa: F401
