import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sagetok.corpus import RawCorpus
from sagetok.embeddings import SkipGramTable


@pytest.fixture
def tiny_corpus():
    return RawCorpus.from_lines(
        [
            "the cat sat on the mat",
            "the dog sat on the log",
            "a cat and a dog met here",
            "the mat was flat and the log was long",
            "dogs sat where cats sat",
        ]
    )


def random_table(rows: int, dim: int, rng: np.random.Generator, window: int = 5, scale: float = 0.6):
    return SkipGramTable(
        rng.normal(0.0, scale, (rows, dim)),
        rng.normal(0.0, scale, (rows, dim)),
        dim,
        window,
    )


def zero_table(rows: int, dim: int, window: int = 5):
    return SkipGramTable(np.zeros((rows, dim)), np.zeros((rows, dim)), dim, window)
