import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from graphbpe.fileio import load_corpus
from graphbpe.miner import learn_merging_operations

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def corpus_1k():
    ids, mols = load_corpus(FIXTURES / "corpus_1k.smi")
    return ids, mols


@pytest.fixture(scope="session")
def ops_500(corpus_1k):
    """Operations learned once on the full fixture corpus; prefixes of this
    list are the K<500 operation lists (learning is iterative)."""
    import time

    _, mols = corpus_1k
    start = time.perf_counter()
    ops = learn_merging_operations(mols, 500)
    elapsed = time.perf_counter() - start
    assert elapsed < 60, f"mining 1k molecules at K=500 took {elapsed:.1f}s"
    return ops
