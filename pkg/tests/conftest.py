from pathlib import Path

import pytest

from charprobe.bpe import load_scheme

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def gpt2ish_paths():
    root = FIXTURES / "gpt2ish"
    return root / "merges.txt", root / "vocab.json"


@pytest.fixture()
def gpt2ish(gpt2ish_paths):
    merges, vocab = gpt2ish_paths
    return load_scheme(merges, vocab)
