"""Word-list dumps: lowercase, alphabetic, deduplicated, deterministic."""

import sys

import pytest

from charprobe_extractor import ResourceUnavailable, default_word_source, extract_dictionary


def test_word_list_is_sorted_unique_lowercase_alphabetic(tmp_path):
    out = tmp_path / "wordlist.txt"
    source = (
        "toy-lexicon",
        ["Protection", "projection", "projection", "hot_dog", "x1", "sweet", "PROJECTION"],
    )
    n_words = extract_dictionary(out, source=source)
    words = out.read_text(encoding="utf-8").splitlines()

    assert n_words == 3
    assert words == ["projection", "protection", "sweet"]
    assert "protection" in words and "projection" in words
    assert len(words) == len(set(words))
    assert all(word.isalpha() and word == word.lower() for word in words)


def test_word_list_is_deterministic(tmp_path):
    source = ("toy-lexicon", ["b", "a", "c"])
    first = tmp_path / "one.txt"
    second = tmp_path / "two.txt"
    extract_dictionary(first, source=source)
    extract_dictionary(second, source=("toy-lexicon", ["c", "a", "b", "a"]))
    assert first.read_bytes() == second.read_bytes()


def test_missing_lexical_database_raises(monkeypatch):
    monkeypatch.setitem(sys.modules, "nltk", None)
    with pytest.raises(ResourceUnavailable, match="nltk"):
        default_word_source()
