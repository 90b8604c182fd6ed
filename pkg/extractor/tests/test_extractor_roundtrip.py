"""Every export must load cleanly through the probe toolkit's own readers."""

import numpy as np
import pytest

from charprobe.embeddings import load_embeddings
from charprobe.syntax import load_tags
from charprobe.vocab import english_alphabet, filter_alphabetic, load_vocab

from charprobe_extractor import extract_glove, extract_plm, extract_tags, identity_lemmatizer
from test_extractor_tags import fake_tagger


def test_checkpoint_export_loads_through_probe_readers(toy_model_dir, tmp_path):
    out = tmp_path / "export"
    extract_plm(str(toy_model_dir), out, lemmatizer=identity_lemmatizer())

    table = load_embeddings(out / "embeddings.bin")
    vocab = load_vocab(out / "vocab.tsv")
    assert table.vocab_size == len(list(vocab)) == 10
    assert table.dim == 4
    assert table.row(3) == pytest.approx([30 / 4, 31 / 4, 32 / 4, 33 / 4])

    surfaces = {entry.id: entry.surface for entry in vocab}
    assert surfaces[5] == "ĠJane"
    assert surfaces[7] == "a\tb"
    assert surfaces[9] == "e\nf"
    # "the" and "Ġthe" share a lemma, so split grouping keeps them together
    assert vocab.lemma_key(1) == vocab.lemma_key(2)
    assert vocab.lemma_key(1) != vocab.lemma_key(4)

    kept = filter_alphabetic(vocab, english_alphabet())
    assert {entry.surface for entry in kept} == {"the", "Ġthe", "Ġhouse", "houses", "ĠJane"}


def test_glove_export_loads_through_probe_readers(tmp_path):
    vectors = tmp_path / "glove.toy.txt"
    vectors.write_text("alpha 1 0\nbeta 0 1\ngamma 1 1\n", encoding="utf-8")
    out = tmp_path / "export"
    extract_glove(vectors, out, lemmatizer=identity_lemmatizer())

    table = load_embeddings(out / "embeddings.bin")
    vocab = load_vocab(out / "vocab.tsv")
    assert table.vocab_size == len(list(vocab)) == 3
    assert np.array_equal(table.rows, [[1, 0], [0, 1], [1, 1]])


def test_tag_export_loads_as_a_feature_table(toy_model_dir, tmp_path):
    out = tmp_path / "export"
    extract_plm(str(toy_model_dir), out, lemmatizer=identity_lemmatizer())
    extract_tags(out / "vocab.tsv", out / "tags.tsv", tagger=fake_tagger())

    table = load_tags(out / "tags.tsv")
    assert table.features == ["coarse_pos", "ner", "pos"]
    assert table.covered_ids() == list(range(10))
    for feature in table.features:
        matrix = table.matrix(feature, list(range(10)))
        assert matrix.shape == (10, len(table.labels[feature]))
        assert np.array_equal(matrix.sum(axis=1), np.ones(10))
        assert set(np.unique(matrix)) <= {0.0, 1.0}
    # "ĠJane" reaches the fake tagger as "Jane" and lands on PERSON
    ner = table.matrix("ner", [5])[0]
    assert ner[table.labels["ner"].index("PERSON")] == 1.0
