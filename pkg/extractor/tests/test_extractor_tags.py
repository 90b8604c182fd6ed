"""Tagging vocab entries into one-hot tags.tsv rows with an injected tagger."""

import sys

import pytest

from charprobe_extractor import Tagger, TaggerUnavailable, default_tagger, extract_tags
from charprobe_extractor.formats import write_vocab

POS = ["NN", "NNP", "VBG", "X"]
COARSE = ["NOUN", "PROPN", "VERB", "X"]
NER = ["O", "PERSON"]


def fake_tagger() -> Tagger:
    def tag(word: str) -> dict[str, str]:
        if not word or not word.isalpha():
            return {"pos": "X", "coarse_pos": "X", "ner": "O"}
        if word in {"Jane", "Alice"}:
            return {"pos": "NNP", "coarse_pos": "PROPN", "ner": "PERSON"}
        if word.endswith("ing"):
            return {"pos": "VBG", "coarse_pos": "VERB", "ner": "O"}
        return {"pos": "NN", "coarse_pos": "NOUN", "ner": "O"}

    return Tagger(
        name="fake", labels={"pos": POS, "coarse_pos": COARSE, "ner": NER}, fn=tag
    )


@pytest.fixture()
def vocab_path(tmp_path):
    path = tmp_path / "vocab.tsv"
    write_vocab(
        path,
        [
            (0, " Jane", "jane", 5),
            (1, "ĠJane", "jane", 3),
            (2, "Ġhouse", "house", 9),
            (3, "##ing", "ing", 2),
            (4, "!!", "", 1),
            (5, "▁casa", "casa", 0),
        ],
    )
    return path


def _parse(path):
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        token_id, feature, cell = line.split("\t")
        pairs = [item.rsplit(":", 1) for item in cell.split(",")]
        rows.append((int(token_id), feature, [(lab, float(p)) for lab, p in pairs]))
    return rows


def test_every_token_gets_one_hot_rows_per_feature(vocab_path, tmp_path):
    out = tmp_path / "tags.tsv"
    n_rows = extract_tags(vocab_path, out, tagger=fake_tagger())
    rows = _parse(out)

    assert n_rows == 6 * 3
    assert len(rows) == 6 * 3
    assert [(token_id, feature) for token_id, feature, _ in rows] == [
        (i, f) for i in range(6) for f in ("coarse_pos", "ner", "pos")
    ]
    for _, feature, cells in rows:
        labels = {"pos": POS, "coarse_pos": COARSE, "ner": NER}[feature]
        assert [lab for lab, _ in cells] == labels
        assert sorted(p for _, p in cells) == [0.0] * (len(labels) - 1) + [1.0]


def _hot(rows, token_id, feature):
    for row_id, row_feature, cells in rows:
        if row_id == token_id and row_feature == feature:
            return next(lab for lab, p in cells if p == 1.0)
    raise AssertionError(f"no row for token {token_id} feature {feature}")


def test_whitespace_and_markers_are_stripped_before_tagging(vocab_path, tmp_path):
    out = tmp_path / "tags.tsv"
    extract_tags(vocab_path, out, tagger=fake_tagger())
    rows = _parse(out)

    # " Jane" and "ĠJane" both reach the tagger as "Jane"
    for token_id in (0, 1):
        assert _hot(rows, token_id, "pos") == "NNP"
        assert _hot(rows, token_id, "ner") == "PERSON"
    assert _hot(rows, 2, "pos") == "NN"
    assert _hot(rows, 3, "pos") == "VBG"
    assert _hot(rows, 5, "coarse_pos") == "NOUN"


def test_non_word_tokens_fall_back_but_stay_one_hot(vocab_path, tmp_path):
    out = tmp_path / "tags.tsv"
    extract_tags(vocab_path, out, tagger=fake_tagger())
    rows = _parse(out)
    assert _hot(rows, 4, "pos") == "X"
    assert _hot(rows, 4, "coarse_pos") == "X"
    assert _hot(rows, 4, "ner") == "O"


def test_probabilities_print_as_plain_ones_and_zeros(vocab_path, tmp_path):
    out = tmp_path / "tags.tsv"
    extract_tags(vocab_path, out, tagger=fake_tagger())
    first = out.read_text(encoding="utf-8").splitlines()[0]
    assert first == "0\tcoarse_pos\tNOUN:0,PROPN:1,VERB:0,X:0"


def test_unknown_label_from_tagger_is_a_hard_error(vocab_path, tmp_path):
    broken = Tagger(
        name="broken",
        labels={"pos": POS, "coarse_pos": COARSE, "ner": NER},
        fn=lambda word: {"pos": "ZZZ", "coarse_pos": "X", "ner": "O"},
    )
    with pytest.raises(ValueError, match="ZZZ"):
        extract_tags(vocab_path, tmp_path / "tags.tsv", tagger=broken)


def test_missing_backend_raises_tagger_unavailable(monkeypatch):
    monkeypatch.setitem(sys.modules, "spacy", None)
    with pytest.raises(TaggerUnavailable, match="spacy"):
        default_tagger()
