"""Syntax-baseline tests: tagged-file parsing, taggers, tag probes."""

import numpy as np
import pytest

from charprobe.datasets import build_char_dataset, split_grouped
from charprobe.errors import (
    EmptyCoNLL,
    FeatureCoverageGap,
    MalformedRow,
    UnknownLabel,
)
from charprobe.nn import TrainConfig
from charprobe.nn.train import _bce_loss
from charprobe.syntax import (
    FeatureTable,
    Sentence,
    SyntaxProbe,
    _subword_examples,
    build_feature_table,
    collapse_ner,
    infer_tag_distribution,
    load_tags,
    read_conll,
    run_syntax_experiment,
    save_tags,
    tagger_config,
    train_syntax_probe,
    train_tagger,
)
from charprobe.vocab import Alphabet, VocabEntry, Vocabulary

CONLL_SAMPLE = """\
-DOCSTART- -X- -X- O

EU NNP B-NP B-ORG
rejects VBZ B-VP O
German JJ B-NP B-MISC
calls NNS I-NP O

Peter NNP B-NP B-PER
visited VBD B-VP O
Berlin NNP B-NP B-LOC
"""


# ---- tagged-file parsing ----

def test_read_conll_frozen(tmp_path):
    path = tmp_path / "sample.conll"
    path.write_text(CONLL_SAMPLE)
    sentences = read_conll(path)
    assert len(sentences) == 2
    assert sentences[0].words == ["EU", "rejects", "German", "calls"]
    assert sentences[0].pos == ["NNP", "VBZ", "JJ", "NNS"]
    assert sentences[0].ner == ["ORG", "O", "MISC", "O"]
    assert sentences[1].ner == ["PER", "O", "LOC"]


def test_read_conll_column_count_error(tmp_path):
    path = tmp_path / "bad.conll"
    path.write_text("ok NNP B-NP O\nbad NNP O\n")
    with pytest.raises(MalformedRow, match=":2"):
        read_conll(path)


def test_read_conll_empty(tmp_path):
    path = tmp_path / "empty.conll"
    path.write_text("\n\n")
    with pytest.raises(EmptyCoNLL):
        read_conll(path)


@pytest.mark.parametrize(
    "tag,expected",
    [("O", "O"), ("B-PER", "PER"), ("I-LOC", "LOC"), ("B-MISC", "MISC"), ("I-ORG", "ORG")],
)
def test_collapse_ner(tag, expected):
    assert collapse_ner(tag) == expected


def test_collapse_ner_rejects_unprefixed():
    with pytest.raises(UnknownLabel):
        collapse_ner("PERSON")


# ---- tagger ----

def _tagger_world(seed=0, noise=0.3, dim=12):
    """20 word types, tag decodable from the embedding's first two dims."""
    rng = np.random.default_rng(seed)
    words = [f"noun{i}" for i in range(10)] + [f"verb{i}" for i in range(10)]
    ids = {w: i for i, w in enumerate(words)}
    rows = rng.normal(0.0, noise, size=(len(words), dim)).astype(np.float32)
    for w, i in ids.items():
        rows[i, 0] += 2.0 if w.startswith("noun") else 0.0
        rows[i, 1] += 2.0 if w.startswith("verb") else 0.0

    def tokenize(text):
        return [ids[text.strip()]]

    def make_sentences(n, rng):
        out = []
        for _ in range(n):
            picks = rng.choice(words, size=6)
            tags = ["N" if w.startswith("noun") else "V" for w in picks]
            out.append(Sentence(list(picks), tags, ["O"] * len(picks)))
        return out

    return rows, tokenize, make_sentences, rng


def test_tagger_learns_and_reports():
    rows, tokenize, make_sentences, rng = _tagger_world()
    train = make_sentences(60, rng)
    dev = make_sentences(10, rng)
    test = make_sentences(10, rng)
    config = TrainConfig(epochs=20, batch_size=64, learning_rate=3e-3, lr_grid=())
    tagger, report = train_tagger(
        rows, tokenize, train, "pos", config, dev_sentences=dev, test_sentences=test
    )
    assert tagger.labels == ["N", "V"]
    assert report["test"]["accuracy"] > 90.0
    assert report["test"]["weighted_f1"] > 90.0
    assert report["dev"]["macro_f1"] > 90.0
    assert len(report["train_loss"]) == 20


def test_subwords_inherit_word_label():
    rows = np.eye(4, dtype=np.float32)
    sentences = [Sentence(["splitme", "solo"], ["A", "B"], ["O", "O"])]

    def tokenize(text):
        return [0, 1] if text.strip() == "splitme" else [2]

    X, y = _subword_examples(rows, tokenize, sentences, "pos", {"A": 0, "B": 1}, strict=True)
    assert X.shape == (3, 4)
    assert y.tolist() == [0, 0, 1]


def test_unseen_tag_raises_when_strict():
    rows = np.eye(2, dtype=np.float32)
    sentences = [Sentence(["w"], ["Z"], ["O"])]
    with pytest.raises(UnknownLabel, match="'Z'"):
        _subword_examples(rows, lambda t: [0], sentences, "pos", {"A": 0}, strict=True)


def test_tagger_config_defaults():
    pos = tagger_config("pos")
    ner = tagger_config("ner")
    assert (pos.epochs, pos.batch_size, pos.learning_rate) == (20, 64, 1e-4)
    assert (ner.epochs, ner.batch_size, ner.learning_rate) == (20, 64, 5e-5)


def test_tag_distribution_rows_sum_to_one():
    rows, tokenize, make_sentences, rng = _tagger_world()
    train = make_sentences(40, rng)
    config = TrainConfig(epochs=10, batch_size=64, learning_rate=3e-3, lr_grid=())
    tagger, _ = train_tagger(rows, tokenize, train, "pos", config)
    dists = infer_tag_distribution(tagger, rows, list(range(20)))
    assert dists.shape == (20, 2)
    np.testing.assert_allclose(dists.sum(axis=1), 1.0, atol=1e-6)
    # noun embeddings should put their mass on the N label
    assert dists[0, 0] > 0.8
    assert dists[15, 1] > 0.8


# ---- feature table files ----

def _tiny_table():
    table = FeatureTable()
    table.add(3, "pos", ["N", "V"], np.array([0.75, 0.25]))
    table.add(3, "ner", ["LOC", "O", "PER"], np.array([0.1, 0.6, 0.3]))
    table.add(7, "pos", ["N", "V"], np.array([1.0 / 3.0, 2.0 / 3.0]))
    return table


def test_tags_file_roundtrip(tmp_path):
    table = _tiny_table()
    path = tmp_path / "tags.tsv"
    save_tags(table, path)
    back = load_tags(path)
    assert back.labels == table.labels
    assert sorted(back.rows) == [3, 7]
    for tid in back.rows:
        for feature in back.rows[tid]:
            np.testing.assert_array_equal(back.rows[tid][feature], table.rows[tid][feature])


def test_tags_file_line_errors(tmp_path):
    path = tmp_path / "tags.tsv"
    path.write_text("3\tpos\tN:0.5,V:0.5\nnot-an-id\tpos\tN:1.0\n")
    with pytest.raises(MalformedRow, match=":2"):
        load_tags(path)
    path.write_text("3\tpos\n")
    with pytest.raises(MalformedRow, match="expected 3 columns"):
        load_tags(path)


def test_feature_table_consistency_checks():
    table = _tiny_table()
    with pytest.raises(MalformedRow, match="inconsistent label set"):
        table.add(9, "pos", ["N", "X"], np.array([0.5, 0.5]))
    with pytest.raises(MalformedRow, match="probs"):
        table.add(9, "ner", ["LOC", "O", "PER"], np.array([1.0]))


def test_feature_table_coverage():
    table = _tiny_table()
    assert table.covered_ids() == [3]
    with pytest.raises(FeatureCoverageGap, match="token 7"):
        table.matrix("ner", [3, 7])
    with pytest.raises(FeatureCoverageGap, match="'chunk'"):
        table.matrix("chunk", [3])
    got = table.matrix("pos", [7, 3])
    np.testing.assert_allclose(got[0], [1.0 / 3.0, 2.0 / 3.0])


def test_build_feature_table_from_taggers():
    rows, tokenize, make_sentences, rng = _tagger_world()
    train = make_sentences(30, rng)
    config = TrainConfig(epochs=5, batch_size=64, learning_rate=3e-3, lr_grid=())
    tagger, _ = train_tagger(rows, tokenize, train, "pos", config)
    table = build_feature_table({"pos": tagger}, rows, [0, 5, 12])
    assert table.features == ["pos"]
    assert table.covered_ids() == [0, 5, 12]
    np.testing.assert_allclose(table.matrix("pos", [0]).sum(), 1.0, atol=1e-6)


# ---- syntax probe gradients (central finite differences) ----

def test_syntax_probe_joint_gradients():
    rng = np.random.default_rng(5)
    feature_labels = {"pos": ["A", "B", "C"], "ner": ["P", "Q", "R", "S"]}
    probe = SyntaxProbe(feature_labels, embed_dim=5, hidden=6, dropout=0.0, seed=2, dtype=np.float64)
    n = 7
    dists = {
        f: rng.dirichlet(np.ones(len(labels)), size=n)
        for f, labels in feature_labels.items()
    }
    y = rng.integers(0, 2, size=n).astype(np.float64)

    def loss_now():
        logits, _ = probe.forward(dists)
        return _bce_loss(logits, y)

    logits, cache = probe.forward(dists)
    sig = 1.0 / (1.0 + np.exp(-logits))
    dz3 = (sig - y[:, None]) / n
    grads = probe.backward(cache, dz3)

    params = probe.trainable_params()
    h = 1e-6
    for name, tensor in params.items():
        flat = tensor.reshape(-1)
        idxs = range(flat.size) if flat.size <= 40 else rng.choice(flat.size, 40, replace=False)
        for i in idxs:
            keep = flat[i]
            flat[i] = keep + h
            up = loss_now()
            flat[i] = keep - h
            down = loss_now()
            flat[i] = keep
            numeric = (up - down) / (2 * h)
            analytic = grads[name].reshape(-1)[i]
            assert abs(numeric - analytic) < 1e-4 * max(1.0, abs(numeric)), (name, i)


# ---- probe training on decodable tag distributions ----

def _syntax_world(n_tokens=120, seed=0):
    """Tokens over {a,b}; the pos distribution leaks whether 'a' occurs."""
    rng = np.random.default_rng(seed)
    entries = []
    table = FeatureTable()
    for i in range(n_tokens):
        length = int(rng.integers(2, 6))
        surface = "".join(rng.choice(["a", "b"], size=length))
        entries.append(VocabEntry(i, surface, "", int(rng.integers(1, 50))))
        lean = 0.85 if "a" in surface else 0.15
        jitter = rng.uniform(-0.05, 0.05)
        p = np.clip(lean + jitter, 0.05, 0.95)
        table.add(i, "pos", ["HASA", "NOA"], np.array([p, 1.0 - p]))
    vocab = Vocabulary(entries)
    alphabet = Alphabet(("a", "b"), script_name="toy", case_sensitive=False)
    return table, vocab, alphabet


def test_syntax_probe_learns_planted_signal():
    table, vocab, alphabet = _syntax_world()
    ds = build_char_dataset(vocab, "a", case_sensitive=False, seed=0)
    plan = split_grouped(ds, vocab, seed=0)
    config = TrainConfig(epochs=30, batch_size=32, learning_rate=3e-3, lr_grid=(), seed=1)
    _, metrics = train_syntax_probe(table, ds, plan, config)
    _, control = train_syntax_probe(table, ds, plan, config, permute_seed=9)
    assert metrics.macro_f1 > 90.0
    assert control.macro_f1 < metrics.macro_f1 - 15.0


def test_syntax_probe_deterministic():
    table, vocab, alphabet = _syntax_world()
    ds = build_char_dataset(vocab, "a", case_sensitive=False, seed=0)
    plan = split_grouped(ds, vocab, seed=0)
    config = TrainConfig(epochs=10, batch_size=32, learning_rate=3e-3, lr_grid=(), seed=1)
    a = train_syntax_probe(table, ds, plan, config, permute_seed=4)[1]
    b = train_syntax_probe(table, ds, plan, config, permute_seed=4)[1]
    assert a == b


def test_run_syntax_experiment_report():
    table, vocab, alphabet = _syntax_world()
    config = TrainConfig(epochs=30, batch_size=32, learning_rate=3e-3, lr_grid=())
    report = run_syntax_experiment(
        table, vocab, alphabet, seeds=(0, 1), config=config, chars=["a"]
    )
    assert report["task"] == "syntax"
    assert report["features"] == ["pos"]
    row = report["per_char"][0]
    assert row["error"] is None
    assert len(row["f1_per_seed"]) == 2
    assert row["f1_mean"] > 85.0
    assert row["f1_mean"] - row["control_f1_mean"] > 10.0


def test_run_syntax_experiment_one_hot_mode():
    table, vocab, alphabet = _syntax_world()
    config = TrainConfig(epochs=30, batch_size=32, learning_rate=3e-3, lr_grid=())
    report = run_syntax_experiment(
        table, vocab, alphabet, seeds=(0,), config=config, chars=["a"], one_hot=True
    )
    assert report["one_hot"] is True
    # argmax of the leaky distribution is the label itself here
    assert report["per_char"][0]["f1_mean"] > 90.0


def test_run_syntax_experiment_requires_coverage():
    table, vocab, alphabet = _syntax_world()
    empty = FeatureTable()
    empty.labels["pos"] = ["HASA", "NOA"]
    with pytest.raises(FeatureCoverageGap):
        run_syntax_experiment(empty, vocab, alphabet, seeds=(0,))
