"""Experiment-runner tests on synthetic embeddings.

The embedding rows literally contain character-count features plus
noise, so a working probe pipeline must separate real embeddings from
the random control by a wide margin.
"""

import itertools
import json

import numpy as np
import pytest

from charprobe.embeddings import EmbeddingTable
from charprobe.experiment import (
    _Accumulator,
    load_report,
    run_char_experiment,
    run_substring_experiment,
    save_report,
)
from charprobe.nn import TrainConfig
from charprobe.vocab import Alphabet, VocabEntry, Vocabulary


def _toy_world(dim=16, seed=0):
    """Tokens are all strings of length 1..4 over {a, b, c}; embedding
    row = char counts in the first 3 dims plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    surfaces = []
    for length in (1, 2, 3, 4):
        for tup in itertools.product("abc", repeat=length):
            surfaces.append("".join(tup))
    entries = [
        VocabEntry(id=i, surface=s, lemma="", frequency=int(rng.integers(1, 400)))
        for i, s in enumerate(surfaces)
    ]
    vocab = Vocabulary(entries)
    rows = rng.normal(0.0, 0.3, size=(len(surfaces), dim)).astype(np.float32)
    for i, s in enumerate(surfaces):
        rows[i, 0] = s.count("a")
        rows[i, 1] = s.count("b")
        rows[i, 2] = s.count("c")
    table = EmbeddingTable(rows, source_name="toy")
    alphabet = Alphabet(("a", "b", "c"), script_name="toy", case_sensitive=False)
    return table, vocab, alphabet


CONFIG = TrainConfig(epochs=30, batch_size=16, learning_rate=3e-3, lr_grid=())


def test_char_report_shape_and_quality():
    table, vocab, alphabet = _toy_world()
    report = run_char_experiment(
        table, vocab, alphabet, seeds=(0, 1), config=CONFIG
    )
    assert report["task"] == "char"
    assert report["model"] == "toy"
    assert report["alphabet"] == ["a", "b", "c"]
    assert report["seeds"] == [0, 1]
    assert len(report["per_char"]) == 3
    for row in report["per_char"]:
        assert row["error"] is None
        assert len(row["f1_per_seed"]) == 2
        assert len(row["control_f1_per_seed"]) == 2
        assert row["f1_mean"] > 90.0
        assert row["control_f1_mean"] < 80.0
        assert row["f1_mean"] - row["control_f1_mean"] > 15.0
        assert row["n_examples"] > 0
    assert set(report["top_tokens"]) == {"a", "b", "c"}
    for entries in report["top_tokens"].values():
        probs = [e["probability"] for e in entries]
        assert probs == sorted(probs, reverse=True)
        assert len(entries) <= 10


def test_char_experiment_deterministic_and_parallel_identical():
    table, vocab, alphabet = _toy_world()
    a = run_char_experiment(table, vocab, alphabet, seeds=(0,), config=CONFIG)
    b = run_char_experiment(table, vocab, alphabet, seeds=(0,), config=CONFIG)
    c = run_char_experiment(table, vocab, alphabet, seeds=(0,), config=CONFIG, jobs=3)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert json.dumps(a, sort_keys=True) == json.dumps(c, sort_keys=True)


def test_missing_char_recorded_as_failure():
    table, vocab, alphabet = _toy_world()
    wide = Alphabet(("a", "b", "c", "z"), script_name="toy", case_sensitive=False)
    report = run_char_experiment(table, vocab, wide, seeds=(0,), config=CONFIG)
    by_char = {row["char"]: row for row in report["per_char"]}
    assert by_char["z"]["error"].startswith("NoPositives")
    assert by_char["z"]["f1_per_seed"] == []
    assert by_char["a"]["error"] is None
    assert "z" not in report["top_tokens"]


def test_char_filter_must_be_subset_of_alphabet():
    table, vocab, alphabet = _toy_world()
    with pytest.raises(ValueError, match="not in alphabet"):
        run_char_experiment(table, vocab, alphabet, seeds=(0,), chars=["q"], config=CONFIG)


def test_char_subset_runs_only_requested():
    table, vocab, alphabet = _toy_world()
    report = run_char_experiment(
        table, vocab, alphabet, seeds=(0,), chars=["b"], config=CONFIG
    )
    assert [row["char"] for row in report["per_char"]] == ["b"]


def test_lr_grid_is_used_and_recorded():
    table, vocab, alphabet = _toy_world()
    config = TrainConfig(epochs=30, batch_size=16, lr_grid=(1e-5, 3e-3))
    report = run_char_experiment(
        table, vocab, alphabet, seeds=(0,), chars=["a"], config=config
    )
    assert report["per_char"][0]["learning_rate"] in (1e-5, 3e-3)
    assert report["per_char"][0]["f1_mean"] > 85.0


def test_report_file_roundtrip(tmp_path):
    table, vocab, alphabet = _toy_world()
    report = run_char_experiment(table, vocab, alphabet, seeds=(0,), config=CONFIG)
    path = tmp_path / "report.json"
    save_report(report, path)
    assert load_report(path) == json.loads(json.dumps(report))


# ---- breakdown accounting, checked against hand-computed values ----

def _mini_vocab():
    entries = [
        VocabEntry(0, "abc", "", 2),      # ln 2 -> bin 0
        VocabEntry(1, "ba", "", 8),       # ln 8 -> bin 2
        VocabEntry(2, "a", "", 8),        # bin 2
        VocabEntry(3, "xya", "", 54),     # ln 54 -> bin 3
        VocabEntry(4, "nope", "", 54),    # bin 3
    ]
    return Vocabulary(entries)


def test_accumulator_matches_hand_counts():
    vocab = _mini_vocab()
    acc = _Accumulator()
    # (token, label, predicted)
    acc.add(vocab, "a", False, 0, 1, 1)   # "abc": a at position 1
    acc.add(vocab, "a", False, 1, 1, 0)   # "ba": position 2, missed
    acc.add(vocab, "a", False, 2, 1, 1)   # "a": position 1
    acc.add(vocab, "a", False, 3, 1, 1)   # "xya": position 3
    acc.add(vocab, "a", False, 4, 0, 0)   # negative, correct
    b = acc.breakdowns()
    pos = b["position_recall"]
    assert pos["1"] == {"recall": 1.0, "n": 2}          # abc, a
    assert pos["2"] == {"recall": 0.0, "n": 1}          # ba
    assert pos["3"] == {"recall": 1.0, "n": 1}          # xya
    # one-sided bins score the absent class 0 by convention, capping at 50
    freq = b["f1_by_log_frequency"]
    assert freq["0"] == {"macro_f1": 50.0, "n": 1}           # abc: tp only
    assert freq["2"]["n"] == 2                               # ba (fn), a (tp)
    assert freq["2"]["macro_f1"] == pytest.approx((200 / 3) / 2)
    assert freq["3"] == {"macro_f1": 100.0, "n": 2}          # xya (tp), nope (tn)
    length = b["f1_by_length"]
    assert length["1"] == {"macro_f1": 50.0, "n": 1}         # a: tp only
    assert length["2"]["macro_f1"] == 0.0                    # ba missed
    assert length["3"] == {"macro_f1": 50.0, "n": 2}         # abc, xya: tp only
    assert length["4"] == {"macro_f1": 50.0, "n": 1}         # nope: tn only


def test_bin_macro_f1_single_true_negative():
    # one correct negative: positive-class F1 is 0/undefined -> 0 by the
    # shared convention, negative-class F1 is 100, macro is 50
    from charprobe.experiment import _bin_macro_f1

    assert _bin_macro_f1([0, 0, 0, 1]) == 50.0
    assert _bin_macro_f1([1, 0, 0, 1]) == 100.0


def test_regressions_skip_underfilled_bins():
    vocab = _mini_vocab()
    acc = _Accumulator()
    acc.add(vocab, "a", False, 0, 1, 1)
    out = acc.regressions()
    assert "skipped" in out["log_frequency"]
    assert "skipped" in out["position"]


def test_frequency_zero_tokens_stay_out_of_frequency_table():
    vocab = Vocabulary([VocabEntry(0, "abc", "", 0), VocabEntry(1, "cab", "", 3)])
    acc = _Accumulator()
    acc.add(vocab, "a", False, 0, 1, 1)
    acc.add(vocab, "a", False, 1, 1, 1)
    b = acc.breakdowns()
    assert list(b["f1_by_log_frequency"]) == ["1"]      # ln 3 -> bin 1, id 0 excluded
    assert b["f1_by_length"]["3"]["n"] == 2             # both still length-binned
    assert b["position_recall"]["1"]["n"] == 1
    assert b["position_recall"]["2"]["n"] == 1


def test_regression_finds_planted_trend():
    # Recall falls linearly with first-occurrence position: 1.0, .8, .6, .4.
    surfaces = ["qxxx", "xqxx", "xxqx", "xxxq"]
    vocab = Vocabulary([VocabEntry(i, s, "", 3) for i, s in enumerate(surfaces)])
    acc = _Accumulator()
    per_bin = 20
    rates = {1: 1.0, 2: 0.8, 3: 0.6, 4: 0.4}
    for tid in range(4):
        hits = int(round(rates[tid + 1] * per_bin))
        for k in range(per_bin):
            acc.add(vocab, "q", False, tid, 1, 1 if k < hits else 0)
    fit = acc.regressions()["position"]
    assert fit["slope"] == pytest.approx(-0.2, abs=1e-9)
    assert fit["p_value"] < 0.01


# ---- substring runner ----

def _substring_world(dim=24, seed=3):
    stems = ["walk", "talk", "read", "jump", "rest", "form"]
    suffixes = ["", "s", "ed", "ing", "er", "ers"]
    surfaces = sorted({s + suf for s in stems for suf in suffixes} | set(stems))
    rng = np.random.default_rng(seed)
    entries = [
        VocabEntry(i, s, "", int(rng.integers(1, 100))) for i, s in enumerate(surfaces)
    ]
    vocab = Vocabulary(entries)
    rows = rng.normal(0.0, 0.3, size=(len(surfaces), dim)).astype(np.float32)
    table = EmbeddingTable(rows, source_name="toy-sub")
    alphabet = Alphabet(tuple(sorted(set("".join(surfaces)))), "toy", False)
    return table, vocab, alphabet


def test_substring_experiment_shape_and_determinism():
    table, vocab, alphabet = _substring_world()
    config = TrainConfig(epochs=10, batch_size=16, learning_rate=1e-3, lr_grid=())
    a = run_substring_experiment(table, vocab, alphabet, seeds=(0, 1), config=config)
    b = run_substring_experiment(table, vocab, alphabet, seeds=(0, 1), config=config)
    assert a == b
    assert a["task"] == "substring"
    assert len(a["f1_per_seed"]) == 2
    assert a["n_examples"] > 0
    assert 0.0 <= a["f1_mean"] <= 100.0
    assert 0.0 <= a["control_f1_mean"] <= 100.0


# ---- position regression is flat when embeddings cannot encode position ----

@pytest.mark.slow
def test_position_slope_flat_for_uniform_embeddings():
    """Uniform random rows carry no information at all, so recall cannot
    depend on where the character sits; pooled over 20 seeds the
    position-vs-recall trend must be statistically indistinguishable
    from zero (|t| < 2).  Note that even bag-of-letters features would
    not do here: a late first occurrence implies many non-target letters,
    which correlates with the negative class."""
    from scipy import stats as sps

    rng = np.random.default_rng(42)
    letters = "abcdef"
    surfaces = sorted(
        {
            "".join(letters[j] for j in rng.integers(0, len(letters), size=k))
            for k in rng.integers(2, 9, size=1200)
        }
    )
    entries = [
        VocabEntry(i, s, "", int(rng.integers(1, 300))) for i, s in enumerate(surfaces)
    ]
    vocab = Vocabulary(entries)
    rows = rng.uniform(-0.5, 0.5, size=(len(surfaces), 12)).astype(np.float32)
    table = EmbeddingTable(rows, source_name="uniform")
    alphabet = Alphabet(tuple(letters), "toy", False)

    report = run_char_experiment(
        table,
        vocab,
        alphabet,
        seeds=tuple(range(20)),
        config=TrainConfig(epochs=8, batch_size=64, learning_rate=3e-3, lr_grid=()),
    )
    reg = report["regressions"]["position"]
    assert "slope" in reg, f"position regression skipped: {reg}"
    bins = [
        v for v in report["breakdowns"]["position_recall"].values() if v["n"] >= 10
    ]
    dof = len(bins) - 2
    # |t| < 2 expressed through the two-sided p-value at t = 2
    assert reg["p_value"] > 2.0 * float(sps.t.sf(2.0, dof)), reg
