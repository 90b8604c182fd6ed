"""Checkpoint and GloVe exports against hand-written expected files."""

import hashlib
import json
import struct
import sys

import numpy as np
import pytest
from safetensors.numpy import save_file

from charprobe_extractor import (
    ModelUnavailable,
    VocabMismatch,
    extract_glove,
    extract_plm,
    identity_lemmatizer,
    infer_case,
    infer_marker,
    load_manifest,
)

# the toy checkpoint holds rows of (i*10 + j)/4; header is magic, then
# little-endian uint32 vocab_size and dim, then float32 values row-major
EXPECTED_EMBEDDINGS = struct.pack("<4sII", b"EMB1", 10, 4) + struct.pack(
    "<40f", *[(i * 10 + j) / 4 for i in range(10) for j in range(4)]
)

# id, surface, lemma (identity over the marker-stripped lowercased body),
# frequency; tab, newline, and backslash escaped inside fields
EXPECTED_VOCAB = (
    "0\t<|endoftext|>\t<|endoftext|>\t0\n"
    "1\tthe\tthe\t0\n"
    "2\tĠthe\tthe\t0\n"
    "3\tĠhouse\thouse\t0\n"
    "4\thouses\thouses\t0\n"
    "5\tĠJane\tjane\t0\n"
    "6\tĠ\t\t0\n"
    "7\ta\\tb\ta\\tb\t0\n"
    "8\tc\\\\d\tc\\\\d\t0\n"
    "9\te\\nf\te\\nf\t0\n"
)


def test_toy_checkpoint_matches_handwritten_files(toy_model_dir, tmp_path):
    out = tmp_path / "export"
    manifest = extract_plm(str(toy_model_dir), out, lemmatizer=identity_lemmatizer())

    assert (out / "embeddings.bin").read_bytes() == EXPECTED_EMBEDDINGS
    assert (out / "vocab.tsv").read_text(encoding="utf-8") == EXPECTED_VOCAB

    assert manifest.model == str(toy_model_dir)
    assert manifest.marker == "Ġ"
    assert manifest.case_convention == "cased"
    assert manifest.lemma_source == "identity"
    assert manifest.file_hashes == {
        "embeddings.bin": hashlib.sha256(EXPECTED_EMBEDDINGS).hexdigest(),
        "vocab.tsv": hashlib.sha256(EXPECTED_VOCAB.encode("utf-8")).hexdigest(),
    }
    assert load_manifest(out / "manifest.json") == manifest


def test_marker_follows_model_family():
    assert infer_marker("gpt2") == "Ġ"
    assert infer_marker("EleutherAI/gpt-j-6B") == "Ġ"
    assert infer_marker("roberta-base") == "Ġ"
    assert infer_marker("distilroberta-base") == "Ġ"
    assert infer_marker("bert-base-uncased") == "##"
    assert infer_marker("bert-base-cased") == "##"
    assert infer_marker("distilbert-base-uncased") == "##"
    assert infer_marker("albert-base-v2") == "▁"
    assert infer_marker("xlm-roberta-base") == "▁"
    assert infer_marker("t5-small") == "▁"
    assert infer_marker("glove.6B.100d") == ""


def test_case_convention_from_identifier():
    assert infer_case("bert-base-uncased") == "uncased"
    assert infer_case("bert-base-cased") == "cased"
    assert infer_case("gpt2") == "cased"


def test_row_count_must_equal_vocab_size(toy_model_dir, tmp_path):
    with open(toy_model_dir / "vocab.json", encoding="utf-8") as fh:
        vocab = json.load(fh)
    vocab = {surface: i for surface, i in vocab.items() if i < 9}
    with open(toy_model_dir / "vocab.json", "w", encoding="utf-8") as fh:
        json.dump(vocab, fh, ensure_ascii=False)
    with pytest.raises(VocabMismatch):
        extract_plm(str(toy_model_dir), tmp_path / "out", lemmatizer=identity_lemmatizer())


def test_missing_or_pickle_checkpoints_are_refused(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(ModelUnavailable):
        extract_plm(str(empty), tmp_path / "out1")

    pickled = tmp_path / "pickled"
    pickled.mkdir()
    (pickled / "pytorch_model.bin").write_bytes(b"\x80not a real pickle")
    with open(pickled / "vocab.json", "w", encoding="utf-8") as fh:
        json.dump({"a": 0, "b": 1}, fh)
    with pytest.raises(ModelUnavailable, match="safetensors"):
        extract_plm(str(pickled), tmp_path / "out2")


def test_remote_id_without_hub_client_is_refused(tmp_path, monkeypatch):
    monkeypatch.setitem(sys.modules, "huggingface_hub", None)
    with pytest.raises(ModelUnavailable, match="huggingface_hub"):
        extract_plm("no-such-model-anywhere", tmp_path / "out")


def test_wordpiece_vocab_txt_export(tmp_path):
    model_dir = tmp_path / "toy-bert-uncased"
    model_dir.mkdir()
    matrix = np.arange(15, dtype=np.float32).reshape(5, 3)
    save_file(
        {"bert.embeddings.word_embeddings.weight": matrix,
         "bert.embeddings.position_embeddings.weight": np.zeros((4, 3), dtype=np.float32)},
        str(model_dir / "model.safetensors"),
    )
    (model_dir / "vocab.txt").write_text("[PAD]\n[CLS]\nthe\n##ing\nruns\n", encoding="utf-8")

    out = tmp_path / "export"
    manifest = extract_plm(str(model_dir), out, lemmatizer=identity_lemmatizer())
    assert manifest.marker == "##"
    assert manifest.case_convention == "uncased"
    lines = (out / "vocab.tsv").read_text(encoding="utf-8").splitlines()
    assert lines[3] == "3\t##ing\ting\t0"
    assert lines[4] == "4\truns\truns\t0"


def test_tokenizer_json_vocab_and_shape_fallback(tmp_path):
    model_dir = tmp_path / "mystery-model"
    model_dir.mkdir()
    matrix = np.linspace(0.0, 1.0, 12, dtype=np.float32).reshape(4, 3)
    save_file(
        {"oddly.named": matrix, "square.decoy": np.zeros((3, 3), dtype=np.float32)},
        str(model_dir / "model.safetensors"),
    )
    with open(model_dir / "tokenizer.json", "w", encoding="utf-8") as fh:
        json.dump({"model": {"vocab": {"a": 0, "b": 1, "c": 2, "d": 3}}}, fh)

    out = tmp_path / "export"
    extract_plm(str(model_dir), out, lemmatizer=identity_lemmatizer())
    blob = (out / "embeddings.bin").read_bytes()
    assert blob[:12] == struct.pack("<4sII", b"EMB1", 4, 3)
    assert np.frombuffer(blob[12:], dtype="<f4").reshape(4, 3) == pytest.approx(matrix)


def test_ambiguous_tensors_are_refused(tmp_path):
    model_dir = tmp_path / "ambiguous"
    model_dir.mkdir()
    save_file(
        {"first.decoy": np.zeros((3, 2), dtype=np.float32),
         "second.decoy": np.ones((3, 2), dtype=np.float32)},
        str(model_dir / "model.safetensors"),
    )
    with open(model_dir / "vocab.json", "w", encoding="utf-8") as fh:
        json.dump({"a": 0, "b": 1, "c": 2}, fh)
    with pytest.raises(ModelUnavailable, match="embedding matrix"):
        extract_plm(str(model_dir), tmp_path / "out")


def test_added_tokens_extend_the_vocabulary(tmp_path):
    model_dir = tmp_path / "padded-gpt2"
    model_dir.mkdir()
    save_file(
        {"wte.weight": np.zeros((10, 2), dtype=np.float32)},
        str(model_dir / "model.safetensors"),
    )
    with open(model_dir / "vocab.json", "w", encoding="utf-8") as fh:
        json.dump({f"tok{i}": i for i in range(8)}, fh)
    with open(model_dir / "added_tokens.json", "w", encoding="utf-8") as fh:
        json.dump({"<extra0>": 8, "<extra1>": 9}, fh)

    out = tmp_path / "export"
    extract_plm(str(model_dir), out, lemmatizer=identity_lemmatizer())
    lines = (out / "vocab.tsv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 10
    assert lines[8].startswith("8\t<extra0>\t")


def test_sharded_checkpoints_read_only_the_needed_shard(tmp_path):
    model_dir = tmp_path / "sharded-gpt2"
    model_dir.mkdir()
    matrix = np.full((3, 2), 0.5, dtype=np.float32)
    save_file({"wte.weight": matrix}, str(model_dir / "shard-0.safetensors"))
    save_file(
        {"h.0.mlp.weight": np.zeros((4, 4), dtype=np.float32)},
        str(model_dir / "shard-1.safetensors"),
    )
    with open(model_dir / "model.safetensors.index.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"weight_map": {"wte.weight": "shard-0.safetensors",
                            "h.0.mlp.weight": "shard-1.safetensors"}},
            fh,
        )
    with open(model_dir / "vocab.json", "w", encoding="utf-8") as fh:
        json.dump({"a": 0, "b": 1, "c": 2}, fh)

    out = tmp_path / "export"
    extract_plm(str(model_dir), out, lemmatizer=identity_lemmatizer())
    blob = (out / "embeddings.bin").read_bytes()
    assert np.frombuffer(blob[12:], dtype="<f4").reshape(3, 2) == pytest.approx(matrix)


def test_glove_flat_text_export(tmp_path):
    vectors = tmp_path / "glove.toy.3d.txt"
    vectors.write_text(
        "the 0.25 -1 2\n"
        "house 1 2 3\n"
        ". . . 0.5 0.5 0.5\n"
        "Cats -0.25 0 1\n",
        encoding="utf-8",
    )
    counts = {"the": 120, "Cats": 7}

    out = tmp_path / "export"
    manifest = extract_glove(
        vectors, out, lemmatizer=identity_lemmatizer(), frequencies=counts, name="glove-toy"
    )
    assert manifest.model == "glove-toy"
    assert manifest.marker == ""

    expected = struct.pack("<4sII", b"EMB1", 4, 3) + struct.pack(
        "<12f", 0.25, -1, 2, 1, 2, 3, 0.5, 0.5, 0.5, -0.25, 0, 1
    )
    assert (out / "embeddings.bin").read_bytes() == expected
    assert (out / "vocab.tsv").read_text(encoding="utf-8") == (
        "0\tthe\tthe\t120\n"
        "1\thouse\thouse\t0\n"
        "2\t. . .\t. . .\t0\n"
        "3\tCats\tcats\t7\n"
    )


def test_glove_malformed_lines_are_refused(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("the 0.25 -1 2\nhouse 1 oops 3\n", encoding="utf-8")
    with pytest.raises(ModelUnavailable):
        extract_glove(bad, tmp_path / "out")
    with pytest.raises(ModelUnavailable):
        extract_glove(tmp_path / "missing.txt", tmp_path / "out")
