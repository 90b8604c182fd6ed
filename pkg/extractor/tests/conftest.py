import json

import numpy as np
import pytest
from safetensors.numpy import save_file

# ten surfaces covering the marker, empty-body, and escaping corners
TOY_SURFACES = [
    "<|endoftext|>",
    "the",
    "Ġthe",
    "Ġhouse",
    "houses",
    "ĠJane",
    "Ġ",
    "a\tb",
    "c\\d",
    "e\nf",
]


def toy_matrix() -> np.ndarray:
    # (i*10 + j)/4 is exact in float32, so expected bytes are hand-computable
    values = [(i * 10 + j) / 4 for i in range(10) for j in range(4)]
    return np.array(values, dtype=np.float32).reshape(10, 4)


@pytest.fixture()
def toy_model_dir(tmp_path):
    """A 10-token GPT-style checkpoint with a decoy position-embedding tensor."""
    model_dir = tmp_path / "toy-gpt2"
    model_dir.mkdir()
    save_file(
        {"wte.weight": toy_matrix(), "wpe.weight": np.zeros((6, 4), dtype=np.float32)},
        str(model_dir / "model.safetensors"),
    )
    with open(model_dir / "vocab.json", "w", encoding="utf-8") as fh:
        json.dump({surface: i for i, surface in enumerate(TOY_SURFACES)}, fh, ensure_ascii=False)
    return model_dir
