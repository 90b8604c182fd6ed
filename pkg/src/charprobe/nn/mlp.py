"""Three-layer MLP with hand-derived gradients.

Architecture, fixed across the package:

    z1 = X W1 + b1        a1 = selu(z1)
    z2 = a1 W2 + b2       a2 = tanh(z2)
    d  = dropout(a2)      (training only, inverted scaling)
    z3 = d W3 + b3        logits

No autodiff anywhere: backward() implements the chain rule explicitly and
is verified against central finite differences in the test suite.
Checkpoints use the ``MLP1`` binary format (little-endian header of five
uint32 dims, then float32 parameters in a fixed order).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagic, TruncatedFile

# scaled-ELU constants (Klambauer et al. values, truncated to float64)
SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

MAGIC = b"MLP1"
_HEADER = struct.Struct("<4sIIIII")  # magic, d_in, h1, h2, d_out, dtype code
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.float32, 1: np.float64}

PARAM_ORDER = ("W1", "b1", "W2", "b2", "W3", "b3")


def _selu(z: np.ndarray) -> np.ndarray:
    # expm1 sees only the clamped negative part, so huge inputs cannot
    # overflow through the unused branch
    neg = np.minimum(z, 0.0)
    pos = np.maximum(z, 0.0)
    return SELU_LAMBDA * (pos + SELU_ALPHA * np.expm1(neg))


def _selu_grad(z: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(z > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(z, 0.0)))


class MlpModel:
    """linear-SELU, linear-Tanh, dropout, linear head."""

    def __init__(
        self,
        d_in: int,
        hidden1: int | None = None,
        hidden2: int | None = None,
        d_out: int = 1,
        dropout: float = 0.1,
        seed: int = 0,
        dtype=np.float32,
    ):
        # hidden widths default to the input width
        h1 = d_in if hidden1 is None else hidden1
        h2 = h1 if hidden2 is None else hidden2
        self.d_in, self.h1, self.h2, self.d_out = d_in, h1, h2, d_out
        self.dropout = float(dropout)
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        for name, fan_in, shape in (
            ("W1", d_in, (d_in, h1)),
            ("b1", d_in, (h1,)),
            ("W2", h1, (h1, h2)),
            ("b2", h1, (h2,)),
            ("W3", h2, (h2, d_out)),
            ("b3", h2, (d_out,)),
        ):
            bound = 1.0 / np.sqrt(fan_in)
            self.params[name] = rng.uniform(-bound, bound, size=shape).astype(self.dtype)

    # ---- forward / backward ----

    def forward(self, X: np.ndarray, dropout_rng: np.random.Generator | None = None):
        """Return (logits, cache).  Pass a generator to enable dropout."""
        p = self.params
        X = np.asarray(X, dtype=self.dtype)
        z1 = X @ p["W1"] + p["b1"]
        a1 = _selu(z1)
        z2 = a1 @ p["W2"] + p["b2"]
        a2 = np.tanh(z2)
        if dropout_rng is not None and self.dropout > 0.0:
            keep = 1.0 - self.dropout
            mask = (dropout_rng.random(a2.shape) < keep).astype(self.dtype) / self.dtype.type(keep)
            d = a2 * mask
        else:
            mask = None
            d = a2
        z3 = d @ p["W3"] + p["b3"]
        cache = (X, z1, a1, a2, mask, d)
        return z3, cache

    def predict_logits(self, X: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(X)
        return logits

    def backward(self, cache, dz3: np.ndarray, return_dx: bool = False):
        """Gradients of the loss given d(loss)/d(logits), chain rule by hand.

        With return_dx the gradient w.r.t. the input batch is returned as
        well, for callers that train parameters feeding into this model.
        """
        X, z1, a1, a2, mask, d = cache
        p = self.params
        grads: dict[str, np.ndarray] = {}
        grads["W3"] = d.T @ dz3
        grads["b3"] = dz3.sum(axis=0)
        dd = dz3 @ p["W3"].T
        da2 = dd if mask is None else dd * mask
        dz2 = da2 * (1.0 - a2 * a2)  # tanh'
        grads["W2"] = a1.T @ dz2
        grads["b2"] = dz2.sum(axis=0)
        da1 = dz2 @ p["W2"].T
        dz1 = da1 * _selu_grad(z1)
        grads["W1"] = X.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        if return_dx:
            return grads, dz1 @ p["W1"].T
        return grads


def save_model(model: MlpModel, path: str | Path) -> None:
    with open(Path(path), "wb") as fh:
        code = _DTYPE_CODES[model.dtype]
        fh.write(_HEADER.pack(MAGIC, model.d_in, model.h1, model.h2, model.d_out, code))
        for name in PARAM_ORDER:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes())


def load_model(path: str | Path) -> MlpModel:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r} at offset 0, got {blob[:4]!r}")
    if len(blob) < _HEADER.size:
        raise TruncatedFile(f"{path}: header needs {_HEADER.size} bytes, file has {len(blob)}")
    _, d_in, h1, h2, d_out, code = _HEADER.unpack_from(blob, 0)
    model = MlpModel(d_in, h1, h2, d_out, dtype=_CODE_DTYPES[code])
    offset = _HEADER.size
    for name in PARAM_ORDER:
        shape = model.params[name].shape
        count = int(np.prod(shape))
        end = offset + 4 * count
        if len(blob) < end:
            raise TruncatedFile(
                f"{path}: parameter {name} needs bytes up to {end}, file has {len(blob)}"
            )
        vals = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        model.params[name] = vals.reshape(shape).astype(model.dtype)
        offset = end
    return model
