"""Exception types shared across the package.

Every error raised on a contract violation derives from CharprobeError so
callers (and the CLI) can distinguish experiment failures from plain bugs.
"""

from __future__ import annotations


class CharprobeError(Exception):
    """Base class for all contract violations raised by this package."""


# ---- binary file formats ----

class BadMagic(CharprobeError):
    """File does not start with the expected magic bytes."""


class TruncatedFile(CharprobeError):
    """File ends before the declared payload does."""


class NonFiniteValue(CharprobeError):
    """A NaN or infinity where a finite float is required."""


class ZeroSize(CharprobeError):
    """A vocab size or dimension of zero (or less) was requested."""


# ---- vocabulary files ----

class DuplicateId(CharprobeError):
    """Two vocabulary rows share one token id."""


class MalformedRow(CharprobeError):
    """A vocabulary row does not have the four expected columns."""


class EmptyAlphabet(CharprobeError):
    """No character cleared the document-frequency threshold."""


# ---- dataset construction ----

class NoPositives(CharprobeError):
    """No token in the vocabulary contains the target character."""


class NoNegatives(CharprobeError):
    """Every token in the vocabulary contains the target character."""


class UnsatisfiableRatio(CharprobeError):
    """Grouped split cannot land within tolerance of the requested ratio."""


# ---- training ----

class NonFiniteLoss(CharprobeError):
    """Training loss became NaN or infinite; aborted with diagnostics."""


class EmptySplit(CharprobeError):
    """A split side holds no examples."""


class LengthMismatch(CharprobeError):
    """Prediction and label vectors differ in length."""


class DegenerateX(CharprobeError):
    """Regression inputs carry no variance (or too few points)."""


# ---- tagging ----

class UnknownLabel(CharprobeError):
    """Evaluation split contains a label never seen during training."""


class EmptyCoNLL(CharprobeError):
    """No sentences could be parsed from the file."""


class FeatureCoverageGap(CharprobeError):
    """A probed token has no distribution for one of the feature streams."""


# ---- tokenizer ----

class UnencodableByte(CharprobeError):
    """Input contains a character the scheme cannot represent."""


class UnknownId(CharprobeError):
    """An id outside the scheme's token map."""


# ---- cbow ----

class EmptyCorpusAfterFiltering(CharprobeError):
    """min_count filtering removed every token."""


# ---- cli ----

class ConfigError(CharprobeError):
    """Bad run configuration: unknown keys, missing paths, invalid values."""
