"""Exception types shared across the package.

Every error the library raises deliberately derives from NanetError so the
CLI can map failures to stable names and a nonzero exit code.
"""


class NanetError(Exception):
    """Base class for all deliberate nanet failures."""


class NonLetterInput(NanetError):
    """Character outside A-Z was given to the Morse codec."""


class UnknownCode(NanetError):
    """Symbol sequence matches no letter code."""


class SpecOverflow(NanetError):
    """Jittered glyph layout would fall outside the canvas."""


class IoFailure(NanetError):
    """File read/write failed."""


class ShapeMismatch(NanetError):
    """Tensor shapes are inconsistent for the requested op."""


class DisconnectedGraph(NanetError):
    """backward() called on a tensor with no recorded graph."""


class NonFiniteLoss(NanetError):
    """Training loss became NaN/Inf; aborting is the safe move."""


class VersionMismatch(NanetError):
    """Checkpoint format version is not supported."""


class ChecksumMismatch(NanetError):
    """Checkpoint payload fails its integrity check."""


class MissingSplit(NanetError):
    """Dataset manifest lacks the requested split or condition."""


class EmptyMatrix(NanetError):
    """Metrics requested on a confusion matrix with zero total."""
