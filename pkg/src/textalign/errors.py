"""Exception types raised across the alignment pipeline."""


class TextAlignError(Exception):
    """Base class for all library errors."""


class EmptyDocumentError(TextAlignError):
    """Document text is empty after whitespace trimming."""


class DecodeError(TextAlignError):
    """Input bytes are not valid UTF-8; message names the byte offset."""


class InsufficientTextError(TextAlignError):
    """Document has too few words for the requested segmentation."""


class DegenerateEmbeddingError(TextAlignError):
    """An embedding vector is all zeros or otherwise unusable."""


class DegenerateBackgroundError(TextAlignError):
    """Background score sample has zero variance; calibration impossible."""


class InsufficientNullSampleError(TextAlignError):
    """Too few nonzero alignment scores to fit a null distribution."""


class FitConvergenceError(TextAlignError):
    """Distribution fit failed to converge; message carries the iteration trace."""


class DegenerateCorrelationError(TextAlignError):
    """Correlation undefined: a coordinate has zero variance."""
