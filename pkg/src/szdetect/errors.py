"""Exception hierarchy for the szdetect package."""


class SzDetectError(Exception):
    """Base class for all package errors."""


# --- recording / file ingestion ---

class MalformedHeader(SzDetectError):
    """An EDF header field failed byte-level validation."""


class MixedSamplingRates(SzDetectError):
    """EEG signals in one file disagree on sampling rate."""


class TruncatedRecord(SzDetectError):
    """File data is shorter than the header claims."""


class HeaderPayloadMismatch(SzDetectError):
    """Raw-format payload size disagrees with its sidecar header."""


class OutOfBounds(SzDetectError):
    """An annotation extends past the end of its recording."""


class NegativeDuration(SzDetectError):
    """An annotation row has duration <= 0."""


# --- montage / preprocessing ---

class Unrecoverable(SzDetectError):
    """A missing electrode cannot be imputed: its nearest neighbors are missing too."""


class MissingElectrode(SzDetectError):
    """A montage derivation references an electrode that is not present."""


class InvalidBand(SzDetectError):
    """Filter cutoffs or transition width outside the valid range."""


class TooShort(SzDetectError):
    """Signal shorter than one filter length."""


class UpsampleUnsupported(SzDetectError):
    """Recording sample rate is below the 128 Hz target."""


# --- windowing / sampling ---

class TargetOutOfBounds(SzDetectError):
    """A window's target section falls outside the recording."""


class EmptyCategory(SzDetectError):
    """No patient in the training set can produce a requested segment category."""


# --- model ---

class ShapeMismatch(SzDetectError):
    """Input or parameter tensor shapes disagree with the model configuration."""


class NonFiniteActivation(SzDetectError):
    """A NaN or Inf appeared in a forward-pass activation."""


class IndivisibleLength(SzDetectError):
    """Segment length is not a multiple of the patch length."""


# --- training ---

class NonFiniteLoss(SzDetectError):
    """Training loss became NaN or Inf."""


class EmptyValidationSet(SzDetectError):
    """Model selection requested without any validation recordings."""


# --- inference / scoring ---

class TooShortRecording(SzDetectError):
    """Recording shorter than one target window."""


class LengthMismatch(SzDetectError):
    """Probability traces to be ensembled differ in id or length."""


class DurationMismatch(SzDetectError):
    """Hypothesis and reference disagree on recording duration."""


class MismatchedRecordings(SzDetectError):
    """Hypothesis and reference files reference different recording sets."""


class BadCheckpoint(SzDetectError):
    """Checkpoint file is corrupt or has an unsupported version."""
