"""Exception types raised across the package."""


class PhoscError(Exception):
    """Base class for all errors raised by this package."""


class EmptyWord(PhoscError):
    """An encoder was given an empty word."""


class UnknownCharacter(PhoscError):
    """A word contains a character outside the configured alphabet/table."""

    def __init__(self, word: str, char: str):
        super().__init__(f"character {char!r} in word {word!r} has no entry")
        self.word = word
        self.char = char


class ParseError(PhoscError):
    """A data file is malformed; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class MissingCharacter(PhoscError):
    """A shape-table file lacks an entry required by the alphabet."""


class InvalidSymbol(PhoscError):
    """A path or label contains a symbol outside the CTC alphabet."""


class InfeasibleLabel(PhoscError):
    """The label cannot be emitted in the available number of timesteps."""


class TooLarge(PhoscError):
    """Brute-force enumeration would exceed its guard bound."""


class ShapeMismatch(PhoscError):
    """Tensor shapes do not chain or do not match declared parameters."""


class StateError(PhoscError):
    """Backward called without a matching forward pass."""


class TooSmall(PhoscError):
    """Feature map smaller than the largest pyramid-pooling level."""


class SpecMismatch(PhoscError):
    """Source and target network specs differ where they must agree."""


class EmptyDataset(PhoscError):
    """Training requested on a dataset with no usable samples."""


class DivergedLoss(PhoscError):
    """Training loss became NaN or infinite."""


class ZeroVector(PhoscError):
    """A zero-norm vector has no cosine direction to match."""


class EmptyLexicon(PhoscError):
    """Prediction requested against an empty label set."""


class OutOfRange(PhoscError):
    """A numeric argument is outside its documented range."""


class EmptyInput(PhoscError):
    """A metric was given no samples."""


class EmptyTruth(PhoscError):
    """CER requires non-empty truth strings."""


class DuplicateSignature(PhoscError):
    """Two different lexicon words map to the same attribute signature."""


class WordTooLong(PhoscError):
    """Word exceeds the renderable length at minimum glyph width."""


class InsufficientWords(PhoscError):
    """Word list shorter than the requested seen+unseen split."""


class FormatError(PhoscError):
    """A binary or tabular input file is not in the expected format."""


class MissingPartition(PhoscError):
    """A manifest lacks a partition required by the evaluation protocol."""


class ConfigError(PhoscError):
    """Experiment configuration failed schema validation."""
