"""Word-string attribute signatures: PHOC, PHOS and their concatenation.

PHOS counts 11 primitive stroke shapes per segment of a pyramidal split of
the word (levels 1..5 by default, 165 dims). PHOC marks which characters
occupy which fractional regions of the word (levels 2..5 by default, 364
dims). The concatenation [phoc, phos] is the attribute signature used to
bridge seen and unseen word labels.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import EmptyWord, MissingCharacter, ParseError, UnknownCharacter

SHAPE_NAMES = (
    "ascender",
    "descender",
    "left_small_semicircle",
    "right_small_semicircle",
    "left_large_semicircle",
    "right_large_semicircle",
    "circle",
    "vertical_line",
    "diagonal_line",
    "diagonal_line_135",
    "horizontal_line",
)
NUM_SHAPES = len(SHAPE_NAMES)

DEFAULT_ALPHABET = string.ascii_lowercase


@dataclass(frozen=True)
class ShapeTable:
    """Per-character counts of the 11 primitive shapes.

    Immutable after construction; entries map each character of the
    alphabet to exactly NUM_SHAPES non-negative integers in SHAPE_NAMES
    order.
    """

    entries: dict[str, tuple[int, ...]]

    def __post_init__(self):
        for char, counts in self.entries.items():
            if len(char) != 1:
                raise ValueError(f"table keys must be single characters, got {char!r}")
            if len(counts) != NUM_SHAPES:
                raise ValueError(
                    f"{char!r}: expected {NUM_SHAPES} counts, got {len(counts)}"
                )
            if any(c < 0 for c in counts):
                raise ValueError(f"{char!r}: negative shape count")

    def counts(self, char: str) -> np.ndarray:
        if char not in self.entries:
            raise UnknownCharacter(char, char)
        return np.asarray(self.entries[char], dtype=np.float64)

    def __contains__(self, char: str) -> bool:
        return char in self.entries

    def characters(self) -> tuple[str, ...]:
        return tuple(sorted(self.entries))


def _parse_shape_table(lines: Iterable[str], path, alphabet: str) -> ShapeTable:
    entries: dict[str, tuple[int, ...]] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 1 + NUM_SHAPES:
            raise ParseError(
                path, line_no, f"expected char + {NUM_SHAPES} counts, got {len(parts)} fields"
            )
        char = parts[0]
        if len(char) != 1:
            raise ParseError(path, line_no, f"first field must be one character, got {char!r}")
        try:
            counts = tuple(int(p) for p in parts[1:])
        except ValueError:
            raise ParseError(path, line_no, "counts must be integers") from None
        if any(c < 0 for c in counts):
            raise ParseError(path, line_no, "negative shape count")
        if char in entries:
            raise ParseError(path, line_no, f"duplicate entry for {char!r}")
        entries[char] = counts
    missing = [c for c in alphabet if c not in entries]
    if missing:
        raise MissingCharacter(f"{path}: no entry for {missing!r}")
    return ShapeTable(entries)


def load_shape_table(path: str | Path, alphabet: str = DEFAULT_ALPHABET) -> ShapeTable:
    """Load a shape table from its text format (one `char counts...` line each)."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        return _parse_shape_table(f, path, alphabet)


def save_shape_table(table: ShapeTable, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for char in table.characters():
            counts = " ".join(str(c) for c in table.entries[char])
            f.write(f"{char} {counts}\n")


_DEFAULT_TABLE: ShapeTable | None = None


def default_shape_table() -> ShapeTable:
    """The shipped a-z table (see data/shape_table.txt for conventions)."""
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        text = resources.files("phosc.data").joinpath("shape_table.txt").read_text("utf-8")
        _DEFAULT_TABLE = _parse_shape_table(
            text.splitlines(), "data/shape_table.txt", DEFAULT_ALPHABET
        )
    return _DEFAULT_TABLE


def _check_levels(levels: Sequence[int]) -> tuple[int, ...]:
    levels = tuple(int(h) for h in levels)
    if not levels or levels[0] < 1 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"levels must be strictly increasing positive ints, got {levels}")
    return levels


@dataclass(frozen=True)
class PhosConfig:
    levels: tuple[int, ...] = (1, 2, 3, 4, 5)
    shape_table: ShapeTable = field(default_factory=default_shape_table)

    def __post_init__(self):
        object.__setattr__(self, "levels", _check_levels(self.levels))

    @property
    def vector_length(self) -> int:
        return sum(self.levels) * NUM_SHAPES


@dataclass(frozen=True)
class PhocConfig:
    levels: tuple[int, ...] = (2, 3, 4, 5)
    alphabet: str = DEFAULT_ALPHABET
    occupancy_threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "levels", _check_levels(self.levels))
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet has duplicate characters")
        if not 0.0 < self.occupancy_threshold <= 1.0:
            raise ValueError("occupancy_threshold must be in (0, 1]")

    @property
    def vector_length(self) -> int:
        return sum(self.levels) * len(self.alphabet)


def segment_index(i: int, n: int, h: int) -> int:
    """Segment of character i (0-based) of an n-character word at level h.

    The character's midpoint (i+0.5)/n picks the segment; clamped so the
    last segment absorbs boundary cases.
    """
    return min(h - 1, int(((i + 0.5) / n) * h))


def segments(word: str, h: int) -> list[str]:
    """The word's characters grouped into the h segments of one level."""
    out = ["" for _ in range(h)]
    n = len(word)
    for i, ch in enumerate(word):
        out[segment_index(i, n, h)] += ch
    return out


def phos_encode(word: str, cfg: PhosConfig) -> np.ndarray:
    """PHOS vector: per level, per segment, the summed shape counts.

    Layout is level-major, then segment, then the 11 shape counts.
    Length = sum(levels) * 11.
    """
    if not word:
        raise EmptyWord("cannot encode an empty word")
    table = cfg.shape_table
    for ch in word:
        if ch not in table:
            raise UnknownCharacter(word, ch)
    n = len(word)
    blocks = []
    for h in cfg.levels:
        level = np.zeros((h, NUM_SHAPES), dtype=np.float64)
        for i, ch in enumerate(word):
            level[segment_index(i, n, h)] += table.counts(ch)
        blocks.append(level.reshape(-1))
    return np.concatenate(blocks)


def phoc_encode(word: str, cfg: PhocConfig) -> np.ndarray:
    """PHOC vector: bit set where a character occupies a pyramid region.

    Character i of an n-character word occupies [i/n, (i+1)/n]; its bit in
    region [r/h, (r+1)/h] is set when the interval overlap is at least
    occupancy_threshold * (1/n). Layout is level-major, then region, then
    alphabet index.
    """
    if not word:
        raise EmptyWord("cannot encode an empty word")
    char_index = {c: k for k, c in enumerate(cfg.alphabet)}
    for ch in word:
        if ch not in char_index:
            raise UnknownCharacter(word, ch)
    n = len(word)
    na = len(cfg.alphabet)
    blocks = []
    for h in cfg.levels:
        bits = np.zeros((h, na), dtype=np.float64)
        for i, ch in enumerate(word):
            lo, hi = i / n, (i + 1) / n
            for r in range(h):
                overlap = min(hi, (r + 1) / h) - max(lo, r / h)
                # 1e-12 slack keeps exact-half overlaps robust to rounding
                if overlap * n >= cfg.occupancy_threshold - 1e-12:
                    bits[r, char_index[ch]] = 1.0
        blocks.append(bits.reshape(-1))
    return np.concatenate(blocks)


@dataclass(frozen=True)
class AttributeSignature:
    """A word's combined [phoc, phos] embedding."""

    word: str
    phoc: np.ndarray
    phos: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return np.concatenate([self.phoc, self.phos])


def phosc_encode(word: str, phos_cfg: PhosConfig, phoc_cfg: PhocConfig) -> AttributeSignature:
    return AttributeSignature(
        word=word, phoc=phoc_encode(word, phoc_cfg), phos=phos_encode(word, phos_cfg)
    )


def write_signatures(
    words: Iterable[str],
    phos_cfg: PhosConfig,
    phoc_cfg: PhocConfig,
    out: TextIO,
    mode: str = "phosc",
) -> None:
    """Write `word<TAB>comma-separated vector` rows in input order.

    mode selects the exported block: "phos", "phoc" or "phosc" (combined).
    """
    if mode not in ("phos", "phoc", "phosc"):
        raise ValueError(f"unknown mode {mode!r}")
    for word in words:
        if mode == "phos":
            vec = phos_encode(word, phos_cfg)
        elif mode == "phoc":
            vec = phoc_encode(word, phoc_cfg)
        else:
            vec = phosc_encode(word, phos_cfg, phoc_cfg).combined
        out.write(word + "\t" + ",".join(format(v, "g") for v in vec) + "\n")
