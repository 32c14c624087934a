"""Synthetic word-image corpus: procedural glyphs, augmentation, PGM IO,
manifests and deterministic corpus builds.

Glyphs are stroke lists in a normalized per-character box: x runs 0..1
across the slot, y runs downward with -0.6 at the ascender top, 0 at the
x-height line, 1 at the baseline and 1.45 at the descender bottom. Every
stroke is tagged with the primitive-shape class it realizes, and
audit_glyphs() cross-checks those tags against the shape-count table, so
rendered ink and the attribute targets cannot drift apart.

Words are drawn dark-on-white onto a fixed 50x250 uint8 canvas. Styles
(thickness, ink level, width, slant, jitter) derive from (seed, style_id);
augmentation applies a shear about the baseline plus clamped Gaussian
noise. All randomness flows from numpy SeedSequence chains, so a corpus
build is reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyWord,
    FormatError,
    InsufficientWords,
    MissingPartition,
    ParseError,
    SpecMismatch,
    UnknownCharacter,
    WordTooLong,
)
from .signature import ShapeTable, default_shape_table

CANVAS_HEIGHT = 50
CANVAS_WIDTH = 250
WHITE = 255

# glyph-space landmarks (y grows downward)
ASC_TOP = -0.6
X_TOP = 0.0
BASELINE = 1.0
DESC_BOTTOM = 1.45

_UNIT_PX = 22.0  # pixels per glyph-space y unit
_TOP_PAD = 2.0  # canvas row of the ascender top
_SIDE_PAD = 5.0
_MIN_SLOT = 8.0
_MAX_SLOT = 26.0

PARTITIONS = ("train", "val", "test_seen", "test_unseen")


# ---------------------------------------------------------------------------
# glyph definitions
#
# Strokes: ("line", shape_class, x0, y0, x1, y1)
#          ("arc", shape_class, cx, cy, rx, ry, a0, a1)   angles in degrees,
#              point(t) = (cx + rx*cos t, cy + ry*sin t), y down, sampled
#              linearly from a0 to a1 (either direction)
#          ("circle", shape_class, cx, cy, rx, ry)
# Cosmetic dots (i, j) are rendered but carry no shape class.

GLYPH_STROKES: dict[str, tuple[tuple, ...]] = {
    "a": (
        ("circle", "circle", 0.45, 0.5, 0.28, 0.5),
        ("line", "vertical_line", 0.73, 0.0, 0.73, 1.0),
    ),
    "b": (
        ("line", "ascender", 0.25, -0.6, 0.25, 0.0),
        ("line", "vertical_line", 0.25, 0.0, 0.25, 1.0),
        ("arc", "right_large_semicircle", 0.25, 0.5, 0.45, 0.5, -90.0, 90.0),
    ),
    "c": (("arc", "left_large_semicircle", 0.55, 0.5, 0.38, 0.5, 60.0, 300.0),),
    "d": (
        ("line", "ascender", 0.75, -0.6, 0.75, 0.0),
        ("line", "vertical_line", 0.75, 0.0, 0.75, 1.0),
        ("arc", "left_large_semicircle", 0.75, 0.5, 0.45, 0.5, 90.0, 270.0),
    ),
    "e": (
        ("line", "horizontal_line", 0.18, 0.48, 0.8, 0.48),
        ("arc", "left_large_semicircle", 0.5, 0.5, 0.32, 0.5, 0.0, -290.0),
    ),
    "f": (
        ("line", "ascender", 0.4, -0.45, 0.4, 0.0),
        ("line", "vertical_line", 0.4, 0.0, 0.4, 1.0),
        ("arc", "right_small_semicircle", 0.62, -0.23, 0.22, 0.22, 180.0, 300.0),
        ("line", "horizontal_line", 0.2, 0.05, 0.66, 0.05),
    ),
    "g": (
        ("circle", "circle", 0.45, 0.5, 0.28, 0.5),
        ("line", "vertical_line", 0.73, 0.0, 0.73, 1.0),
        ("arc", "descender", 0.55, 1.05, 0.18, 0.4, 0.0, 120.0),
    ),
    "h": (
        ("line", "ascender", 0.25, -0.6, 0.25, 0.0),
        ("line", "vertical_line", 0.25, 0.0, 0.25, 1.0),
        ("arc", "right_small_semicircle", 0.5, 0.45, 0.25, 0.45, 180.0, 360.0),
        ("line", "vertical_line", 0.75, 0.45, 0.75, 1.0),
    ),
    "i": (("line", "vertical_line", 0.5, 0.0, 0.5, 1.0),),
    "j": (
        ("line", "vertical_line", 0.55, 0.0, 0.55, 1.0),
        ("arc", "descender", 0.37, 1.05, 0.18, 0.4, 0.0, 120.0),
    ),
    "k": (
        ("line", "ascender", 0.3, -0.6, 0.3, 0.0),
        ("line", "vertical_line", 0.3, 0.0, 0.3, 1.0),
        ("line", "diagonal_line", 0.3, 0.55, 0.78, 0.08),
        ("line", "diagonal_line_135", 0.3, 0.55, 0.8, 1.0),
    ),
    "l": (
        ("line", "ascender", 0.5, -0.6, 0.5, 0.0),
        ("line", "vertical_line", 0.5, 0.0, 0.5, 1.0),
    ),
    "m": (
        ("line", "vertical_line", 0.18, 0.0, 0.18, 1.0),
        ("arc", "right_small_semicircle", 0.34, 0.45, 0.16, 0.45, 180.0, 360.0),
        ("line", "vertical_line", 0.5, 0.45, 0.5, 1.0),
        ("arc", "right_small_semicircle", 0.66, 0.45, 0.16, 0.45, 180.0, 360.0),
        ("line", "vertical_line", 0.82, 0.45, 0.82, 1.0),
    ),
    "n": (
        ("line", "vertical_line", 0.25, 0.0, 0.25, 1.0),
        ("arc", "right_small_semicircle", 0.5, 0.45, 0.25, 0.45, 180.0, 360.0),
        ("line", "vertical_line", 0.75, 0.45, 0.75, 1.0),
    ),
    "o": (("circle", "circle", 0.5, 0.5, 0.3, 0.5),),
    "p": (
        ("line", "vertical_line", 0.25, 0.0, 0.25, 1.0),
        ("line", "descender", 0.25, 1.0, 0.25, 1.45),
        ("arc", "right_large_semicircle", 0.25, 0.5, 0.45, 0.5, -90.0, 90.0),
    ),
    "q": (
        ("line", "vertical_line", 0.75, 0.0, 0.75, 1.0),
        ("line", "descender", 0.75, 1.0, 0.75, 1.45),
        ("arc", "left_large_semicircle", 0.75, 0.5, 0.45, 0.5, 90.0, 270.0),
    ),
    "r": (
        ("line", "vertical_line", 0.3, 0.0, 0.3, 1.0),
        ("arc", "right_small_semicircle", 0.52, 0.3, 0.22, 0.3, 180.0, 300.0),
    ),
    "s": (
        ("arc", "left_small_semicircle", 0.52, 0.27, 0.26, 0.27, 90.0, 315.0),
        ("arc", "right_small_semicircle", 0.48, 0.75, 0.26, 0.26, -90.0, 135.0),
    ),
    "t": (
        ("line", "ascender", 0.45, -0.35, 0.45, 0.0),
        ("line", "vertical_line", 0.45, 0.0, 0.45, 1.0),
        ("line", "horizontal_line", 0.25, 0.02, 0.7, 0.02),
    ),
    "u": (
        ("line", "vertical_line", 0.25, 0.0, 0.25, 0.55),
        ("arc", "left_small_semicircle", 0.5, 0.55, 0.25, 0.45, 180.0, 0.0),
        ("line", "vertical_line", 0.75, 0.0, 0.75, 1.0),
    ),
    "v": (
        ("line", "diagonal_line_135", 0.2, 0.0, 0.5, 1.0),
        ("line", "diagonal_line", 0.5, 1.0, 0.8, 0.0),
    ),
    "w": (
        ("line", "diagonal_line_135", 0.15, 0.0, 0.35, 1.0),
        ("line", "diagonal_line", 0.35, 1.0, 0.5, 0.2),
        ("line", "diagonal_line_135", 0.5, 0.2, 0.65, 1.0),
        ("line", "diagonal_line", 0.65, 1.0, 0.85, 0.0),
    ),
    "x": (
        ("line", "diagonal_line_135", 0.2, 0.0, 0.8, 1.0),
        ("line", "diagonal_line", 0.2, 1.0, 0.8, 0.0),
    ),
    "y": (
        ("line", "diagonal_line_135", 0.2, 0.0, 0.5, 1.0),
        ("line", "diagonal_line", 0.8, 0.0, 0.5, 1.0),
        ("arc", "descender", 0.32, 1.05, 0.18, 0.4, 0.0, 120.0),
    ),
    "z": (
        ("line", "horizontal_line", 0.2, 0.0, 0.8, 0.0),
        ("line", "diagonal_line", 0.2, 1.0, 0.8, 0.0),
        ("line", "horizontal_line", 0.2, 1.0, 0.8, 1.0),
    ),
}

GLYPH_DOTS: dict[str, tuple[float, float]] = {
    "i": (0.5, -0.32),
    "j": (0.55, -0.32),
}


def audit_glyphs(table: ShapeTable | None = None) -> None:
    """Verify the stroke class tags of every glyph against the shape table.

    Raises SpecMismatch listing every character whose stroke classes do
    not reproduce its table counts exactly.
    """
    from .signature import SHAPE_NAMES

    table = table or default_shape_table()
    problems = []
    for char in sorted(table.characters()):
        if char not in GLYPH_STROKES:
            problems.append(f"{char!r}: no glyph defined")
            continue
        got = Counter(stroke[1] for stroke in GLYPH_STROKES[char])
        want = {name: c for name, c in zip(SHAPE_NAMES, table.counts(char)) if c}
        if got != Counter(want):
            problems.append(f"{char!r}: strokes {dict(got)} != table {want}")
    for char in GLYPH_STROKES:
        if char not in table.characters():
            problems.append(f"{char!r}: glyph without a table row")
    if problems:
        raise SpecMismatch("glyph audit failed: " + "; ".join(problems))


# ---------------------------------------------------------------------------
# styles and rendering


@dataclass(frozen=True)
class GlyphStyle:
    thickness: float
    ink: float
    width_scale: float
    slant: float
    jitter: float


def style_params(seed: int, style_id: int) -> GlyphStyle:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(style_id), 0x57]))
    return GlyphStyle(
        thickness=float(rng.uniform(0.9, 1.7)),
        ink=float(rng.uniform(10.0, 70.0)),
        width_scale=float(rng.uniform(0.8, 1.0)),
        slant=float(rng.uniform(-0.12, 0.12)),
        jitter=float(rng.uniform(0.0, 0.02)),
    )


def _sample_stroke(stroke, per_px: float = 2.0) -> np.ndarray:
    """Sample a stroke to glyph-space points, roughly per_px per pixel of
    arc length (y unit ~= _UNIT_PX pixels)."""
    kind = stroke[0]
    if kind == "line":
        _, _, x0, y0, x1, y1 = stroke
        length = math.hypot(x1 - x0, y1 - y0) * _UNIT_PX
        n = max(2, int(length * per_px) + 1)
        t = np.linspace(0.0, 1.0, n)
        return np.stack([x0 + (x1 - x0) * t, y0 + (y1 - y0) * t], axis=1)
    if kind == "arc":
        _, _, cx, cy, rx, ry, a0, a1 = stroke
        span = abs(a1 - a0) / 360.0
        length = span * math.pi * 2.0 * max(rx, ry) * _UNIT_PX
        n = max(3, int(length * per_px) + 1)
        t = np.radians(np.linspace(a0, a1, n))
        return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=1)
    if kind == "circle":
        _, _, cx, cy, rx, ry = stroke
        length = math.pi * 2.0 * max(rx, ry) * _UNIT_PX
        n = max(8, int(length * per_px) + 1)
        t = np.linspace(0.0, 2.0 * math.pi, n)
        return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=1)
    raise ValueError(f"unknown stroke kind {kind!r}")


def _stamp(canvas: np.ndarray, xs: np.ndarray, ys: np.ndarray, radius: float, ink: float):
    """Min-blend soft discs of the given radius at float pixel centers."""
    r_out = radius + 0.5
    k = int(math.ceil(r_out)) + 1
    offs = np.arange(-k, k + 1, dtype=np.float64)
    cx = np.round(xs).astype(np.int64)
    cy = np.round(ys).astype(np.int64)
    px = cx[:, None, None] + offs[None, None, :].astype(np.int64)
    py = cy[:, None, None] + offs[None, :, None].astype(np.int64)
    px, py = np.broadcast_arrays(px, py)
    d = np.hypot(
        px.astype(np.float64) - xs[:, None, None],
        py.astype(np.float64) - ys[:, None, None],
    )
    val = ink + (WHITE - ink) * np.clip(d - radius + 0.5, 0.0, 1.0)
    inside = (
        (px >= 0)
        & (px < canvas.shape[1])
        & (py >= 0)
        & (py < canvas.shape[0])
        & (val < WHITE)
    )
    np.minimum.at(canvas, (py[inside], px[inside]), val[inside])


def render_word(
    word: str,
    style: GlyphStyle | None = None,
    jitter_rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Draw the word onto a fresh 50x250 canvas; returns uint8 pixels."""
    if not word:
        raise EmptyWord("cannot render an empty word")
    for ch in word:
        if ch not in GLYPH_STROKES:
            raise UnknownCharacter(word, ch)
    style = style or GlyphStyle(1.2, 30.0, 0.9, 0.0, 0.0)

    usable = CANVAS_WIDTH - 2.0 * _SIDE_PAD
    slot = min(_MAX_SLOT, usable / len(word))
    if slot < _MIN_SLOT:
        raise WordTooLong(f"{len(word)} characters cannot fit {CANVAS_WIDTH}px")
    # center short words
    x0 = _SIDE_PAD + (usable - slot * len(word)) / 2.0
    baseline_row = _TOP_PAD + (BASELINE - ASC_TOP) * _UNIT_PX
    glyph_w = slot * style.width_scale

    canvas = np.full((CANVAS_HEIGHT, CANVAS_WIDTH), float(WHITE))
    for i, ch in enumerate(word):
        left = x0 + i * slot + (slot - glyph_w) / 2.0
        for stroke in GLYPH_STROKES[ch]:
            pts = _sample_stroke(stroke)
            if jitter_rng is not None and style.jitter > 0.0:
                pts = pts + jitter_rng.uniform(-style.jitter, style.jitter, size=(1, 2))
            ypx = _TOP_PAD + (pts[:, 1] - ASC_TOP) * _UNIT_PX
            xpx = left + pts[:, 0] * glyph_w + style.slant * (baseline_row - ypx)
            _stamp(canvas, xpx, ypx, style.thickness, style.ink)
        if ch in GLYPH_DOTS:
            dx, dy = GLYPH_DOTS[ch]
            ypx = np.array([_TOP_PAD + (dy - ASC_TOP) * _UNIT_PX])
            xpx = left + np.array([dx * glyph_w]) + style.slant * (baseline_row - ypx)
            _stamp(canvas, xpx, ypx, style.thickness * 1.1, style.ink)
    return np.round(canvas).clip(0, 255).astype(np.uint8)


def augment_image(
    img: np.ndarray,
    rng: np.random.Generator,
    max_shear: float = 0.25,
    max_noise: float = 10.0,
) -> np.ndarray:
    """Shear about the baseline row plus clamped Gaussian pixel noise.

    Each row shifts horizontally by round(shear * (baseline - row));
    vacated pixels are white. Noise is added in float and clamped back to
    0..255 before the uint8 round-trip.
    """
    shear = float(rng.uniform(-max_shear, max_shear))
    sigma = float(rng.uniform(0.0, max_noise))
    baseline_row = _TOP_PAD + (BASELINE - ASC_TOP) * _UNIT_PX
    out = np.full_like(img, WHITE)
    H, W = img.shape
    for row in range(H):
        shift = int(round(shear * (baseline_row - row)))
        if shift >= 0:
            if shift < W:
                out[row, shift:] = img[row, : W - shift]
        else:
            if -shift < W:
                out[row, :shift] = img[row, -shift:]
    noisy = out.astype(np.float64) + rng.normal(0.0, sigma, size=out.shape)
    return np.round(noisy).clip(0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# PGM IO


def save_pgm(path: str | Path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 2:
        raise ValueError("expected a 2-d uint8 image")
    with Path(path).open("wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def load_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    if not raw.startswith(b"P5"):
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval, single whitespace, then pixels
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"{path}: non-numeric header field") from None
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    need = width * height
    data = raw[pos : pos + need]
    if len(data) != need:
        raise FormatError(f"{path}: expected {need} pixel bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width).copy()


# ---------------------------------------------------------------------------
# word lists, manifests, corpus build


_WORD_RE = re.compile(r"[a-z]+")


def load_wordlist(path: str | Path) -> list[str]:
    """One word per line; '#' comments and blanks skipped, duplicates
    dropped keeping first occurrence."""
    path = Path(path)
    words = []
    seen = set()
    for line_no, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        w = line.strip()
        if not w or w.startswith("#"):
            continue
        if not _WORD_RE.fullmatch(w):
            raise ParseError(str(path), line_no, f"invalid word {w!r}")
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def default_wordlist() -> list[str]:
    from importlib import resources

    text = resources.files("phosc").joinpath("data/words.txt").read_text("utf-8")
    words = []
    seen = set()
    for line in text.splitlines():
        w = line.strip()
        if w and not w.startswith("#") and w not in seen:
            seen.add(w)
            words.append(w)
    return words


def split_words(
    words: list[str], num_seen: int, num_unseen: int, seed: int
) -> tuple[list[str], list[str]]:
    """Disjoint seen/unseen split by seeded shuffle of the unique words."""
    if len(set(words)) != len(words):
        raise ValueError("word list contains duplicates")
    if num_seen < 1 or num_unseen < 1:
        raise ValueError("both partitions need at least one word")
    if num_seen + num_unseen > len(words):
        raise InsufficientWords(
            f"need {num_seen + num_unseen} words, have {len(words)}"
        )
    order = list(words)
    np.random.default_rng(np.random.SeedSequence([int(seed), 0x5E7])).shuffle(order)
    return sorted(order[:num_seen]), sorted(order[num_seen : num_seen + num_unseen])


@dataclass(frozen=True)
class ManifestRow:
    path: str
    label: str
    partition: str


def write_manifest(path: str | Path, rows: list[ManifestRow]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(f"{row.path}\t{row.label}\t{row.partition}\n")


def load_manifest(path: str | Path) -> list[ManifestRow]:
    path = Path(path)
    rows = []
    for line_no, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(str(path), line_no, f"expected 3 fields, got {len(parts)}")
        rel, label, partition = parts
        if partition not in PARTITIONS:
            raise ParseError(str(path), line_no, f"unknown partition {partition!r}")
        if not _WORD_RE.fullmatch(label):
            raise ParseError(str(path), line_no, f"invalid label {label!r}")
        rows.append(ManifestRow(rel, label, partition))
    return rows


@dataclass
class CorpusSummary:
    root: str
    seed: int
    num_styles: int
    seen_words: list[str]
    unseen_words: list[str]
    counts: dict[str, int]


def build_corpus(
    out_dir: str | Path,
    seen_words: list[str],
    unseen_words: list[str],
    seed: int,
    num_styles: int = 4,
    train_copies: int = 18,
) -> CorpusSummary:
    """Render and write a full corpus under out_dir.

    Layout: images/<partition>_<index>.pgm, manifest.tsv, corpus.json.
    Per seen word: train_copies training images, ceil(train_copies/10)
    validation images and 2 seen-test images; per unseen word 8 test
    images. Styles rotate per copy; every image gets its own augmentation
    stream derived from (seed, partition, word, copy), so the build is a
    pure function of its arguments.
    """
    if not seen_words or not unseen_words:
        raise InsufficientWords("both word sets must be non-empty")
    overlap = set(seen_words) & set(unseen_words)
    if overlap:
        raise ValueError(f"seen/unseen overlap: {sorted(overlap)[:5]}")
    if num_styles < 1 or train_copies < 1:
        raise ValueError("num_styles and train_copies must be positive")

    out_dir = Path(out_dir)
    images = out_dir / "images"
    images.mkdir(parents=True, exist_ok=True)
    styles = [style_params(seed, s) for s in range(num_styles)]

    val_copies = max(1, math.ceil(train_copies / 10))
    plan = [
        ("train", seen_words, train_copies, 0),
        ("val", seen_words, val_copies, 1),
        ("test_seen", seen_words, 2, 2),
        ("test_unseen", unseen_words, 8, 3),
    ]

    rows: list[ManifestRow] = []
    counts: dict[str, int] = {}
    for partition, words, copies, salt in plan:
        idx = 0
        for wi, word in enumerate(words):
            for copy in range(copies):
                ss = np.random.SeedSequence([int(seed), salt, wi, copy])
                rng = np.random.default_rng(ss)
                style = styles[(wi + copy) % num_styles]
                img = render_word(word, style, jitter_rng=rng)
                img = augment_image(img, rng)
                rel = f"images/{partition}_{idx:06d}.pgm"
                save_pgm(out_dir / rel, img)
                rows.append(ManifestRow(rel, word, partition))
                idx += 1
        counts[partition] = idx

    write_manifest(out_dir / "manifest.tsv", rows)
    meta = {
        "seed": int(seed),
        "num_styles": num_styles,
        "train_copies": train_copies,
        "canvas": [CANVAS_HEIGHT, CANVAS_WIDTH],
        "seen_words": list(seen_words),
        "unseen_words": list(unseen_words),
        "counts": counts,
    }
    (out_dir / "corpus.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    return CorpusSummary(
        root=str(out_dir),
        seed=int(seed),
        num_styles=num_styles,
        seen_words=list(seen_words),
        unseen_words=list(unseen_words),
        counts=counts,
    )


def load_corpus(
    corpus_dir: str | Path, partitions: tuple[str, ...] | None = None
) -> dict[str, tuple[np.ndarray, list[str]]]:
    """Load manifest images as a dict partition -> (uint8 (N,1,H,W), labels).

    Raises MissingPartition if a requested partition has no rows.
    """
    corpus_dir = Path(corpus_dir)
    rows = load_manifest(corpus_dir / "manifest.tsv")
    wanted = partitions or PARTITIONS
    grouped: dict[str, list[ManifestRow]] = {p: [] for p in wanted}
    for row in rows:
        if row.partition in grouped:
            grouped[row.partition].append(row)
    out = {}
    for p in wanted:
        if not grouped[p]:
            raise MissingPartition(f"partition {p!r} has no images")
        imgs = np.stack([load_pgm(corpus_dir / r.path) for r in grouped[p]])
        out[p] = (imgs[:, None, :, :], [r.label for r in grouped[p]])
    return out


def images_to_float(imgs: np.ndarray) -> np.ndarray:
    """uint8 (N,1,H,W) to float64 in [0,1] with ink bright: 1 - v/255."""
    return 1.0 - imgs.astype(np.float64) / 255.0
