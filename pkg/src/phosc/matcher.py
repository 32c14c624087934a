"""Zero-shot word matching: cosine similarity between predicted attribute
signatures and a lexicon of candidate word signatures.

ZSL restricts candidates to the partition the image came from (unseen
images match only unseen words); GZSL searches the union. Lexicon rows
are kept sorted by word, and argmax takes the first maximum, so score
ties resolve to the lexicographically smallest word.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DuplicateSignature, EmptyLexicon, ParseError, ZeroVector
from .signature import PhocConfig, PhosConfig, phoc_encode, phos_encode

MODES = ("phos", "phoc", "phosc")
_RESTRICTIONS = (None, "seen", "unseen")


@dataclass(frozen=True)
class Lexicon:
    """Candidate words with their signature matrix, sorted by word."""

    words: tuple[str, ...]
    seen: tuple[bool, ...]  # aligned with words
    matrix: np.ndarray  # (len(words), D) float64
    mode: str

    def __post_init__(self):
        if len(self.words) != len(self.seen) or len(self.words) != self.matrix.shape[0]:
            raise ValueError("words, seen flags and matrix rows must align")
        if not self.words:
            raise EmptyLexicon("lexicon has no words")
        if list(self.words) != sorted(self.words):
            raise ValueError("lexicon words must be sorted")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def restricted(self, restrict: str | None) -> "Lexicon":
        if restrict not in _RESTRICTIONS:
            raise ValueError(f"restrict must be one of {_RESTRICTIONS}, got {restrict!r}")
        if restrict is None:
            return self
        keep = [i for i, s in enumerate(self.seen) if s == (restrict == "seen")]
        if not keep:
            raise EmptyLexicon(f"no {restrict} words in lexicon")
        return Lexicon(
            words=tuple(self.words[i] for i in keep),
            seen=tuple(self.seen[i] for i in keep),
            matrix=self.matrix[keep],
            mode=self.mode,
        )


def signature_for(word: str, phoc_cfg: PhocConfig, phos_cfg: PhosConfig, mode: str):
    if mode == "phos":
        return phos_encode(word, phos_cfg)
    if mode == "phoc":
        return phoc_encode(word, phoc_cfg)
    if mode == "phosc":
        return np.concatenate([phoc_encode(word, phoc_cfg), phos_encode(word, phos_cfg)])
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def build_lexicon(
    seen_words,
    unseen_words,
    phoc_cfg: PhocConfig | None = None,
    phos_cfg: PhosConfig | None = None,
    mode: str = "phosc",
) -> Lexicon:
    """Encode both word sets; raises on overlaps, zero rows, or two words
    sharing one signature (which the matcher could never tell apart)."""
    phoc_cfg = phoc_cfg or PhocConfig()
    phos_cfg = phos_cfg or PhosConfig()
    seen_words = list(seen_words)
    unseen_words = list(unseen_words)
    overlap = set(seen_words) & set(unseen_words)
    if overlap:
        raise ValueError(f"seen/unseen overlap: {sorted(overlap)[:5]}")
    pairs = sorted(
        [(w, True) for w in seen_words] + [(w, False) for w in unseen_words]
    )
    if not pairs:
        raise EmptyLexicon("no words supplied")
    words = tuple(w for w, _ in pairs)
    flags = tuple(s for _, s in pairs)
    rows = [signature_for(w, phoc_cfg, phos_cfg, mode) for w in words]
    matrix = np.stack(rows).astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0):
        zero = words[int(np.argmin(norms))]
        raise ZeroVector(f"word {zero!r} has an all-zero {mode} signature")
    seen_sigs: dict[bytes, str] = {}
    for w, row in zip(words, matrix):
        key = row.tobytes()
        if key in seen_sigs:
            raise DuplicateSignature(
                f"words {seen_sigs[key]!r} and {w!r} share one {mode} signature"
            )
        seen_sigs[key] = w
    return Lexicon(words=words, seen=flags, matrix=matrix, mode=mode)


def save_split(path: str | Path, seen_words, unseen_words) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for w in seen_words:
            f.write(f"{w}\tseen\n")
        for w in unseen_words:
            f.write(f"{w}\tunseen\n")


def load_split(path: str | Path) -> tuple[list[str], list[str]]:
    path = Path(path)
    seen, unseen = [], []
    for line_no, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1] not in ("seen", "unseen"):
            raise ParseError(str(path), line_no, "expected '<word>\\t(seen|unseen)'")
        (seen if parts[1] == "seen" else unseen).append(parts[0])
    return seen, unseen


def cosine_scores(signatures: np.ndarray, lexicon: Lexicon) -> np.ndarray:
    """(N, D) query signatures -> (N, len(lexicon)) cosine similarities."""
    signatures = np.atleast_2d(np.asarray(signatures, dtype=np.float64))
    if signatures.shape[1] != lexicon.dim:
        raise ValueError(
            f"signature dim {signatures.shape[1]} != lexicon dim {lexicon.dim}"
        )
    qn = np.linalg.norm(signatures, axis=1)
    if np.any(qn == 0):
        raise ZeroVector("query signature with zero norm")
    ln = np.linalg.norm(lexicon.matrix, axis=1)
    return (signatures / qn[:, None]) @ (lexicon.matrix / ln[:, None]).T


def match_words(
    signatures: np.ndarray, lexicon: Lexicon, restrict: str | None = None
) -> list[str]:
    """Nearest lexicon word per signature row under cosine similarity."""
    lex = lexicon.restricted(restrict)
    scores = cosine_scores(signatures, lex)
    best = np.argmax(scores, axis=1)  # first max = smallest word on ties
    return [lex.words[i] for i in best]


def zsl_predict(signatures: np.ndarray, lexicon: Lexicon, partition: str) -> list[str]:
    """ZSL protocol: candidates restricted to the image's own partition."""
    if partition not in ("seen", "unseen"):
        raise ValueError(f"partition must be 'seen' or 'unseen', got {partition!r}")
    return match_words(signatures, lexicon, restrict=partition)


def gzsl_predict(signatures: np.ndarray, lexicon: Lexicon) -> list[str]:
    """GZSL protocol: candidates are the full seen+unseen lexicon."""
    return match_words(signatures, lexicon, restrict=None)
