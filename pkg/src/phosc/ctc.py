"""CTC machinery: collapse, exact log-space loss with analytic gradients,
best-path and prefix beam-search decoders, and a brute-force oracle.

The alignment model follows the standard forward-backward recursion over
the blank-extended label. All internal computation is 64-bit and log-space
(log-sum-exp), so sequences up to the lengths used here never underflow.
The blank is always the last class index.
"""

from __future__ import annotations

import itertools
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InfeasibleLabel, InvalidSymbol, TooLarge

NEG_INF = -np.inf
_ENUM_GUARD = 1_000_000


@dataclass(frozen=True)
class CtcAlphabet:
    """Ordered symbol set; the blank class is implicit and always last."""

    symbols: tuple[str, ...]
    blank_char: str = "-"

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("symbols must be distinct")
        if any(len(s) != 1 for s in self.symbols):
            raise ValueError("symbols must be single characters")
        if self.blank_char in self.symbols:
            raise ValueError("blank character collides with a symbol")

    @property
    def blank_index(self) -> int:
        return len(self.symbols)

    @property
    def num_classes(self) -> int:
        return len(self.symbols) + 1

    def index(self, char: str) -> int:
        if char == self.blank_char:
            return self.blank_index
        try:
            return self.symbols.index(char)
        except ValueError:
            raise InvalidSymbol(f"{char!r} not in alphabet") from None

    def label_ids(self, label: str) -> list[int]:
        ids = []
        for ch in label:
            if ch == self.blank_char:
                raise InvalidSymbol("labels may not contain the blank")
            ids.append(self.index(ch))
        return ids

    def string(self, ids) -> str:
        return "".join(self.symbols[i] for i in ids)


def from_string(symbols: str, blank_char: str = "-") -> CtcAlphabet:
    return CtcAlphabet(tuple(symbols), blank_char)


def validate_prob_matrix(probs: np.ndarray, num_classes: int | None = None) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] < 1:
        raise ValueError(f"expected a T x C matrix with T >= 1, got shape {probs.shape}")
    if num_classes is not None and probs.shape[1] != num_classes:
        raise ValueError(f"expected {num_classes} columns, got {probs.shape[1]}")
    if np.any(probs < 0):
        raise ValueError("probabilities must be non-negative")
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("rows must sum to 1 within 1e-9")
    return probs


def collapse(path: str, alphabet: CtcAlphabet) -> str:
    """Merge consecutive duplicates, then drop blanks.

    "AAAB" -> "AB"; with '-' as blank, "AA-AB" -> "AAB".
    """
    out = []
    prev = None
    for ch in path:
        if ch != alphabet.blank_char and ch not in alphabet.symbols:
            raise InvalidSymbol(f"{ch!r} not in alphabet")
        if ch != prev and ch != alphabet.blank_char:
            out.append(ch)
        prev = ch
    return "".join(out)


def _collapse_ids(ids, blank: int) -> tuple[int, ...]:
    out = []
    prev = -1
    for i in ids:
        if i != prev and i != blank:
            out.append(i)
        prev = i
    return tuple(out)


def required_timesteps(label: str) -> int:
    """Minimum T that can emit the label: its length plus one blank per
    adjacent duplicate pair."""
    dups = sum(1 for a, b in zip(label, label[1:]) if a == b)
    return len(label) + dups


def _extended(ids: list[int], blank: int) -> tuple[np.ndarray, np.ndarray]:
    """Blank-interleaved label and the mask of positions reachable by a
    skip from two back (non-blank and different from that symbol)."""
    ext = np.full(2 * len(ids) + 1, blank, dtype=np.int64)
    ext[1::2] = ids
    skip = np.zeros(len(ext), dtype=bool)
    for s in range(2, len(ext)):
        skip[s] = ext[s] != blank and ext[s] != ext[s - 2]
    return ext, skip


def _log_forward(logp: np.ndarray, ext: np.ndarray, skip: np.ndarray) -> np.ndarray:
    T = logp.shape[0]
    S = len(ext)
    la = np.full((T, S), NEG_INF)
    la[0, 0] = logp[0, ext[0]]
    if S > 1:
        la[0, 1] = logp[0, ext[1]]
    for t in range(1, T):
        prev = la[t - 1]
        acc = prev.copy()
        acc[1:] = np.logaddexp(acc[1:], prev[:-1])
        acc[skip] = np.logaddexp(acc[skip], prev[np.flatnonzero(skip) - 2])
        la[t] = acc + logp[t, ext]
    return la


def _log_backward(logp: np.ndarray, ext: np.ndarray, skip: np.ndarray) -> np.ndarray:
    # beta excludes the emission at t, so alpha_t * beta_t sums to p(Y|X)
    # at every t without double counting.
    T = logp.shape[0]
    S = len(ext)
    lb = np.full((T, S), NEG_INF)
    lb[T - 1, S - 1] = 0.0
    if S > 1:
        lb[T - 1, S - 2] = 0.0
    for t in range(T - 2, -1, -1):
        nxt = lb[t + 1] + logp[t + 1, ext]
        acc = nxt.copy()
        acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
        skip_from = np.flatnonzero(skip) - 2
        acc[skip_from] = np.logaddexp(acc[skip_from], nxt[skip_from + 2])
        lb[t] = acc
    return lb


def _log_total(la: np.ndarray) -> float:
    S = la.shape[1]
    if S == 1:
        return float(la[-1, 0])
    return float(np.logaddexp(la[-1, S - 1], la[-1, S - 2]))


def ctc_log_prob(probs: np.ndarray, label: str, alphabet: CtcAlphabet) -> float:
    """ln of the summed probability of every path collapsing to label.

    Returns -inf for labels that cannot fit in T timesteps.
    """
    probs = validate_prob_matrix(probs, alphabet.num_classes)
    ids = alphabet.label_ids(label)
    if probs.shape[0] < required_timesteps(label):
        return NEG_INF
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    ext, skip = _extended(ids, alphabet.blank_index)
    return _log_total(_log_forward(logp, ext, skip))


@dataclass
class CtcLossResult:
    neg_log_prob: float
    grad_wrt_logits: np.ndarray


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def ctc_loss_and_grad(
    logits: np.ndarray, label: str, alphabet: CtcAlphabet
) -> CtcLossResult:
    """Negative log-likelihood of label under softmax(logits) and its
    analytic gradient with respect to the logits.

    grad[t, k] = softmax(logits)[t, k] - (sum of alpha*beta over extended
    positions labeled k) / p(Y|X).
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[1] != alphabet.num_classes:
        raise ValueError(f"expected T x {alphabet.num_classes} logits, got {logits.shape}")
    ids = alphabet.label_ids(label)
    T = logits.shape[0]
    if T < required_timesteps(label):
        raise InfeasibleLabel(
            f"label {label!r} needs {required_timesteps(label)} timesteps, model emits {T}"
        )
    lsm = _log_softmax(logits)
    ext, skip = _extended(ids, alphabet.blank_index)
    la = _log_forward(lsm, ext, skip)
    lb = _log_backward(lsm, ext, skip)
    log_p = _log_total(la)

    occ = la + lb  # (T, S) log alpha*beta
    log_gamma = np.full((T, alphabet.num_classes), NEG_INF)
    for k in np.unique(ext):
        cols = occ[:, ext == k]
        m = cols.max(axis=1)
        safe = m > NEG_INF
        g = np.full(T, NEG_INF)
        g[safe] = m[safe] + np.log(
            np.exp(cols[safe] - m[safe, None]).sum(axis=1)
        )
        log_gamma[:, k] = g
    grad = np.exp(lsm) - np.exp(log_gamma - log_p)
    return CtcLossResult(neg_log_prob=-log_p, grad_wrt_logits=grad)


def best_path_decode(probs: np.ndarray, alphabet: CtcAlphabet) -> str:
    """Collapse of the per-timestep argmax (ties to the lowest class)."""
    probs = validate_prob_matrix(probs, alphabet.num_classes)
    ids = np.argmax(probs, axis=1)
    return alphabet.string(_collapse_ids(ids, alphabet.blank_index))


@dataclass
class BeamSearchResult:
    best: str
    beams: list[tuple[str, float]]


def beam_search_decode(
    probs: np.ndarray, alphabet: CtcAlphabet, beam_width: int = 10
) -> BeamSearchResult:
    """Prefix beam search with per-prefix blank/non-blank accumulators.

    Identical prefixes reached along different paths are merged by summing
    probabilities before pruning to the beam_width best. Ties are broken
    toward the lexicographically smallest prefix (by class index). With
    beam_width at least the number of reachable prefixes the result is the
    exact posterior argmax over labelings.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    probs = validate_prob_matrix(probs, alphabet.num_classes)
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    blank = alphabet.blank_index
    nsym = len(alphabet.symbols)

    # prefix (tuple of class ids) -> [log p ending in blank, log p ending in symbol]
    beams: dict[tuple[int, ...], list[float]] = {(): [0.0, NEG_INF]}
    for t in range(probs.shape[0]):
        cand: dict[tuple[int, ...], list[float]] = defaultdict(lambda: [NEG_INF, NEG_INF])
        for prefix, (pb, pnb) in beams.items():
            total = np.logaddexp(pb, pnb)
            entry = cand[prefix]
            entry[0] = np.logaddexp(entry[0], total + logp[t, blank])
            if prefix:
                # same symbol again without a separating blank extends the
                # existing final symbol, not the prefix
                entry[1] = np.logaddexp(entry[1], pnb + logp[t, prefix[-1]])
            for k in range(nsym):
                grown = cand[prefix + (k,)]
                src = pb if prefix and k == prefix[-1] else total
                grown[1] = np.logaddexp(grown[1], src + logp[t, k])
        # drop unreachable prefixes (zero mass on both accumulators) so the
        # beam never wastes slots on them and the output lists only labels
        # with positive probability
        ranked = sorted(
            (
                (prefix, acc)
                for prefix, acc in cand.items()
                if acc[0] > NEG_INF or acc[1] > NEG_INF
            ),
            key=lambda kv: (-np.logaddexp(kv[1][0], kv[1][1]), kv[0]),
        )
        beams = dict(ranked[:beam_width])

    order = sorted(beams.items(), key=lambda kv: (-np.logaddexp(kv[1][0], kv[1][1]), kv[0]))
    scored = [
        (alphabet.string(prefix), float(np.exp(np.logaddexp(pb, pnb))))
        for prefix, (pb, pnb) in order
    ]
    return BeamSearchResult(best=scored[0][0], beams=scored)


def brute_force_label_posterior(
    probs: np.ndarray, alphabet: CtcAlphabet, max_len: int | None = None
) -> dict[str, float]:
    """Exact label posterior by enumerating every path (test oracle).

    Guarded to (|symbols|+1)^T <= 1e6. Probabilities over all labels sum
    to 1 (law of total probability) when max_len is None.
    """
    probs = validate_prob_matrix(probs, alphabet.num_classes)
    T, C = probs.shape
    if C**T > _ENUM_GUARD:
        raise TooLarge(f"{C}^{T} paths exceed the enumeration guard")
    blank = alphabet.blank_index
    acc: dict[tuple[int, ...], float] = defaultdict(float)
    for path in itertools.product(range(C), repeat=T):
        p = 1.0
        for t, k in enumerate(path):
            p *= probs[t, k]
        acc[_collapse_ids(path, blank)] += p
    out = {}
    for ids, p in acc.items():
        if max_len is None or len(ids) <= max_len:
            out[alphabet.string(ids)] = p
    return out


_HEADER_RE = re.compile(r"^#\s*symbols=(\S*)\s+blank=last\s*$")


def save_prob_matrix(path: str | Path, probs: np.ndarray, alphabet: CtcAlphabet) -> None:
    """TSV export: header `# symbols=<...> blank=last`, one row per step."""
    probs = validate_prob_matrix(probs, alphabet.num_classes)
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"# symbols={''.join(alphabet.symbols)} blank=last\n")
        for row in probs:
            f.write("\t".join(format(v, ".17g") for v in row) + "\n")


def load_prob_matrix(path: str | Path) -> tuple[np.ndarray, CtcAlphabet]:
    path = Path(path)
    lines = path.read_text("utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise FormatError(f"{path}: missing '# symbols=<...> blank=last' header")
    alphabet = from_string(m.group(1))
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split("\t")])
        except ValueError:
            raise FormatError(f"{path}:{i}: non-numeric cell") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    probs = np.asarray(rows, dtype=np.float64)
    try:
        probs = validate_prob_matrix(probs, alphabet.num_classes)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None
    return probs, alphabet
