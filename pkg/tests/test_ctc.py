"""CTC engine: forward/backward log-prob vs path enumeration, analytic
gradients vs central differences, decoders, and prob-matrix IO."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phosc.ctc import (
    BeamSearchResult,
    CtcAlphabet,
    beam_search_decode,
    best_path_decode,
    brute_force_label_posterior,
    collapse,
    ctc_log_prob,
    ctc_loss_and_grad,
    from_string,
    load_prob_matrix,
    required_timesteps,
    save_prob_matrix,
    validate_prob_matrix,
)
from phosc.errors import (
    FormatError,
    InfeasibleLabel,
    InvalidSymbol,
    TooLarge,
)

AB = from_string("ab")


def random_probs(rng, T, C):
    m = rng.random((T, C)) + 1e-3
    return m / m.sum(axis=1, keepdims=True)


def all_labels(symbols, max_len):
    out = [""]
    frontier = [""]
    for _ in range(max_len):
        frontier = [p + s for p in frontier for s in symbols]
        out.extend(frontier)
    return out


# ---------------------------------------------------------------------------
# alphabet and path collapse


def test_alphabet_blank_is_last_class():
    assert AB.num_classes == 3
    assert AB.blank_index == 2
    assert AB.index("a") == 0
    assert AB.index(AB.blank_char) == 2
    assert AB.label_ids("ba") == [1, 0]
    assert AB.string((1, 0)) == "ba"


def test_alphabet_rejects_bad_symbols():
    with pytest.raises(InvalidSymbol):
        AB.index("z")
    with pytest.raises(InvalidSymbol):
        AB.label_ids("a-b")  # blank is not a label symbol
    with pytest.raises(ValueError):
        CtcAlphabet(("a", "a"))
    with pytest.raises(ValueError):
        CtcAlphabet(("a", "-"), blank_char="-")


def test_collapse_reference_examples():
    alpha = from_string("AB")
    assert collapse("AAAB", alpha) == "AB"
    assert collapse("AA-AB", alpha) == "AAB"
    assert collapse("----", alpha) == ""
    assert collapse("-A-A-", alpha) == "AA"


def test_collapse_rejects_foreign_symbols():
    with pytest.raises(InvalidSymbol):
        collapse("ax", AB)


def reference_collapse(path: str, blank: str) -> str:
    """Independent one-liner oracle: merge runs, then drop blanks."""
    return "".join(ch for ch, _ in itertools.groupby(path) if ch != blank)


@given(st.lists(st.sampled_from(list("ab-")), min_size=0, max_size=12))
@settings(max_examples=300)
def test_collapse_matches_reference_oracle(chars):
    path = "".join(chars)
    once = collapse(path, AB)
    assert once == reference_collapse(path, "-")
    # output is always blank-free
    assert "-" not in once
    # adjacent duplicates may survive only when they were blank-separated
    # in the input, so a second application merges exactly those runs
    assert collapse(once, AB) == "".join(ch for ch, _ in itertools.groupby(once))
    # on blank-free inputs whose runs are already merged, collapse is the
    # identity, hence idempotent from the second application onward
    twice = collapse(once, AB)
    assert collapse(twice, AB) == twice


def test_required_timesteps_counts_adjacent_duplicates():
    assert required_timesteps("") == 0
    assert required_timesteps("ab") == 2
    assert required_timesteps("aa") == 3
    assert required_timesteps("aabb") == 6
    assert required_timesteps("aba") == 3


# ---------------------------------------------------------------------------
# forward probability vs brute-force enumeration


def test_log_prob_matches_enumeration_exhaustively():
    rng = np.random.default_rng(0)
    for symbols in ("a", "ab"):
        alpha = from_string(symbols)
        for T in (1, 2, 3, 4):
            probs = random_probs(rng, T, alpha.num_classes)
            oracle = brute_force_label_posterior(probs, alpha)
            for label in all_labels(symbols, 3):
                got = np.exp(ctc_log_prob(probs, label, alpha))
                want = oracle.get(label, 0.0)
                assert got == pytest.approx(want, abs=1e-12)


def test_posterior_sums_to_one():
    rng = np.random.default_rng(1)
    alpha = from_string("abc")
    probs = random_probs(rng, 5, alpha.num_classes)
    oracle = brute_force_label_posterior(probs, alpha)
    assert sum(oracle.values()) == pytest.approx(1.0, abs=1e-12)


def test_empty_label_is_all_blank_path():
    rng = np.random.default_rng(2)
    probs = random_probs(rng, 4, 3)
    want = np.log(probs[:, AB.blank_index]).sum()
    assert ctc_log_prob(probs, "", AB) == pytest.approx(want, abs=1e-12)


def test_infeasible_labels_get_zero_probability():
    rng = np.random.default_rng(3)
    probs = random_probs(rng, 2, 3)
    assert ctc_log_prob(probs, "aab", AB) == -np.inf  # needs 4 steps
    assert ctc_log_prob(probs, "aa", AB) == -np.inf  # needs 3 steps
    assert np.isfinite(ctc_log_prob(probs, "ab", AB))


def test_brute_force_guard():
    alpha = from_string("abcdefghij")
    probs = np.full((7, 11), 1.0 / 11)
    with pytest.raises(TooLarge):
        brute_force_label_posterior(probs, alpha)


def test_validate_prob_matrix_errors():
    with pytest.raises(ValueError):
        validate_prob_matrix(np.array([[0.5, 0.6]]))  # row sum != 1
    with pytest.raises(ValueError):
        validate_prob_matrix(np.array([[1.2, -0.2]]))  # negative entry
    with pytest.raises(ValueError):
        validate_prob_matrix(np.ones((2, 2)) * 0.5, num_classes=3)
    with pytest.raises(ValueError):
        validate_prob_matrix(np.ones(4))  # not 2-D


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25)
def test_log_prob_never_exceeds_zero(seed):
    rng = np.random.default_rng(seed)
    probs = random_probs(rng, 4, 3)
    lp = ctc_log_prob(probs, "ab", AB)
    assert lp <= 0.0


# ---------------------------------------------------------------------------
# loss + gradient


def test_loss_matches_log_prob():
    rng = np.random.default_rng(4)
    logits = rng.normal(size=(5, 3))
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    res = ctc_loss_and_grad(logits, "ab", AB)
    assert res.neg_log_prob == pytest.approx(-ctc_log_prob(probs, "ab", AB), abs=1e-12)


def test_loss_rejects_infeasible_label():
    rng = np.random.default_rng(5)
    with pytest.raises(InfeasibleLabel):
        ctc_loss_and_grad(rng.normal(size=(2, 3)), "aa", AB)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(6)
    eps = 1e-5
    labels = ["a", "ab", "aa", "aba", "bb", ""]
    worst = 0.0
    for label in labels:
        T = max(required_timesteps(label), 1) + 2
        logits = rng.normal(size=(T, 3))
        res = ctc_loss_and_grad(logits, label, AB)
        for t in range(T):
            for k in range(3):
                bump = logits.copy()
                bump[t, k] += eps
                up = ctc_loss_and_grad(bump, label, AB).neg_log_prob
                bump[t, k] -= 2 * eps
                dn = ctc_loss_and_grad(bump, label, AB).neg_log_prob
                num = (up - dn) / (2 * eps)
                ana = res.grad_wrt_logits[t, k]
                denom = max(abs(num), abs(ana), 1e-8)
                worst = max(worst, abs(num - ana) / denom)
    assert worst <= 1e-6


def test_gradient_rows_sum_to_zero():
    # softmax precedes the loss, so shifting a logit row by a constant
    # cannot change it: each row of the gradient must sum to zero
    rng = np.random.default_rng(7)
    logits = rng.normal(size=(6, 3))
    res = ctc_loss_and_grad(logits, "ab", AB)
    assert np.allclose(res.grad_wrt_logits.sum(axis=1), 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# decoders


def test_best_path_known_matrix():
    # argmax sequence a a - b b -> "ab"
    probs = np.array(
        [
            [0.8, 0.1, 0.1],
            [0.6, 0.2, 0.2],
            [0.1, 0.2, 0.7],
            [0.2, 0.7, 0.1],
            [0.3, 0.5, 0.2],
        ]
    )
    assert best_path_decode(probs, AB) == "ab"


def test_best_path_tie_goes_to_lowest_class():
    probs = np.full((2, 3), 1.0 / 3)
    # all classes tie; argmax picks class 0 ("a") at both steps
    assert best_path_decode(probs, AB) == "a"


def test_beam_equals_enumeration_at_saturation():
    rng = np.random.default_rng(8)
    alpha = from_string("ab")
    for T in (2, 3, 4):
        width = alpha.num_classes**T
        for _ in range(25):
            probs = random_probs(rng, T, alpha.num_classes)
            oracle = brute_force_label_posterior(probs, alpha)
            best_label = min(oracle.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            result = beam_search_decode(probs, alpha, beam_width=width)
            assert result.best == best_label
            # reported beam probabilities are the exact posteriors
            for label, p in result.beams:
                assert p == pytest.approx(oracle[label], abs=1e-12)


def test_beam_probabilities_sorted_descending():
    rng = np.random.default_rng(9)
    probs = random_probs(rng, 4, 3)
    result = beam_search_decode(probs, AB, beam_width=5)
    ps = [p for _, p in result.beams]
    assert ps == sorted(ps, reverse=True)
    assert len(result.beams) <= 5
    assert isinstance(result, BeamSearchResult)


def test_beam_width_one_and_validation():
    rng = np.random.default_rng(10)
    probs = random_probs(rng, 3, 3)
    result = beam_search_decode(probs, AB, beam_width=1)
    assert len(result.beams) == 1
    with pytest.raises(ValueError):
        beam_search_decode(probs, AB, beam_width=0)


def test_beam_merges_repeat_symbol_paths():
    # a matrix where "a" mass is split between (a,-,a) style paths; merging
    # must credit "aa" only through a separating blank
    probs = np.array([[0.6, 0.0, 0.4], [0.1, 0.0, 0.9], [0.6, 0.0, 0.4]])
    oracle = brute_force_label_posterior(probs, AB)
    result = beam_search_decode(probs, AB, beam_width=27)
    byname = dict(result.beams)
    for label in ("", "a", "aa"):
        assert byname[label] == pytest.approx(oracle[label], abs=1e-12)


# ---------------------------------------------------------------------------
# prob-matrix file format


def test_prob_matrix_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    probs = random_probs(rng, 6, 3)
    path = tmp_path / "m.tsv"
    save_prob_matrix(path, probs, AB)
    again, alpha = load_prob_matrix(path)
    assert np.array_equal(again, probs)  # %.17g is lossless for float64
    assert alpha.symbols == AB.symbols


def test_prob_matrix_format_errors(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("0.5\t0.5\n")  # no header
    with pytest.raises(FormatError):
        load_prob_matrix(path)
    path.write_text("# symbols=ab blank=first\n0.3\t0.3\t0.4\n")
    with pytest.raises(FormatError):
        load_prob_matrix(path)
    path.write_text("# symbols=ab blank=last\n0.3\t0.7\n")  # wrong arity
    with pytest.raises(FormatError):
        load_prob_matrix(path)
    path.write_text("# symbols=ab blank=last\n")  # no rows
    with pytest.raises(FormatError):
        load_prob_matrix(path)
    path.write_text("# symbols=ab blank=last\n0.3\tx\t0.4\n")
    with pytest.raises(FormatError):
        load_prob_matrix(path)
