"""Cosine matcher and lexicon: signature modes, duplicate/zero detection,
protocol restriction, tie-breaking, and split-file IO."""

from __future__ import annotations

import numpy as np
import pytest

from phosc.errors import (
    DuplicateSignature,
    EmptyLexicon,
    ParseError,
    ZeroVector,
)
from phosc.matcher import (
    Lexicon,
    build_lexicon,
    cosine_scores,
    gzsl_predict,
    load_split,
    match_words,
    save_split,
    signature_for,
    zsl_predict,
)
from phosc.signature import PhocConfig, PhosConfig, phosc_encode

SEEN = ["cat", "dog", "pen"]
UNSEEN = ["fox", "hut"]


@pytest.fixture(scope="module")
def lex():
    return build_lexicon(SEEN, UNSEEN)


# ---------------------------------------------------------------------------
# lexicon construction


def test_lexicon_sorted_words_and_flags(lex):
    assert lex.words == ("cat", "dog", "fox", "hut", "pen")
    assert lex.seen == (True, True, False, False, True)
    assert lex.matrix.shape == (5, 529)
    assert lex.mode == "phosc"
    assert lex.dim == 529


def test_lexicon_rows_are_true_signatures(lex):
    for i, w in enumerate(lex.words):
        sig = phosc_encode(w, PhosConfig(), PhocConfig()).combined
        assert np.array_equal(lex.matrix[i], sig)


def test_signature_for_modes():
    assert signature_for("cat", PhocConfig(), PhosConfig(), "phoc").shape == (364,)
    assert signature_for("cat", PhocConfig(), PhosConfig(), "phos").shape == (165,)
    assert signature_for("cat", PhocConfig(), PhosConfig(), "phosc").shape == (529,)
    with pytest.raises(ValueError):
        signature_for("cat", PhocConfig(), PhosConfig(), "euclid")


def test_build_lexicon_rejects_overlap_and_empty():
    with pytest.raises(ValueError):
        build_lexicon(["cat"], ["cat", "fox"])
    with pytest.raises(EmptyLexicon):
        build_lexicon([], [])


def test_build_lexicon_rejects_duplicate_signatures():
    # "v" and "x" share identical shape counts in the shipped table (two
    # diagonal strokes), so their phos-only signatures collide
    with pytest.raises(DuplicateSignature):
        build_lexicon(["v"], ["x"], mode="phos")
    # phoc tells them apart, so the combined mode accepts them
    assert build_lexicon(["v"], ["x"], mode="phosc").words == ("v", "x")


def test_restricted(lex):
    seen_only = lex.restricted("seen")
    assert seen_only.words == ("cat", "dog", "pen")
    unseen_only = lex.restricted("unseen")
    assert unseen_only.words == ("fox", "hut")
    assert lex.restricted(None) is lex
    with pytest.raises(ValueError):
        lex.restricted("all")
    with pytest.raises(EmptyLexicon):
        build_lexicon(["cat"], ["fox"]).restricted("seen").restricted("unseen")


def test_lexicon_invariants():
    with pytest.raises(ValueError):
        Lexicon(words=("b", "a"), seen=(True, True), matrix=np.ones((2, 3)), mode="phosc")
    with pytest.raises(ValueError):
        Lexicon(words=("a",), seen=(True, False), matrix=np.ones((1, 3)), mode="phosc")
    with pytest.raises(EmptyLexicon):
        Lexicon(words=(), seen=(), matrix=np.ones((0, 3)), mode="phosc")


# ---------------------------------------------------------------------------
# cosine scores


def test_cosine_scores_manual_check():
    lexicon = Lexicon(
        words=("p", "q"),
        seen=(True, True),
        matrix=np.array([[1.0, 0.0], [1.0, 1.0]]),
        mode="phosc",
    )
    q = np.array([[2.0, 0.0], [0.0, 3.0]])
    scores = cosine_scores(q, lexicon)
    want = np.array([[1.0, 1 / np.sqrt(2)], [0.0, 1 / np.sqrt(2)]])
    assert np.allclose(scores, want, atol=1e-15)


def test_cosine_scale_invariance(lex):
    sig = phosc_encode("cat", PhosConfig(), PhocConfig()).combined
    a = cosine_scores(sig[None, :], lex)
    b = cosine_scores(7.5 * sig[None, :], lex)
    assert np.allclose(a, b, atol=1e-12)


def test_cosine_rejects_zero_query(lex):
    with pytest.raises(ZeroVector):
        cosine_scores(np.zeros((1, lex.dim)), lex)


def test_cosine_rejects_dim_mismatch(lex):
    with pytest.raises(ValueError):
        cosine_scores(np.ones((1, 5)), lex)


# ---------------------------------------------------------------------------
# matching protocols


def test_exact_signature_matches_its_own_word(lex):
    for w in lex.words:
        sig = phosc_encode(w, PhosConfig(), PhocConfig()).combined
        assert match_words(sig[None, :], lex) == [w]


def test_zsl_restricts_to_partition(lex):
    # a seen word's own signature queried under the unseen protocol can
    # only return an unseen word
    sig = phosc_encode("cat", PhosConfig(), PhocConfig()).combined[None, :]
    pred = zsl_predict(sig, lex, "unseen")
    assert pred[0] in UNSEEN
    assert zsl_predict(sig, lex, "seen") == ["cat"]
    with pytest.raises(ValueError):
        zsl_predict(sig, lex, "both")


def test_gzsl_searches_union(lex):
    for w in ("cat", "fox"):
        sig = phosc_encode(w, PhosConfig(), PhocConfig()).combined[None, :]
        assert gzsl_predict(sig, lex) == [w]


def test_tie_breaks_to_lexicographically_smallest():
    # single-letter words have identical phoc structure (2 level-2 bits in
    # disjoint columns), so a query summing two unit signatures ties exactly
    lexicon = build_lexicon(["b", "d"], ["z"], mode="phoc")
    sb = signature_for("b", PhocConfig(), PhosConfig(), "phoc")
    sd = signature_for("d", PhocConfig(), PhosConfig(), "phoc")
    assert np.linalg.norm(sb) == np.linalg.norm(sd)
    q = (sb + sd)[None, :]
    scores = cosine_scores(q, lexicon)
    assert scores[0, 0] == scores[0, 1]  # genuine tie
    assert match_words(q, lexicon) == ["b"]


def test_batch_matching(lex):
    sigs = np.stack(
        [phosc_encode(w, PhosConfig(), PhocConfig()).combined for w in ("pen", "hut")]
    )
    assert match_words(sigs, lex) == ["pen", "hut"]


# ---------------------------------------------------------------------------
# split files


def test_split_roundtrip(tmp_path):
    path = tmp_path / "split.tsv"
    save_split(path, SEEN, UNSEEN)
    seen, unseen = load_split(path)
    assert seen == SEEN
    assert unseen == UNSEEN


def test_split_parse_errors(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("cat\tmaybe\n")
    with pytest.raises(ParseError):
        load_split(path)
    path.write_text("cat seen\n")  # space, not tab
    with pytest.raises(ParseError):
        load_split(path)
