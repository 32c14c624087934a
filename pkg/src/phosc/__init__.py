"""phosc: zero-shot word-image recognition on synthetic handwriting.

Word labels are encoded as pyramidal attribute signatures (PHOC occupancy
bits plus PHOS shape counts); recognizers either regress those signatures
and match them against a lexicon by cosine similarity, or emit per-frame
class probabilities decoded with CTC. Everything runs on a from-scratch
deterministic numpy compute core.
"""

from .ctc import (
    BeamSearchResult,
    CtcAlphabet,
    CtcLossResult,
    beam_search_decode,
    best_path_decode,
    brute_force_label_posterior,
    collapse,
    ctc_log_prob,
    ctc_loss_and_grad,
)
from .errors import PhoscError
from .matcher import Lexicon, build_lexicon, gzsl_predict, match_words, zsl_predict
from .metrics import (
    EvalReport,
    cer,
    edit_distance,
    harmonic_mean,
    length_confusion,
    top1_accuracy,
)
from .signature import (
    AttributeSignature,
    PhocConfig,
    PhosConfig,
    ShapeTable,
    default_shape_table,
    phoc_encode,
    phos_encode,
    phosc_encode,
)

__version__ = "1.0.0"

__all__ = [
    "BeamSearchResult",
    "CtcAlphabet",
    "CtcLossResult",
    "beam_search_decode",
    "best_path_decode",
    "brute_force_label_posterior",
    "collapse",
    "ctc_log_prob",
    "ctc_loss_and_grad",
    "PhoscError",
    "Lexicon",
    "build_lexicon",
    "gzsl_predict",
    "match_words",
    "zsl_predict",
    "EvalReport",
    "cer",
    "edit_distance",
    "harmonic_mean",
    "length_confusion",
    "top1_accuracy",
    "AttributeSignature",
    "PhocConfig",
    "PhosConfig",
    "ShapeTable",
    "default_shape_table",
    "phoc_encode",
    "phos_encode",
    "phosc_encode",
    "__version__",
]
