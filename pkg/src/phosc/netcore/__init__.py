"""From-scratch deterministic differentiable compute core."""

from .checkpoint import (
    MAGIC,
    Checkpoint,
    load_checkpoint,
    networks_from_checkpoint,
    save_checkpoint,
)
from .gradcheck import CoordinateCheck, GradCheckReport, grad_check
from .layers import (
    ActivationSpec,
    BiLstmSpec,
    CollapseHeightSpec,
    ConvSpec,
    DenseSpec,
    LayerSpec,
    MaxPoolSpec,
    Network,
    SoftmaxSpec,
    SppSpec,
    spec_from_dict,
    spec_to_dict,
)
from .optim import AdamState, adam_init, adam_step

__all__ = [
    "MAGIC",
    "Checkpoint",
    "load_checkpoint",
    "networks_from_checkpoint",
    "save_checkpoint",
    "CoordinateCheck",
    "GradCheckReport",
    "grad_check",
    "ActivationSpec",
    "BiLstmSpec",
    "CollapseHeightSpec",
    "ConvSpec",
    "DenseSpec",
    "LayerSpec",
    "MaxPoolSpec",
    "Network",
    "SoftmaxSpec",
    "SppSpec",
    "spec_from_dict",
    "spec_to_dict",
    "AdamState",
    "adam_init",
    "adam_step",
]
