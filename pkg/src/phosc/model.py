"""Model variants, losses, training loops, conv-weight transfer and
evaluation.

Three variants share one conv trunk shape:
 - phoscnet: trunk + SPP feeding two dense heads; the PHOC head is
   trained with per-bit binary cross-entropy on logits, the PHOS head
   with mean squared error behind a final relu. Joint loss is
   lambda_c * L_phoc + lambda_s * L_phos.
 - ctc: trunk, height collapse (width becomes time), two stacked BiLSTM
   layers and a dense layer to per-class logits, trained with the CTC
   negative log-likelihood.
 - ctc_p: the ctc variant whose conv weights are initialized from a
   trained phoscnet checkpoint (bitwise copy of the trunk convs).

Training is plain Adam with decoupled weight decay, seeded shuffling,
reduce-on-plateau learning rate (halve after `patience` epochs without
validation improvement, stop when a third reduction would be needed) and
best-validation checkpointing. All randomness descends from the run seed.
"""

from __future__ import annotations

import json
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .ctc import CtcAlphabet, beam_search_decode, best_path_decode, ctc_loss_and_grad
from .errors import DivergedLoss, EmptyDataset, SpecMismatch
from .matcher import Lexicon, gzsl_predict, zsl_predict
from .netcore import (
    ActivationSpec,
    BiLstmSpec,
    Checkpoint,
    CollapseHeightSpec,
    ConvSpec,
    DenseSpec,
    MaxPoolSpec,
    Network,
    SppSpec,
    adam_init,
    adam_step,
    save_checkpoint,
)
from .signature import DEFAULT_ALPHABET, PhocConfig, PhosConfig, phoc_encode, phos_encode
from .synthdata import images_to_float, load_corpus

VARIANTS = ("phoscnet", "ctc", "ctc_p")


@dataclass(frozen=True)
class ArchParams:
    conv_channels: tuple[int, int, int] = (16, 32, 48)
    spp_levels: tuple[int, ...] = (1, 2, 4)
    head_hidden: int = 256
    lstm_hidden: int = 128
    lstm_layers: int = 2

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(self.conv_channels))
        object.__setattr__(self, "spp_levels", tuple(self.spp_levels))
        if len(self.conv_channels) != 3:
            raise ValueError("conv_channels must list three stages")
        if self.lstm_layers < 1:
            raise ValueError("need at least one recurrent layer")


@dataclass(frozen=True)
class TrainParams:
    lr: float = 1e-4
    weight_decay: float = 5e-5
    batch_size: int = 16
    max_epochs: int = 40
    lambda_c: float = 1.0
    lambda_s: float = 4.5
    patience: int = 2
    lr_factor: float = 0.5
    max_lr_reductions: int = 2
    seed: int = 0


def _net_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(tag)]).generate_state(1)[0])


def _trunk_specs(arch: ArchParams) -> list:
    c1, c2, c3 = arch.conv_channels
    return [
        ConvSpec(1, c1),
        ActivationSpec("relu"),
        MaxPoolSpec(2),
        ConvSpec(c1, c2),
        ActivationSpec("relu"),
        MaxPoolSpec(2),
        ConvSpec(c2, c3),
        ActivationSpec("relu"),
    ]


def build_phoscnet(
    arch: ArchParams,
    phoc_dim: int,
    phos_dim: int,
    input_shape=(1, 50, 250),
    seed: int = 0,
) -> dict[str, Network]:
    trunk = Network(
        _trunk_specs(arch) + [SppSpec(arch.spp_levels)], input_shape, _net_seed(seed, 1)
    )
    feat = trunk.output_shape[0]
    phoc_head = Network(
        [
            DenseSpec(feat, arch.head_hidden),
            ActivationSpec("relu"),
            DenseSpec(arch.head_hidden, phoc_dim),  # logits; sigmoid lives in the loss
        ],
        (feat,),
        _net_seed(seed, 2),
    )
    phos_head = Network(
        [
            DenseSpec(feat, arch.head_hidden),
            ActivationSpec("relu"),
            DenseSpec(arch.head_hidden, phos_dim),
            ActivationSpec("relu"),
        ],
        (feat,),
        _net_seed(seed, 3),
    )
    return {"trunk": trunk, "phoc": phoc_head, "phos": phos_head}


def build_ctc_net(
    arch: ArchParams,
    num_classes: int,
    input_shape=(1, 50, 250),
    seed: int = 0,
) -> dict[str, Network]:
    trunk = Network(_trunk_specs(arch), input_shape, _net_seed(seed, 1))
    c3, _, _ = trunk.output_shape
    head_specs = [CollapseHeightSpec()]
    in_feat = c3
    for _ in range(arch.lstm_layers):
        head_specs.append(BiLstmSpec(in_feat, arch.lstm_hidden))
        in_feat = 2 * arch.lstm_hidden
    head_specs.append(DenseSpec(in_feat, num_classes))
    head = Network(head_specs, trunk.output_shape, _net_seed(seed, 4))
    return {"trunk": trunk, "head": head}


# ---------------------------------------------------------------------------
# losses


def bce_with_logits(logits: np.ndarray, targets: np.ndarray):
    """Element-mean binary cross-entropy on logits; returns (loss, dlogits)."""
    z = logits
    y = targets
    loss = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    sig = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    return float(loss.mean()), (sig - y) / z.size


def mse(pred: np.ndarray, targets: np.ndarray):
    """Element-mean squared error; returns (loss, dpred)."""
    diff = pred - targets
    return float((diff * diff).mean()), 2.0 * diff / diff.size


def phosc_loss(phoc_logits, phos_pred, phoc_t, phos_t, lambda_c: float, lambda_s: float):
    """Joint loss lambda_c*BCE + lambda_s*MSE; returns (total, lc, ls, dC, dS)."""
    lc, dc = bce_with_logits(phoc_logits, phoc_t)
    ls, ds = mse(phos_pred, phos_t)
    return lambda_c * lc + lambda_s * ls, lc, ls, lambda_c * dc, lambda_s * ds


def ctc_batch_loss(logits: np.ndarray, labels, alphabet: CtcAlphabet):
    """Mean per-sample CTC negative log-likelihood over a batch of
    (N, T, C) logits; returns (loss, dlogits)."""
    N = logits.shape[0]
    if N != len(labels):
        raise ValueError("logit batch and label count differ")
    grad = np.empty_like(logits)
    total = 0.0
    for i in range(N):
        res = ctc_loss_and_grad(logits[i], labels[i], alphabet)
        total += res.neg_log_prob
        grad[i] = res.grad_wrt_logits
    return total / N, grad / N


# ---------------------------------------------------------------------------
# targets and batching


def signature_targets(labels, phoc_cfg: PhocConfig, phos_cfg: PhosConfig):
    """Per-sample PHOC/PHOS target matrices, encoding each distinct word once."""
    cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for w in labels:
        if w not in cache:
            cache[w] = (phoc_encode(w, phoc_cfg), phos_encode(w, phos_cfg))
    phoc_t = np.stack([cache[w][0] for w in labels])
    phos_t = np.stack([cache[w][1] for w in labels])
    return phoc_t, phos_t


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for i in range(0, n, batch_size):
        yield order[i : i + batch_size]


def _merged_params(nets: dict[str, Network]) -> dict[str, np.ndarray]:
    # live references into the layers; must be collected after any
    # set_params/transfer calls (those replace the arrays)
    out = {}
    for net_name, net in nets.items():
        for pname, arr in net.params.items():
            out[f"{net_name}:{pname}"] = arr
    return out


def _merge_grads(grads_by_net: dict[str, dict[str, np.ndarray]]) -> dict[str, np.ndarray]:
    out = {}
    for net_name, grads in grads_by_net.items():
        for pname, g in grads.items():
            out[f"{net_name}:{pname}"] = g
    return out


class PlateauScheduler:
    """Halve the rate after `patience` epochs without improvement; request
    a stop when one more reduction than allowed would be needed."""

    def __init__(self, lr: float, factor: float, patience: int, max_reductions: int):
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.max_reductions = max_reductions
        self.best = math.inf
        self.bad_epochs = 0
        self.reductions = 0

    def update(self, val_metric: float) -> tuple[bool, bool]:
        """Returns (improved, should_stop)."""
        if val_metric < self.best:
            self.best = val_metric
            self.bad_epochs = 0
            return True, False
        self.bad_epochs += 1
        if self.bad_epochs > self.patience:
            if self.reductions >= self.max_reductions:
                return False, True
            self.reductions += 1
            self.lr *= self.factor
            self.bad_epochs = 0
        return False, False


@dataclass
class TrainSummary:
    variant: str
    epochs_run: int
    best_epoch: int
    best_val: float
    final_lr: float
    checkpoint: str
    log: str

    def to_json_dict(self) -> dict:
        return {
            "variant": self.variant,
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "best_val": self.best_val,
            "final_lr": self.final_lr,
            "checkpoint": self.checkpoint,
            "log": self.log,
        }


# ---------------------------------------------------------------------------
# training


def train_phoscnet(
    corpus_dir,
    workdir,
    arch: ArchParams | None = None,
    train: TrainParams | None = None,
    phoc_cfg: PhocConfig | None = None,
    phos_cfg: PhosConfig | None = None,
    checkpoint_name: str = "phoscnet.ckpt",
) -> TrainSummary:
    arch = arch or ArchParams()
    train = train or TrainParams()
    phoc_cfg = phoc_cfg or PhocConfig()
    phos_cfg = phos_cfg or PhosConfig()
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    data = load_corpus(corpus_dir, ("train", "val"))
    x_train, labels_train = data["train"]
    x_val, labels_val = data["val"]
    if len(labels_train) == 0:
        raise EmptyDataset("no training images")
    ct_train, st_train = signature_targets(labels_train, phoc_cfg, phos_cfg)
    ct_val, st_val = signature_targets(labels_val, phoc_cfg, phos_cfg)

    nets = build_phoscnet(
        arch, phoc_cfg.vector_length, phos_cfg.vector_length, seed=train.seed
    )
    params = _merged_params(nets)
    state = adam_init(params)
    sched = PlateauScheduler(train.lr, train.lr_factor, train.patience, train.max_lr_reductions)
    ckpt_path = workdir / checkpoint_name
    log_path = workdir / "train_log_phoscnet.jsonl"
    extra = {
        "variant": "phoscnet",
        "phoc_levels": list(phoc_cfg.levels),
        "phos_levels": list(phos_cfg.levels),
        "occupancy_threshold": phoc_cfg.occupancy_threshold,
    }

    def batch_loss(idx, update: bool):
        xb = images_to_float(x_train[idx])
        feats, tc = nets["trunk"].forward(xb)
        c_logits, cc = nets["phoc"].forward(feats)
        s_pred, cs = nets["phos"].forward(feats)
        total, _, _, dc, ds = phosc_loss(
            c_logits, s_pred, ct_train[idx], st_train[idx], train.lambda_c, train.lambda_s
        )
        if not np.isfinite(total):
            raise DivergedLoss(f"training loss is {total}")
        if update:
            dfc, gc = nets["phoc"].backward(dc, cc)
            dfs, gs = nets["phos"].backward(ds, cs)
            _, gt = nets["trunk"].backward(dfc + dfs, tc)
            grads = _merge_grads({"trunk": gt, "phoc": gc, "phos": gs})
            Network.check_finite(grads)
            adam_step(params, grads, state, sched.lr, weight_decay=train.weight_decay)
        return total

    def val_loss():
        total = 0.0
        count = 0
        for i in range(0, len(labels_val), 64):
            sl = slice(i, i + 64)
            xb = images_to_float(x_val[sl])
            feats, _ = nets["trunk"].forward(xb)
            c_logits, _ = nets["phoc"].forward(feats)
            s_pred, _ = nets["phos"].forward(feats)
            t, _, _, _, _ = phosc_loss(
                c_logits, s_pred, ct_val[sl], st_val[sl], train.lambda_c, train.lambda_s
            )
            n = len(ct_val[sl])
            total += t * n
            count += n
        return total / count

    best_epoch = -1
    epochs_run = 0
    with log_path.open("w", encoding="utf-8") as log:
        for epoch in range(train.max_epochs):
            t0 = time.monotonic()
            rng = np.random.default_rng(np.random.SeedSequence([train.seed, 101, epoch]))
            losses = [
                batch_loss(idx, update=True)
                for idx in _batches(len(labels_train), train.batch_size, rng)
            ]
            vm = val_loss()
            improved, stop = sched.update(vm)
            if improved:
                best_epoch = epoch
                save_checkpoint(ckpt_path, nets, alphabet=phoc_cfg.alphabet, extra=extra)
            log.write(
                json.dumps(
                    {
                        "variant": "phoscnet",
                        "epoch": epoch,
                        "train_loss": float(np.mean(losses)),
                        "val_metric": vm,
                        "lr": sched.lr,
                        "seconds": round(time.monotonic() - t0, 3),
                    }
                )
                + "\n"
            )
            log.flush()
            epochs_run = epoch + 1
            if stop:
                break
    return TrainSummary(
        variant="phoscnet",
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        best_val=sched.best,
        final_lr=sched.lr,
        checkpoint=str(ckpt_path),
        log=str(log_path),
    )


def train_ctc(
    corpus_dir,
    workdir,
    arch: ArchParams | None = None,
    train: TrainParams | None = None,
    alphabet: CtcAlphabet | None = None,
    init_from: str | Path | None = None,
    checkpoint_name: str | None = None,
) -> TrainSummary:
    """Train the ctc variant; pass init_from=<phoscnet checkpoint> for the
    pretrained-conv variant (ctc_p)."""
    from .netcore import load_checkpoint

    arch = arch or ArchParams()
    train = train or TrainParams()
    alphabet = alphabet or CtcAlphabet(tuple(DEFAULT_ALPHABET))
    variant = "ctc_p" if init_from else "ctc"
    checkpoint_name = checkpoint_name or f"{variant}.ckpt"
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    data = load_corpus(corpus_dir, ("train", "val"))
    x_train, labels_train = data["train"]
    x_val, labels_val = data["val"]
    if len(labels_train) == 0:
        raise EmptyDataset("no training images")

    nets = build_ctc_net(arch, alphabet.num_classes, seed=train.seed)
    transferred = 0
    if init_from:
        transferred = transfer_conv_weights(load_checkpoint(init_from), nets)
    params = _merged_params(nets)
    state = adam_init(params)
    sched = PlateauScheduler(train.lr, train.lr_factor, train.patience, train.max_lr_reductions)
    ckpt_path = workdir / checkpoint_name
    log_path = workdir / f"train_log_{variant}.jsonl"
    extra = {"variant": variant, "transferred_tensors": transferred}

    def forward_logits(xb):
        feats, tc = nets["trunk"].forward(xb)
        logits, th = nets["head"].forward(feats)
        return logits, tc, th

    def val_cer():
        preds = []
        for i in range(0, len(labels_val), 64):
            xb = images_to_float(x_val[i : i + 64])
            logits, _, _ = forward_logits(xb)
            probs = softmax(logits)
            preds.extend(best_path_decode(probs[j], alphabet) for j in range(len(probs)))
        return metrics.cer(preds, labels_val)

    best_epoch = -1
    epochs_run = 0
    with log_path.open("w", encoding="utf-8") as log:
        for epoch in range(train.max_epochs):
            t0 = time.monotonic()
            rng = np.random.default_rng(np.random.SeedSequence([train.seed, 101, epoch]))
            losses = []
            for idx in _batches(len(labels_train), train.batch_size, rng):
                xb = images_to_float(x_train[idx])
                logits, tc, th = forward_logits(xb)
                loss, dlogits = ctc_batch_loss(
                    logits, [labels_train[i] for i in idx], alphabet
                )
                if not np.isfinite(loss):
                    raise DivergedLoss(f"training loss is {loss}")
                dfeats, gh = nets["head"].backward(dlogits, th)
                _, gt = nets["trunk"].backward(dfeats, tc)
                grads = _merge_grads({"trunk": gt, "head": gh})
                Network.check_finite(grads)
                adam_step(params, grads, state, sched.lr, weight_decay=train.weight_decay)
                losses.append(loss)
            vm = val_cer()
            improved, stop = sched.update(vm)
            if improved:
                best_epoch = epoch
                save_checkpoint(
                    ckpt_path, nets, alphabet="".join(alphabet.symbols), extra=extra
                )
            log.write(
                json.dumps(
                    {
                        "variant": variant,
                        "epoch": epoch,
                        "train_loss": float(np.mean(losses)),
                        "val_metric": vm,
                        "lr": sched.lr,
                        "seconds": round(time.monotonic() - t0, 3),
                    }
                )
                + "\n"
            )
            log.flush()
            epochs_run = epoch + 1
            if stop:
                break
    return TrainSummary(
        variant=variant,
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        best_val=sched.best,
        final_lr=sched.lr,
        checkpoint=str(ckpt_path),
        log=str(log_path),
    )


# ---------------------------------------------------------------------------
# gradient-check closures


def _apply_merged(nets: dict[str, Network], params: dict[str, np.ndarray]) -> None:
    for net_name, net in nets.items():
        prefix = f"{net_name}:"
        net.set_params(
            {k[len(prefix) :]: v for k, v in params.items() if k.startswith(prefix)}
        )


def phoscnet_loss_closure(nets, images_f, phoc_t, phos_t, lambda_c=1.0, lambda_s=4.5):
    """Pure loss-and-grads function of the merged parameter dict, for
    grad_check against the joint phoscnet loss."""

    def fn(params):
        _apply_merged(nets, params)
        feats, tc = nets["trunk"].forward(images_f)
        c_logits, cc = nets["phoc"].forward(feats)
        s_pred, cs = nets["phos"].forward(feats)
        total, _, _, dc, ds = phosc_loss(c_logits, s_pred, phoc_t, phos_t, lambda_c, lambda_s)
        dfc, gc = nets["phoc"].backward(dc, cc)
        dfs, gs = nets["phos"].backward(ds, cs)
        _, gt = nets["trunk"].backward(dfc + dfs, tc)
        return total, _merge_grads({"trunk": gt, "phoc": gc, "phos": gs})

    return fn


def ctc_loss_closure(nets, images_f, labels, alphabet: CtcAlphabet):
    """Pure loss-and-grads function of the merged parameter dict, for
    grad_check against the batch CTC loss."""

    def fn(params):
        _apply_merged(nets, params)
        feats, tc = nets["trunk"].forward(images_f)
        logits, th = nets["head"].forward(feats)
        loss, dlogits = ctc_batch_loss(logits, labels, alphabet)
        dfeats, gh = nets["head"].backward(dlogits, th)
        _, gt = nets["trunk"].backward(dfeats, tc)
        return loss, _merge_grads({"trunk": gt, "head": gh})

    return fn


# ---------------------------------------------------------------------------
# transfer


def transfer_conv_weights(
    src: Checkpoint, dst_nets: dict[str, Network], src_net: str = "trunk", dst_net: str = "trunk"
) -> int:
    """Copy conv parameters over the common leading spec prefix of the two
    trunks. Returns the number of tensors copied; raises SpecMismatch when
    the prefixes share no conv layer or a conv spec differs."""
    if src_net not in src.nets:
        raise SpecMismatch(f"checkpoint has no network named {src_net!r}")
    if dst_net not in dst_nets:
        raise SpecMismatch(f"destination has no network named {dst_net!r}")
    src_specs = src.nets[src_net][0]
    dst = dst_nets[dst_net]
    copied = 0
    for i, (a, b) in enumerate(zip(src_specs, dst.specs)):
        if a != b:
            if isinstance(a, ConvSpec) and isinstance(b, ConvSpec):
                raise SpecMismatch(f"conv layer {i} differs: {a} vs {b}")
            break
        if isinstance(a, ConvSpec):
            for pname in dst.layers[i].params:
                key = f"{src_net}:{i}.{pname}"
                if key not in src.params:
                    raise SpecMismatch(f"checkpoint is missing tensor {key!r}")
                dst.layers[i].params[pname] = src.params[key].copy()
                copied += 1
    if copied == 0:
        raise SpecMismatch("no conv layers in the common prefix; nothing to transfer")
    return copied


# ---------------------------------------------------------------------------
# prediction and evaluation


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))


def predict_signatures(nets: dict[str, Network], images: np.ndarray, batch: int = 64):
    """uint8 images (N,1,H,W) -> predicted [phoc, phos] rows (N, Dc+Ds)."""
    outs = []
    for i in range(0, images.shape[0], batch):
        xb = images_to_float(images[i : i + batch])
        feats, _ = nets["trunk"].forward(xb)
        c_logits, _ = nets["phoc"].forward(feats)
        s_pred, _ = nets["phos"].forward(feats)
        outs.append(np.concatenate([_sigmoid(c_logits), s_pred], axis=1))
    return np.concatenate(outs, axis=0)


def predict_strings(
    nets: dict[str, Network],
    images: np.ndarray,
    alphabet: CtcAlphabet,
    decoder: str = "best_path",
    beam_width: int = 10,
    batch: int = 64,
) -> list[str]:
    if decoder not in ("best_path", "beam"):
        raise ValueError(f"decoder must be 'best_path' or 'beam', got {decoder!r}")
    preds = []
    for i in range(0, images.shape[0], batch):
        xb = images_to_float(images[i : i + batch])
        feats, _ = nets["trunk"].forward(xb)
        logits, _ = nets["head"].forward(feats)
        probs = softmax(logits)
        for j in range(len(probs)):
            if decoder == "best_path":
                preds.append(best_path_decode(probs[j], alphabet))
            else:
                preds.append(beam_search_decode(probs[j], alphabet, beam_width).best)
    return preds


def _per_class(preds, truths) -> dict[str, tuple[int, int]]:
    agg: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for p, t in zip(preds, truths):
        agg[t][1] += 1
        agg[t][0] += int(p == t)
    return {w: (c, n) for w, (c, n) in agg.items()}


def _report(variant, protocol, preds_s, truth_s, preds_u, truth_u) -> metrics.EvalReport:
    preds = list(preds_s) + list(preds_u)
    truths = list(truth_s) + list(truth_u)
    a_s = metrics.top1_accuracy(preds_s, truth_s)
    a_u = metrics.top1_accuracy(preds_u, truth_u)
    return metrics.EvalReport(
        protocol=protocol,
        variant=variant,
        a_u=a_u,
        a_s=a_s,
        h=metrics.harmonic_mean(a_u, a_s),
        cer=metrics.cer(preds, truths),
        cer_sum=metrics.cer_sum(preds, truths),
        per_class=_per_class(preds, truths),
        length_confusion=metrics.length_confusion(preds, truths, normalize=True),
    )


def evaluate_phoscnet(
    nets: dict[str, Network],
    corpus_dir,
    lexicon: Lexicon,
    protocol: str = "zsl",
) -> metrics.EvalReport:
    """Match predicted signatures against the lexicon under zsl or gzsl."""
    if protocol not in ("zsl", "gzsl"):
        raise ValueError(f"protocol must be 'zsl' or 'gzsl', got {protocol!r}")
    data = load_corpus(corpus_dir, ("test_seen", "test_unseen"))
    x_s, truth_s = data["test_seen"]
    x_u, truth_u = data["test_unseen"]
    sig_s = predict_signatures(nets, x_s)
    sig_u = predict_signatures(nets, x_u)
    if protocol == "zsl":
        preds_s = zsl_predict(sig_s, lexicon, "seen")
        preds_u = zsl_predict(sig_u, lexicon, "unseen")
    else:
        preds_s = gzsl_predict(sig_s, lexicon)
        preds_u = gzsl_predict(sig_u, lexicon)
    return _report("phoscnet", protocol, preds_s, truth_s, preds_u, truth_u)


def evaluate_ctc(
    nets: dict[str, Network],
    corpus_dir,
    alphabet: CtcAlphabet,
    variant: str = "ctc",
    decoder: str = "best_path",
    beam_width: int = 10,
) -> metrics.EvalReport:
    """Open-vocabulary string accuracy: a prediction counts only when the
    decoded string equals the label exactly, so seen and unseen words are
    scored by the same rule (protocol reported as zsl)."""
    data = load_corpus(corpus_dir, ("test_seen", "test_unseen"))
    x_s, truth_s = data["test_seen"]
    x_u, truth_u = data["test_unseen"]
    preds_s = predict_strings(nets, x_s, alphabet, decoder, beam_width)
    preds_u = predict_strings(nets, x_u, alphabet, decoder, beam_width)
    return _report(variant, "zsl", preds_s, truth_s, preds_u, truth_u)
