"""Deterministic differentiable compute core.

Everything is plain numpy in float64 with explicit forward caches and
hand-derived backward passes; no autograd. Feature maps are (N, C, H, W),
sequences are (N, T, F). Every layer validates its input shape at network
build time, so a mis-chained architecture fails before any data moves.

Determinism notes:
 - parameter init draws from a single seeded Generator in layer order,
 - max-style layers (pool, SPP, height collapse) record explicit argmax
   indices with first-occurrence tie-breaking, so backward routes each
   gradient to exactly one input cell.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import ClassVar

import numpy as np

from ..errors import DivergedLoss, FormatError, ShapeMismatch, TooSmall


# ---------------------------------------------------------------------------
# layer specs


@dataclass(frozen=True)
class ConvSpec:
    """3x3-style conv, stride 1, zero 'same' padding (kernel must be odd)."""

    kind: ClassVar[str] = "conv"
    in_channels: int
    out_channels: int
    kernel_size: int = 3

    def __post_init__(self):
        if self.kernel_size % 2 != 1 or self.kernel_size < 1:
            raise ValueError("kernel_size must be odd and positive")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")


@dataclass(frozen=True)
class MaxPoolSpec:
    """Non-overlapping size x size max pool; trailing odd row/col dropped."""

    kind: ClassVar[str] = "maxpool"
    size: int = 2

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("pool size must be >= 2")


@dataclass(frozen=True)
class SppSpec:
    """Spatial pyramid max pooling to a fixed-length vector.

    For each level n the map is cut into an n x n grid with boundaries at
    floor(i*H/n) and floor(j*W/n); each cell is max-pooled per channel.
    Output layout is (level, cell-row, cell-col) major with the channel
    fastest, giving C * sum(n^2) features.
    """

    kind: ClassVar[str] = "spp"
    levels: tuple[int, ...] = (1, 2, 4)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels or any(n < 1 for n in self.levels):
            raise ValueError("levels must be positive")


@dataclass(frozen=True)
class DenseSpec:
    kind: ClassVar[str] = "dense"
    in_features: int
    out_features: int

    def __post_init__(self):
        if self.in_features < 1 or self.out_features < 1:
            raise ValueError("feature counts must be positive")


@dataclass(frozen=True)
class ActivationSpec:
    kind: ClassVar[str] = "activation"
    fn: str = "relu"

    def __post_init__(self):
        if self.fn not in ("relu", "sigmoid", "tanh"):
            raise ValueError(f"unknown activation {self.fn!r}")


@dataclass(frozen=True)
class SoftmaxSpec:
    """Row softmax over the last axis."""

    kind: ClassVar[str] = "softmax"


@dataclass(frozen=True)
class BiLstmSpec:
    """Single bidirectional LSTM layer, (N, T, F) -> (N, T, 2*hidden).

    Gate order in the packed 4H axis is i, f, g, o; the forget-gate bias
    initializes to 1.
    """

    kind: ClassVar[str] = "bilstm"
    input_size: int
    hidden_size: int

    def __post_init__(self):
        if self.input_size < 1 or self.hidden_size < 1:
            raise ValueError("sizes must be positive")


@dataclass(frozen=True)
class CollapseHeightSpec:
    """Max over the height axis; width becomes time: (N,C,H,W) -> (N,W,C)."""

    kind: ClassVar[str] = "collapse_height"


SPEC_KINDS = {
    cls.kind: cls
    for cls in (
        ConvSpec,
        MaxPoolSpec,
        SppSpec,
        DenseSpec,
        ActivationSpec,
        SoftmaxSpec,
        BiLstmSpec,
        CollapseHeightSpec,
    )
}

LayerSpec = (
    ConvSpec
    | MaxPoolSpec
    | SppSpec
    | DenseSpec
    | ActivationSpec
    | SoftmaxSpec
    | BiLstmSpec
    | CollapseHeightSpec
)


def spec_to_dict(spec: LayerSpec) -> dict:
    d = {"kind": spec.kind}
    d.update(asdict(spec))
    return d


def spec_from_dict(d: dict) -> LayerSpec:
    d = dict(d)
    kind = d.pop("kind", None)
    cls = SPEC_KINDS.get(kind)
    if cls is None:
        raise FormatError(f"unknown layer kind {kind!r}")
    names = {f.name for f in fields(cls)}
    if set(d) != names:
        raise FormatError(f"{kind}: expected fields {sorted(names)}, got {sorted(d)}")
    for name in ("levels",):
        if name in d:
            d[name] = tuple(d[name])
    return cls(**d)


# ---------------------------------------------------------------------------
# helpers


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape).astype(np.float64)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _im2col(x: np.ndarray, k: int, pad: int) -> np.ndarray:
    # (N, C, H, W) -> (N, C*k*k, H*W) patch matrix for stride-1 same conv
    N, C, H, W = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((N, C, k * k, H, W), dtype=x.dtype)
    i = 0
    for di in range(k):
        for dj in range(k):
            cols[:, :, i] = xp[:, :, di : di + H, dj : dj + W]
            i += 1
    return cols.reshape(N, C * k * k, H * W)


def _col2im(dcols: np.ndarray, shape, k: int, pad: int) -> np.ndarray:
    N, C, H, W = shape
    d = dcols.reshape(N, C, k * k, H, W)
    dxp = np.zeros((N, C, H + 2 * pad, W + 2 * pad), dtype=dcols.dtype)
    i = 0
    for di in range(k):
        for dj in range(k):
            dxp[:, :, di : di + H, dj : dj + W] += d[:, :, i]
            i += 1
    return dxp[:, :, pad : pad + H, pad : pad + W]


def _expect_rank(shape, rank: int, what: str):
    if len(shape) != rank:
        raise ShapeMismatch(f"{what}: expected rank-{rank} input, got shape {tuple(shape)}")


# ---------------------------------------------------------------------------
# layers


class ConvLayer:
    def __init__(self, spec: ConvSpec, rng: np.random.Generator):
        self.spec = spec
        k = spec.kernel_size
        fan_in = spec.in_channels * k * k
        fan_out = spec.out_channels * k * k
        self.params = {
            "w": _glorot(rng, (spec.out_channels, spec.in_channels, k, k), fan_in, fan_out),
            "b": np.zeros(spec.out_channels, dtype=np.float64),
        }

    def out_shape(self, shape):
        _expect_rank(shape, 3, "conv")
        c, h, w = shape
        if c != self.spec.in_channels:
            raise ShapeMismatch(f"conv: expected {self.spec.in_channels} channels, got {c}")
        return (self.spec.out_channels, h, w)

    def forward(self, x):
        N, C, H, W = x.shape
        k = self.spec.kernel_size
        cols = _im2col(x, k, k // 2)
        wmat = self.params["w"].reshape(self.spec.out_channels, -1)
        y = np.matmul(wmat, cols).reshape(N, self.spec.out_channels, H, W)
        y += self.params["b"][None, :, None, None]
        return y, (cols, x.shape)

    def backward(self, dy, cache):
        cols, xshape = cache
        N, C, H, W = xshape
        k = self.spec.kernel_size
        O = self.spec.out_channels
        dy2 = dy.reshape(N, O, H * W)
        wmat = self.params["w"].reshape(O, -1)
        dw = np.matmul(dy2, cols.transpose(0, 2, 1)).sum(axis=0)
        db = dy2.sum(axis=(0, 2))
        dcols = np.matmul(wmat.T[None], dy2)
        dx = _col2im(dcols, xshape, k, k // 2)
        return dx, {"w": dw.reshape(self.params["w"].shape), "b": db}


class MaxPoolLayer:
    def __init__(self, spec: MaxPoolSpec, rng=None):
        self.spec = spec
        self.params = {}

    def out_shape(self, shape):
        _expect_rank(shape, 3, "maxpool")
        c, h, w = shape
        s = self.spec.size
        if h < s or w < s:
            raise TooSmall(f"maxpool: {h}x{w} map smaller than {s}x{s} window")
        return (c, h // s, w // s)

    def forward(self, x):
        N, C, H, W = x.shape
        s = self.spec.size
        H2, W2 = H // s, W // s
        win = (
            x[:, :, : H2 * s, : W2 * s]
            .reshape(N, C, H2, s, W2, s)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(N, C, H2, W2, s * s)
        )
        arg = win.argmax(axis=-1)
        y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
        return y, (arg, x.shape)

    def backward(self, dy, cache):
        arg, xshape = cache
        N, C, H, W = xshape
        s = self.spec.size
        H2, W2 = H // s, W // s
        dwin = np.zeros((N, C, H2, W2, s * s), dtype=dy.dtype)
        np.put_along_axis(dwin, arg[..., None], dy[..., None], axis=-1)
        dx = np.zeros(xshape, dtype=dy.dtype)
        dx[:, :, : H2 * s, : W2 * s] = (
            dwin.reshape(N, C, H2, W2, s, s)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(N, C, H2 * s, W2 * s)
        )
        return dx, {}


class SppLayer:
    def __init__(self, spec: SppSpec, rng=None):
        self.spec = spec
        self.params = {}

    def out_shape(self, shape):
        _expect_rank(shape, 3, "spp")
        c, h, w = shape
        worst = max(self.spec.levels)
        if h < worst or w < worst:
            raise TooSmall(f"spp: {h}x{w} map cannot host a {worst}x{worst} grid")
        return (c * sum(n * n for n in self.spec.levels),)

    def forward(self, x):
        N, C, H, W = x.shape
        feats = []
        cells = []
        for n in self.spec.levels:
            rb = [i * H // n for i in range(n + 1)]
            cb = [j * W // n for j in range(n + 1)]
            for i in range(n):
                for j in range(n):
                    cell = x[:, :, rb[i] : rb[i + 1], cb[j] : cb[j + 1]].reshape(N, C, -1)
                    arg = cell.argmax(axis=-1)
                    feats.append(np.take_along_axis(cell, arg[..., None], axis=-1)[..., 0])
                    cells.append((rb[i], cb[j], rb[i + 1] - rb[i], cb[j + 1] - cb[j], arg))
        y = np.stack(feats, axis=1).reshape(N, -1)
        return y, (cells, x.shape)

    def backward(self, dy, cache):
        cells, xshape = cache
        N, C = xshape[0], xshape[1]
        dy3 = dy.reshape(N, len(cells), C)
        dx = np.zeros(xshape, dtype=dy.dtype)
        for idx, (r0, c0, hh, ww, arg) in enumerate(cells):
            dcell = np.zeros((N, C, hh * ww), dtype=dy.dtype)
            np.put_along_axis(dcell, arg[..., None], dy3[:, idx][..., None], axis=-1)
            dx[:, :, r0 : r0 + hh, c0 : c0 + ww] += dcell.reshape(N, C, hh, ww)
        return dx, {}


class DenseLayer:
    def __init__(self, spec: DenseSpec, rng: np.random.Generator):
        self.spec = spec
        self.params = {
            "w": _glorot(
                rng, (spec.in_features, spec.out_features), spec.in_features, spec.out_features
            ),
            "b": np.zeros(spec.out_features, dtype=np.float64),
        }

    def out_shape(self, shape):
        if not shape:
            raise ShapeMismatch("dense: scalar input")
        if shape[-1] != self.spec.in_features:
            raise ShapeMismatch(
                f"dense: expected {self.spec.in_features} features, got {shape[-1]}"
            )
        return tuple(shape[:-1]) + (self.spec.out_features,)

    def forward(self, x):
        x2 = x.reshape(-1, self.spec.in_features)
        y = x2 @ self.params["w"] + self.params["b"]
        return y.reshape(x.shape[:-1] + (self.spec.out_features,)), (x2, x.shape)

    def backward(self, dy, cache):
        x2, xshape = cache
        dy2 = dy.reshape(-1, self.spec.out_features)
        dw = x2.T @ dy2
        db = dy2.sum(axis=0)
        dx = (dy2 @ self.params["w"].T).reshape(xshape)
        return dx, {"w": dw, "b": db}


class ActivationLayer:
    def __init__(self, spec: ActivationSpec, rng=None):
        self.spec = spec
        self.params = {}

    def out_shape(self, shape):
        return tuple(shape)

    def forward(self, x):
        if self.spec.fn == "relu":
            y = np.maximum(x, 0.0)
            return y, (x > 0)
        if self.spec.fn == "sigmoid":
            y = _sigmoid(x)
            return y, y
        y = np.tanh(x)
        return y, y

    def backward(self, dy, cache):
        if self.spec.fn == "relu":
            return dy * cache, {}
        if self.spec.fn == "sigmoid":
            return dy * cache * (1.0 - cache), {}
        return dy * (1.0 - cache * cache), {}


class SoftmaxLayer:
    def __init__(self, spec: SoftmaxSpec, rng=None):
        self.spec = spec
        self.params = {}

    def out_shape(self, shape):
        if not shape:
            raise ShapeMismatch("softmax: scalar input")
        return tuple(shape)

    def forward(self, x):
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=-1, keepdims=True)
        return y, y

    def backward(self, dy, cache):
        y = cache
        dot = (dy * y).sum(axis=-1, keepdims=True)
        return y * (dy - dot), {}


class BiLstmLayer:
    def __init__(self, spec: BiLstmSpec, rng: np.random.Generator):
        self.spec = spec
        F, H = spec.input_size, spec.hidden_size
        self.params = {}
        for d in ("f", "b"):
            self.params[f"wx_{d}"] = _glorot(rng, (F, 4 * H), F, 4 * H)
            self.params[f"wh_{d}"] = _glorot(rng, (H, 4 * H), H, 4 * H)
            bias = np.zeros(4 * H, dtype=np.float64)
            bias[H : 2 * H] = 1.0  # forget gate starts open
            self.params[f"b_{d}"] = bias

    def out_shape(self, shape):
        _expect_rank(shape, 2, "bilstm")
        t, f = shape
        if f != self.spec.input_size:
            raise ShapeMismatch(f"bilstm: expected {self.spec.input_size} features, got {f}")
        return (t, 2 * self.spec.hidden_size)

    def _run(self, x, d):
        N, T, _ = x.shape
        H = self.spec.hidden_size
        wx, wh, b = self.params[f"wx_{d}"], self.params[f"wh_{d}"], self.params[f"b_{d}"]
        gates = np.empty((T, N, 4 * H))
        cprev = np.empty((T, N, H))
        hprev = np.empty((T, N, H))
        tc = np.empty((T, N, H))
        hs = np.empty((N, T, H))
        h = np.zeros((N, H))
        c = np.zeros((N, H))
        for t in range(T):
            hprev[t] = h
            cprev[t] = c
            z = x[:, t] @ wx + h @ wh + b
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H : 2 * H])
            g = np.tanh(z[:, 2 * H : 3 * H])
            o = _sigmoid(z[:, 3 * H :])
            gates[t] = np.concatenate([i, f, g, o], axis=1)
            c = f * c + i * g
            tc[t] = np.tanh(c)
            h = o * tc[t]
            hs[:, t] = h
        return hs, (gates, cprev, hprev, tc)

    def _run_backward(self, dhs, x, cache, d):
        gates, cprev, hprev, tc = cache
        N, T, _ = x.shape
        H = self.spec.hidden_size
        wx, wh = self.params[f"wx_{d}"], self.params[f"wh_{d}"]
        dwx = np.zeros_like(wx)
        dwh = np.zeros_like(wh)
        db = np.zeros(4 * H)
        dx = np.empty_like(x)
        dh_next = np.zeros((N, H))
        dc_next = np.zeros((N, H))
        for t in range(T - 1, -1, -1):
            i = gates[t][:, :H]
            f = gates[t][:, H : 2 * H]
            g = gates[t][:, 2 * H : 3 * H]
            o = gates[t][:, 3 * H :]
            dh = dhs[:, t] + dh_next
            do = dh * tc[t]
            dc = dh * o * (1.0 - tc[t] * tc[t]) + dc_next
            di = dc * g
            dg = dc * i
            df = dc * cprev[t]
            dc_next = dc * f
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dwx += x[:, t].T @ dz
            dwh += hprev[t].T @ dz
            db += dz.sum(axis=0)
            dx[:, t] = dz @ wx.T
            dh_next = dz @ wh.T
        return dx, dwx, dwh, db

    def forward(self, x):
        hs_f, cache_f = self._run(x, "f")
        hs_b_rev, cache_b = self._run(x[:, ::-1], "b")
        y = np.concatenate([hs_f, hs_b_rev[:, ::-1]], axis=2)
        return y, (x, cache_f, cache_b)

    def backward(self, dy, cache):
        x, cache_f, cache_b = cache
        H = self.spec.hidden_size
        dx_f, dwx_f, dwh_f, db_f = self._run_backward(dy[:, :, :H], x, cache_f, "f")
        xr = x[:, ::-1]
        dx_b_rev, dwx_b, dwh_b, db_b = self._run_backward(
            dy[:, ::-1, H:], xr, cache_b, "b"
        )
        dx = dx_f + dx_b_rev[:, ::-1]
        return dx, {
            "wx_f": dwx_f,
            "wh_f": dwh_f,
            "b_f": db_f,
            "wx_b": dwx_b,
            "wh_b": dwh_b,
            "b_b": db_b,
        }


class CollapseHeightLayer:
    def __init__(self, spec: CollapseHeightSpec, rng=None):
        self.spec = spec
        self.params = {}

    def out_shape(self, shape):
        _expect_rank(shape, 3, "collapse_height")
        c, h, w = shape
        return (w, c)

    def forward(self, x):
        arg = x.argmax(axis=2)  # (N, C, W), first occurrence on ties
        y = np.take_along_axis(x, arg[:, :, None, :], axis=2)[:, :, 0, :]
        return y.transpose(0, 2, 1), (arg, x.shape)

    def backward(self, dy, cache):
        arg, xshape = cache
        dx = np.zeros(xshape, dtype=dy.dtype)
        np.put_along_axis(dx, arg[:, :, None, :], dy.transpose(0, 2, 1)[:, :, None, :], axis=2)
        return dx, {}


_LAYER_CLASSES = {
    ConvSpec: ConvLayer,
    MaxPoolSpec: MaxPoolLayer,
    SppSpec: SppLayer,
    DenseSpec: DenseLayer,
    ActivationSpec: ActivationLayer,
    SoftmaxSpec: SoftmaxLayer,
    BiLstmSpec: BiLstmLayer,
    CollapseHeightSpec: CollapseHeightLayer,
}


# ---------------------------------------------------------------------------
# network


class Network:
    """An ordered layer chain with flat `<index>.<name>` parameter naming.

    The constructor runs the whole shape chain against input_shape (batch
    dimension excluded) so incompatible layers fail immediately.
    """

    def __init__(self, specs, input_shape, seed: int = 0):
        self.specs = tuple(specs)
        self.input_shape = tuple(input_shape)
        self.seed = int(seed)
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        self.layers = []
        shape = self.input_shape
        for idx, spec in enumerate(self.specs):
            cls = _LAYER_CLASSES.get(type(spec))
            if cls is None:
                raise ValueError(f"unknown layer spec {spec!r}")
            layer = cls(spec, rng)
            try:
                shape = layer.out_shape(shape)
            except (ShapeMismatch, TooSmall) as e:
                raise type(e)(f"layer {idx}: {e}") from None
            self.layers.append(layer)
        self.output_shape = shape

    @property
    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for idx, layer in enumerate(self.layers):
            for name, arr in layer.params.items():
                out[f"{idx}.{name}"] = arr
        return out

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        own = self.params
        if set(params) != set(own):
            missing = sorted(set(own) - set(params))
            extra = sorted(set(params) - set(own))
            raise ShapeMismatch(f"parameter names differ (missing {missing}, extra {extra})")
        for name, arr in params.items():
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != own[name].shape:
                raise ShapeMismatch(
                    f"{name}: expected shape {own[name].shape}, got {arr.shape}"
                )
            idx, pname = name.split(".", 1)
            self.layers[int(idx)].params[pname] = arr.copy()

    @property
    def num_params(self) -> int:
        return sum(arr.size for arr in self.params.values())

    def forward(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ShapeMismatch(
                f"expected input shape (N, {', '.join(map(str, self.input_shape))}), "
                f"got {x.shape}"
            )
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, dy: np.ndarray, caches):
        grads = {}
        for idx in range(len(self.layers) - 1, -1, -1):
            dy, layer_grads = self.layers[idx].backward(dy, caches[idx])
            for name, g in layer_grads.items():
                grads[f"{idx}.{name}"] = g
        return dy, grads

    @staticmethod
    def check_finite(arrays) -> None:
        it = arrays.values() if isinstance(arrays, dict) else arrays
        for arr in it:
            if not np.all(np.isfinite(arr)):
                raise DivergedLoss("non-finite value encountered")
