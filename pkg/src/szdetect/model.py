"""The context-window seizure classifier and its analytic gradients.

Per-channel patch sequence -> linear patch projection -> two-layer
convolutional feature extractor over each projected patch vector -> learnable
temporal positional encodings -> pre-norm transformer encoder shared across
channels -> mean pooling over patches -> learnable channel positional
encodings -> multi-head attention across the channel tokens -> mean pooling
-> linear classifier with two logits.

Everything runs in float64 numpy. backward() returns the exact analytic
gradient of the label-smoothed cross-entropy for every parameter tensor;
grad_check() verifies it against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .errors import IndivisibleLength, NonFiniteActivation, ShapeMismatch
from .windowing import WindowSpec

Params = dict[str, np.ndarray]

_LN_EPS = 1e-5
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class ConvSpec:
    """The two-layer feature extractor applied to each projected patch."""

    kernel_sizes: tuple[int, int] = (7, 5)
    channel_widths: tuple[int, int] = (4, 8)
    nonlinearity: str = "gelu"


@dataclass(frozen=True)
class ModelConfig:
    n_channels: int = 18
    patch_len: int = 128
    embed_dim: int = 96
    conv_spec: ConvSpec = field(default_factory=ConvSpec)
    n_encoder_layers: int = 4
    n_heads: int = 4
    ffn_dim: int = 384
    dropout_rate: float = 0.1
    cross_channel_heads: int = 4
    n_classes: int = 2
    window: WindowSpec = field(default_factory=WindowSpec)

    def __post_init__(self):
        if self.window.total_samples % self.patch_len != 0:
            raise ValueError("window samples must divide evenly into patches")
        if self.embed_dim % self.n_heads != 0:
            raise ValueError("embed_dim must be divisible by n_heads")
        if self.embed_dim % self.cross_channel_heads != 0:
            raise ValueError("embed_dim must be divisible by cross_channel_heads")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.conv_spec.nonlinearity != "gelu":
            raise ValueError("only the gelu nonlinearity is supported")

    @property
    def n_patches(self) -> int:
        return self.window.total_samples // self.patch_len

    def to_dict(self) -> dict:
        return {
            "n_channels": self.n_channels,
            "patch_len": self.patch_len,
            "embed_dim": self.embed_dim,
            "conv_kernel_sizes": list(self.conv_spec.kernel_sizes),
            "conv_channel_widths": list(self.conv_spec.channel_widths),
            "conv_nonlinearity": self.conv_spec.nonlinearity,
            "n_encoder_layers": self.n_encoder_layers,
            "n_heads": self.n_heads,
            "ffn_dim": self.ffn_dim,
            "dropout_rate": self.dropout_rate,
            "cross_channel_heads": self.cross_channel_heads,
            "n_classes": self.n_classes,
            "window": self.window.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            n_channels=d["n_channels"],
            patch_len=d["patch_len"],
            embed_dim=d["embed_dim"],
            conv_spec=ConvSpec(
                tuple(d["conv_kernel_sizes"]),
                tuple(d["conv_channel_widths"]),
                d["conv_nonlinearity"],
            ),
            n_encoder_layers=d["n_encoder_layers"],
            n_heads=d["n_heads"],
            ffn_dim=d["ffn_dim"],
            dropout_rate=d["dropout_rate"],
            cross_channel_heads=d["cross_channel_heads"],
            n_classes=d["n_classes"],
            window=WindowSpec.from_dict(d["window"]),
        )


@dataclass
class ForwardOutput:
    logits: np.ndarray  # [B, n_classes]
    probabilities: np.ndarray  # softmax of logits
    channel_attention: np.ndarray | None = None  # [B, heads, C, C]


def expected_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter tensor's shape, determined solely by the config."""
    e, f = cfg.embed_dim, cfg.ffn_dim
    k1, k2 = cfg.conv_spec.kernel_sizes
    c1, c2 = cfg.conv_spec.channel_widths
    shapes: dict[str, tuple[int, ...]] = {
        "patch_proj.w": (e, cfg.patch_len),
        "patch_proj.b": (e,),
        "conv1.w": (c1, 1, k1),
        "conv1.b": (c1,),
        "conv2.w": (c2, c1, k2),
        "conv2.b": (c2,),
        "conv_out.w": (c2,),
        "conv_out.b": (1,),
        "pos_temporal": (cfg.n_patches, e),
        "pos_channel": (cfg.n_channels, e),
    }
    for i in range(cfg.n_encoder_layers):
        p = f"enc{i}."
        shapes[p + "ln1.g"] = (e,)
        shapes[p + "ln1.b"] = (e,)
        for w in ("wq", "wk", "wv", "wo"):
            shapes[p + "attn." + w] = (e, e)
        for b in ("bq", "bk", "bv", "bo"):
            shapes[p + "attn." + b] = (e,)
        shapes[p + "ln2.g"] = (e,)
        shapes[p + "ln2.b"] = (e,)
        shapes[p + "ffn.w1"] = (f, e)
        shapes[p + "ffn.b1"] = (f,)
        shapes[p + "ffn.w2"] = (e, f)
        shapes[p + "ffn.b2"] = (e,)
    shapes["enc_ln.g"] = (e,)
    shapes["enc_ln.b"] = (e,)
    shapes["cross.ln.g"] = (e,)
    shapes["cross.ln.b"] = (e,)
    for w in ("wq", "wk", "wv", "wo"):
        shapes["cross." + w] = (e, e)
    for b in ("bq", "bk", "bv", "bo"):
        shapes["cross." + b] = (e,)
    shapes["head.ln.g"] = (e,)
    shapes["head.ln.b"] = (e,)
    shapes["head.w"] = (cfg.n_classes, e)
    shapes["head.b"] = (cfg.n_classes,)
    return shapes


def param_count(cfg: ModelConfig) -> int:
    """Total learnable parameters; see README for the closed-form breakdown."""
    return sum(int(np.prod(s)) for s in expected_shapes(cfg).values())


def _trunc_normal(rng: np.random.Generator, shape, sigma=0.02) -> np.ndarray:
    return np.clip(rng.standard_normal(shape) * sigma, -2 * sigma, 2 * sigma)


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def init_params(cfg: ModelConfig, seed: int = 0) -> Params:
    """Truncated-normal projections and encodings, orthogonal attention
    weights, unit layernorm gains, zero biases."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    params: Params = {}
    for name, shape in expected_shapes(cfg).items():
        if name.endswith((".g",)):
            params[name] = np.ones(shape)
        elif name.endswith((".b", ".b1", ".b2", ".bq", ".bk", ".bv", ".bo")) or name == "head.b":
            params[name] = np.zeros(shape)
        elif ".attn.w" in name or name.startswith("cross.w"):
            params[name] = _orthogonal(rng, shape[0])
        else:
            params[name] = _trunc_normal(rng, shape)
    return params


def check_params(params: Params, cfg: ModelConfig) -> None:
    shapes = expected_shapes(cfg)
    missing = sorted(set(shapes) - set(params))
    if missing:
        raise ShapeMismatch(f"missing parameter tensors: {missing[:5]}")
    for name, shape in shapes.items():
        if tuple(params[name].shape) != shape:
            raise ShapeMismatch(f"{name}: shape {params[name].shape}, expected {shape}")


def patchify(samples: np.ndarray, patch_len: int) -> np.ndarray:
    """Split [.., C, T] samples into non-overlapping [.., C, P, L] patches.

    Raises:
        IndivisibleLength: T is not a multiple of patch_len.
    """
    t = samples.shape[-1]
    if t % patch_len != 0:
        raise IndivisibleLength(f"length {t} not divisible by patch length {patch_len}")
    return samples.reshape(*samples.shape[:-1], t // patch_len, patch_len)


# --- primitive layers ---

def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _layernorm_fwd(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv)


def _layernorm_bwd(dy, cache, g):
    xhat, inv = cache
    dg = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    db = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    dxhat = dy * g
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = (dxhat - m1 - xhat * m2) * inv
    return dx, dg, db


def _split_heads(x, n_heads):
    s, p, e = x.shape
    return x.reshape(s, p, n_heads, e // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    s, h, p, d = x.shape
    return x.transpose(0, 2, 1, 3).reshape(s, p, h * d)


def _attention_fwd(x, params, prefix, n_heads):
    """Multi-head self-attention over [S, P, E] sequences."""
    wq, wk, wv, wo = (params[prefix + w] for w in ("wq", "wk", "wv", "wo"))
    bq, bk, bv, bo = (params[prefix + b] for b in ("bq", "bk", "bv", "bo"))
    q = _split_heads(x @ wq.T + bq, n_heads)
    k = _split_heads(x @ wk.T + bk, n_heads)
    v = _split_heads(x @ wv.T + bv, n_heads)
    scale = 1.0 / np.sqrt(q.shape[-1])
    probs = softmax(np.matmul(q, k.transpose(0, 1, 3, 2)) * scale)
    ctx = _merge_heads(np.matmul(probs, v))
    out = ctx @ wo.T + bo
    return out, (x, q, k, v, probs, ctx)


def _attention_bwd(dout, cache, params, prefix, n_heads, grads):
    x, q, k, v, probs, ctx = cache
    wq, wk, wv, wo = (params[prefix + w] for w in ("wq", "wk", "wv", "wo"))
    e = x.shape[-1]
    flat = ctx.reshape(-1, e)
    grads[prefix + "wo"] = dout.reshape(-1, e).T @ flat
    grads[prefix + "bo"] = dout.reshape(-1, e).sum(axis=0)
    dctx = _split_heads(dout @ wo, n_heads)
    dprobs = np.matmul(dctx, v.transpose(0, 1, 3, 2))
    dv = np.matmul(probs.transpose(0, 1, 3, 2), dctx)
    dscores = (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True)) * probs
    scale = 1.0 / np.sqrt(q.shape[-1])
    dscores *= scale
    dq = np.matmul(dscores, k)
    dk = np.matmul(dscores.transpose(0, 1, 3, 2), q)
    dx = np.zeros_like(x)
    xf = x.reshape(-1, e)
    for dpart, w_name, b_name in ((dq, "wq", "bq"), (dk, "wk", "bk"), (dv, "wv", "bv")):
        dflat = _merge_heads(dpart).reshape(-1, e)
        grads[prefix + w_name] = dflat.T @ xf
        grads[prefix + b_name] = dflat.sum(axis=0)
        dx += (dflat @ params[prefix + w_name]).reshape(x.shape)
    return dx


def _dropout_mask(rng, shape, rate):
    return (rng.random(shape) >= rate) / (1.0 - rate)


def _check_finite(x: np.ndarray, stage: str):
    if not np.isfinite(x).all():
        raise NonFiniteActivation(f"non-finite activation in {stage}")


# --- featurizer: patch projection + conv stack ---

def _featurizer_fwd(x, params, cfg):
    b, c, t = x.shape
    patches = patchify(x, cfg.patch_len)  # [B, C, P, L]
    u = patches @ params["patch_proj.w"].T + params["patch_proj.b"]  # [B, C, P, E]
    e = cfg.embed_dim
    k1, k2 = cfg.conv_spec.kernel_sizes
    c1, c2 = cfg.conv_spec.channel_widths
    n = b * c * cfg.n_patches

    t0 = u.reshape(n, e)
    pad1 = (k1 - 1) // 2
    tp = np.pad(t0, ((0, 0), (pad1, k1 - 1 - pad1)))
    w1v = sliding_window_view(tp, k1, axis=1)  # [N, E, k1]
    a1 = w1v @ params["conv1.w"][:, 0, :].T + params["conv1.b"]  # [N, E, c1]
    g1 = gelu(a1)

    pad2 = (k2 - 1) // 2
    g1p = np.pad(g1, ((0, 0), (pad2, k2 - 1 - pad2), (0, 0)))
    w2v = sliding_window_view(g1p, k2, axis=1)  # [N, E, c1, k2]
    w2flat = params["conv2.w"].transpose(0, 2, 1).reshape(c2, k2 * c1)  # (o, j, i)
    a2 = w2v.transpose(0, 1, 3, 2).reshape(n, e, k2 * c1) @ w2flat.T + params["conv2.b"]
    g2 = gelu(a2)

    feat = g2 @ params["conv_out.w"] + params["conv_out.b"][0]  # [N, E]
    return feat.reshape(b, c, cfg.n_patches, e), (patches, t0, a1, a2)


def _featurizer_bwd(dfeat, cache, params, cfg, grads):
    patches, t0, a1, a2 = cache
    b, c, p, l = patches.shape
    e = cfg.embed_dim
    k1, k2 = cfg.conv_spec.kernel_sizes
    c1, c2 = cfg.conv_spec.channel_widths
    n = b * c * p
    df = dfeat.reshape(n, e)

    g2 = gelu(a2)
    grads["conv_out.w"] = np.einsum("ne,nec->c", df, g2)
    grads["conv_out.b"] = np.array([df.sum()])
    da2 = df[:, :, None] * params["conv_out.w"] * gelu_grad(a2)

    pad2 = (k2 - 1) // 2
    g1 = gelu(a1)
    g1p = np.pad(g1, ((0, 0), (pad2, k2 - 1 - pad2), (0, 0)))
    w2v = sliding_window_view(g1p, k2, axis=1).transpose(0, 1, 3, 2).reshape(n, e, k2 * c1)
    da2f = da2.reshape(n * e, c2)
    gw2 = da2f.T @ w2v.reshape(n * e, k2 * c1)  # [c2, k2*c1]
    grads["conv2.w"] = gw2.reshape(c2, k2, c1).transpose(0, 2, 1)
    grads["conv2.b"] = da2f.sum(axis=0)
    w2flat = params["conv2.w"].transpose(0, 2, 1).reshape(c2, k2 * c1)
    dw2v = (da2f @ w2flat).reshape(n, e, k2, c1)
    dg1p = np.zeros_like(g1p)
    for j in range(k2):
        dg1p[:, j : j + e, :] += dw2v[:, :, j, :]
    dg1 = dg1p[:, pad2 : pad2 + e, :]
    da1 = dg1 * gelu_grad(a1)

    pad1 = (k1 - 1) // 2
    tp = np.pad(t0, ((0, 0), (pad1, k1 - 1 - pad1)))
    w1v = sliding_window_view(tp, k1, axis=1)  # [N, E, k1]
    da1f = da1.reshape(n * e, c1)
    grads["conv1.w"] = (da1f.T @ w1v.reshape(n * e, k1))[:, None, :]
    grads["conv1.b"] = da1f.sum(axis=0)
    dw1v = (da1f @ params["conv1.w"][:, 0, :]).reshape(n, e, k1)
    dtp = np.zeros_like(tp)
    for j in range(k1):
        dtp[:, j : j + e] += dw1v[:, :, j]
    dt0 = dtp[:, pad1 : pad1 + e]

    du = dt0.reshape(b, c, p, e)
    grads["patch_proj.w"] = du.reshape(-1, e).T @ patches.reshape(-1, l)
    grads["patch_proj.b"] = du.reshape(-1, e).sum(axis=0)
    return None  # gradient w.r.t. the input samples is not needed


# --- full forward / backward ---

def forward(
    params: Params,
    cfg: ModelConfig,
    x: np.ndarray,
    mode: str = "eval",
    dropout_rng: np.random.Generator | None = None,
    want_cache: bool = False,
    want_attention: bool = False,
):
    """Run the classifier on a batch of segments.

    `x` is [B, n_channels, window_samples] (a single segment may omit the
    batch axis). Dropout is active only in train mode, with masks drawn from
    `dropout_rng`. Returns a ForwardOutput, plus the backward cache when
    `want_cache` is set.

    Raises:
        ShapeMismatch: input or parameter shapes disagree with the config.
        NonFiniteActivation: a NaN/Inf appeared, reported with its stage.
    """
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1] != cfg.n_channels or x.shape[2] != cfg.window.total_samples:
        raise ShapeMismatch(
            f"input {x.shape}, expected [B, {cfg.n_channels}, {cfg.window.total_samples}]"
        )
    check_params(params, cfg)
    if mode not in ("train", "eval"):
        raise ValueError("mode must be 'train' or 'eval'")
    train = mode == "train"
    rate = cfg.dropout_rate if train else 0.0
    if rate > 0 and dropout_rng is None:
        raise ValueError("train-mode forward with dropout needs dropout_rng")

    x = np.ascontiguousarray(x, dtype=np.float64)
    b = x.shape[0]
    e = cfg.embed_dim

    feat, feat_cache = _featurizer_fwd(x, params, cfg)
    _check_finite(feat, "featurizer")
    h = feat + params["pos_temporal"]
    seqs = h.reshape(b * cfg.n_channels, cfg.n_patches, e)

    layer_caches = []
    for i in range(cfg.n_encoder_layers):
        p = f"enc{i}."
        ln1, ln1_cache = _layernorm_fwd(seqs, params[p + "ln1.g"], params[p + "ln1.b"])
        attn, attn_cache = _attention_fwd(ln1, params, p + "attn.", cfg.n_heads)
        mask_a = _dropout_mask(dropout_rng, attn.shape, rate) if rate > 0 else None
        if mask_a is not None:
            attn = attn * mask_a
        seqs = seqs + attn
        ln2, ln2_cache = _layernorm_fwd(seqs, params[p + "ln2.g"], params[p + "ln2.b"])
        f1 = ln2 @ params[p + "ffn.w1"].T + params[p + "ffn.b1"]
        f2 = gelu(f1) @ params[p + "ffn.w2"].T + params[p + "ffn.b2"]
        mask_f = _dropout_mask(dropout_rng, f2.shape, rate) if rate > 0 else None
        if mask_f is not None:
            f2 = f2 * mask_f
        seqs = seqs + f2
        _check_finite(seqs, f"encoder layer {i}")
        layer_caches.append((ln1, ln1_cache, attn_cache, mask_a, ln2, ln2_cache, f1, mask_f))

    enc_out, enc_ln_cache = _layernorm_fwd(seqs, params["enc_ln.g"], params["enc_ln.b"])
    pooled = enc_out.mean(axis=1).reshape(b, cfg.n_channels, e)
    z = pooled + params["pos_channel"]

    lnx, lnx_cache = _layernorm_fwd(z, params["cross.ln.g"], params["cross.ln.b"])
    xattn, xattn_cache = _attention_fwd(lnx, params, "cross.", cfg.cross_channel_heads)
    mask_x = _dropout_mask(dropout_rng, xattn.shape, rate) if rate > 0 else None
    if mask_x is not None:
        xattn = xattn * mask_x
    z = z + xattn
    _check_finite(z, "cross-channel attention")

    zm = z.mean(axis=1)
    zl, head_ln_cache = _layernorm_fwd(zm, params["head.ln.g"], params["head.ln.b"])
    logits = zl @ params["head.w"].T + params["head.b"]
    _check_finite(logits, "classifier")
    probs = softmax(logits)

    out = ForwardOutput(
        logits=logits,
        probabilities=probs,
        channel_attention=xattn_cache[4].copy() if want_attention else None,
    )
    if not want_cache:
        return out
    cache = {
        "x": x,
        "feat_cache": feat_cache,
        "layer_caches": layer_caches,
        "enc_ln_cache": enc_ln_cache,
        "enc_out_shape": enc_out.shape,
        "lnx": lnx,
        "lnx_cache": lnx_cache,
        "xattn_cache": xattn_cache,
        "mask_x": mask_x,
        "head_ln_cache": head_ln_cache,
        "zl": zl,
        "probs": probs,
    }
    return out, cache


def smoothed_cross_entropy(probs: np.ndarray, labels: np.ndarray, eps: float) -> float:
    """Mean label-smoothed cross-entropy; targets (1-eps)*onehot + eps/K."""
    b, k = probs.shape
    q = np.full((b, k), eps / k)
    q[np.arange(b), labels] += 1.0 - eps
    return float(-(q * np.log(np.clip(probs, 1e-300, None))).sum(axis=1).mean())


def backward(
    params: Params,
    cfg: ModelConfig,
    x: np.ndarray,
    labels: np.ndarray,
    label_smoothing: float = 0.1,
    mode: str = "train",
    dropout_rng: np.random.Generator | None = None,
) -> tuple[float, Params, np.ndarray]:
    """Loss, analytic parameter gradients, and probabilities for one batch.

    Gradients are of the batch-mean label-smoothed cross-entropy and share
    shapes with `params`.
    """
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    out, cache = forward(
        params, cfg, x, mode=mode, dropout_rng=dropout_rng, want_cache=True
    )
    probs = cache["probs"]
    b, k = probs.shape
    if labels.shape != (b,):
        raise ShapeMismatch(f"labels {labels.shape}, expected ({b},)")
    eps = label_smoothing
    loss = smoothed_cross_entropy(probs, labels, eps)

    q = np.full((b, k), eps / k)
    q[np.arange(b), labels] += 1.0 - eps
    dlogits = (probs - q) / b

    grads: Params = {}
    e = cfg.embed_dim

    grads["head.w"] = dlogits.T @ cache["zl"]
    grads["head.b"] = dlogits.sum(axis=0)
    dzl = dlogits @ params["head.w"]
    dzm, grads["head.ln.g"], grads["head.ln.b"] = _layernorm_bwd(
        dzl, cache["head_ln_cache"], params["head.ln.g"]
    )
    dz = np.repeat(dzm[:, None, :] / cfg.n_channels, cfg.n_channels, axis=1)

    dxattn = dz if cache["mask_x"] is None else dz * cache["mask_x"]
    dlnx = _attention_bwd(
        dxattn, cache["xattn_cache"], params, "cross.", cfg.cross_channel_heads, grads
    )
    dz_pre, grads["cross.ln.g"], grads["cross.ln.b"] = _layernorm_bwd(
        dlnx, cache["lnx_cache"], params["cross.ln.g"]
    )
    dz = dz + dz_pre

    grads["pos_channel"] = dz.sum(axis=0)
    dpooled = dz.reshape(b * cfg.n_channels, e)
    n_patches = cfg.n_patches
    denc_out = np.repeat(dpooled[:, None, :] / n_patches, n_patches, axis=1)
    dseqs, grads["enc_ln.g"], grads["enc_ln.b"] = _layernorm_bwd(
        denc_out, cache["enc_ln_cache"], params["enc_ln.g"]
    )

    for i in reversed(range(cfg.n_encoder_layers)):
        p = f"enc{i}."
        ln1, ln1_cache, attn_cache, mask_a, ln2, ln2_cache, f1, mask_f = cache["layer_caches"][i]
        df2 = dseqs if mask_f is None else dseqs * mask_f
        g1 = gelu(f1)
        grads[p + "ffn.w2"] = df2.reshape(-1, e).T @ g1.reshape(-1, cfg.ffn_dim)
        grads[p + "ffn.b2"] = df2.reshape(-1, e).sum(axis=0)
        dg1 = (df2 @ params[p + "ffn.w2"]) * gelu_grad(f1)
        grads[p + "ffn.w1"] = dg1.reshape(-1, cfg.ffn_dim).T @ ln2.reshape(-1, e)
        grads[p + "ffn.b1"] = dg1.reshape(-1, cfg.ffn_dim).sum(axis=0)
        dln2 = dg1 @ params[p + "ffn.w1"]
        dmid, grads[p + "ln2.g"], grads[p + "ln2.b"] = _layernorm_bwd(
            dln2, ln2_cache, params[p + "ln2.g"]
        )
        dseqs = dseqs + dmid
        dattn = dseqs if mask_a is None else dseqs * mask_a
        dln1 = _attention_bwd(dattn, attn_cache, params, p + "attn.", cfg.n_heads, grads)
        dpre, grads[p + "ln1.g"], grads[p + "ln1.b"] = _layernorm_bwd(
            dln1, ln1_cache, params[p + "ln1.g"]
        )
        dseqs = dseqs + dpre

    dh = dseqs.reshape(b, cfg.n_channels, n_patches, e)
    grads["pos_temporal"] = dh.sum(axis=(0, 1))
    _featurizer_bwd(dh, cache["feat_cache"], params, cfg, grads)
    return loss, grads, out.probabilities


def iter_params(cfg: ModelConfig) -> Iterator[str]:
    yield from expected_shapes(cfg)


def grad_check(
    cfg: ModelConfig,
    seed: int = 0,
    batch: int = 2,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    corrupt_tensor: str | None = None,
) -> dict:
    """Compare analytic gradients against central finite differences.

    Meant for small configs (<= ~20k parameters). Returns a report with the
    per-tensor max relative error and a pass flag per tensor; `corrupt_tensor`
    perturbs one analytic gradient as a fault-injection control.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 7])))
    params = init_params(cfg, seed=seed)
    x = rng.standard_normal((batch, cfg.n_channels, cfg.window.total_samples))
    labels = rng.integers(0, cfg.n_classes, size=batch)
    eps_smooth = 0.1

    def loss_of(p: Params) -> float:
        out = forward(p, cfg, x, mode="eval")
        return smoothed_cross_entropy(out.probabilities, labels, eps_smooth)

    _, grads, _ = backward(params, cfg, x, labels, label_smoothing=eps_smooth, mode="eval")
    if corrupt_tensor is not None:
        grads[corrupt_tensor] = grads[corrupt_tensor] + 1.0

    report = {"tensors": {}, "passed": True, "tolerance": tolerance, "n_params": param_count(cfg)}
    for name in iter_params(cfg):
        tensor = params[name]
        numeric = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        num_flat = numeric.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            above = loss_of(params)
            flat[j] = orig - step
            below = loss_of(params)
            flat[j] = orig
            num_flat[j] = (above - below) / (2.0 * step)
        denom = np.maximum(np.maximum(np.abs(grads[name]), np.abs(numeric)), 1e-6)
        max_rel = float((np.abs(grads[name] - numeric) / denom).max())
        ok = max_rel < tolerance
        report["tensors"][name] = {"max_rel_error": max_rel, "passed": ok}
        report["passed"] = report["passed"] and ok
    return report
