"""Embedding networks, the scaled squared-Euclidean distance head, and losses.

Two weight-shared branches embed a pair of sequences; the predicted edit
distance is r^2 * ||u - v||^2 with a learnable positive scale r stored as
log r. The scale is initialized so that the expected distance between
embeddings of unrelated sequences matches the dataset's mean edit
distance M between independent sequences: r = sqrt(M / (2 n)) for
embedding dimension n.

Losses (per sample, with dhat the prediction and d the target):

  mse     (dhat - d)^2
  mae     |dhat - d|
  rechi2  dhat - (d - 2) ln dhat        minimized at dhat = d - 2
  pnll    dhat - d ln dhat              minimized at dhat = d
  gnll(k) dhat - (d - 2/k) ln dhat      minimized at dhat = d - 2/k

gnll is the chi-squared negative log-likelihood with dilation k; as k
grows it converges to pnll. For rechi2 and gnll the ln coefficient is
clamped at 0 when d is small enough to make it negative, which would
otherwise send the loss to -inf as dhat -> 0+.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, NumericError
from .ndnet import (
    BatchNorm1d,
    Parameter,
    adam_step,
    avgpool1d_backward,
    avgpool1d_forward,
    conv1d_backward,
    conv1d_forward,
    im2col3,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
)
from .seeding import substream
from .seqcore import DNA, Alphabet, Sequence, pad

DHAT_FLOOR = 1e-6
LOSS_KINDS = ("mse", "mae", "rechi2", "pnll", "gnll")

# kind -> (number of conv layers, conv channels)
ARCH_KINDS = {
    "cnn5": (5, 64),
    "cnn10": (10, 64),
    "cnn5w": (5, 256),
    "cnn10w": (10, 256),
}

FC_HIDDEN = 512


@dataclass(frozen=True)
class ArchitectureSpec:
    """Declarative description of an embedding network."""

    kind: str
    embedding_dim: int
    input_len: int = 160
    alphabet_size: int = 6

    def __post_init__(self):
        if self.kind not in ARCH_KINDS:
            raise DataError(f"unknown architecture kind {self.kind!r}; choose from {sorted(ARCH_KINDS)}")
        if self.embedding_dim < 1:
            raise DataError(f"embedding dimension must be >= 1, got {self.embedding_dim}")
        if self.alphabet_size < 2:
            raise DataError(f"alphabet size must be >= 2, got {self.alphabet_size}")
        if self.final_len < 1:
            raise DataError(
                f"input length {self.input_len} is too short for {len(self.pool_after)} pooling stages"
            )

    @property
    def conv_layers(self) -> int:
        return ARCH_KINDS[self.kind][0]

    @property
    def channels(self) -> int:
        return ARCH_KINDS[self.kind][1]

    @property
    def pool_after(self) -> tuple[int, ...]:
        # five pooling stages either way: after every conv for depth 5,
        # after every second conv for depth 10
        if self.conv_layers == 5:
            return (0, 1, 2, 3, 4)
        return (1, 3, 5, 7, 9)

    @property
    def final_len(self) -> int:
        L = self.input_len
        for _ in self.pool_after:
            L //= 2
        return L

    @property
    def flat_features(self) -> int:
        return self.channels * self.final_len


def init_scale(mean_independent_distance: float, embedding_dim: int) -> float:
    """log r such that unrelated embedding pairs have expected distance M."""
    if mean_independent_distance <= 0:
        raise DataError(
            f"mean independent distance must be positive, got {mean_independent_distance}"
        )
    if embedding_dim < 1:
        raise DataError(f"embedding dimension must be >= 1, got {embedding_dim}")
    return 0.5 * math.log(mean_independent_distance / (2.0 * embedding_dim))


class EmbeddingModel:
    """Convolutional embedding network with a learnable distance scale.

    Pipeline: one-hot input -> [conv3 -> ReLU -> (avgpool)] stack ->
    flatten -> FC(512) -> ReLU -> FC(n) -> batch norm (eps 1e-9).
    """

    def __init__(
        self,
        spec: ArchitectureSpec,
        rng: np.random.Generator,
        mean_independent_distance: float | None = None,
        dtype=np.float32,
    ):
        self.spec = spec
        self.dtype = dtype
        self.adam_t = 0

        def he(shape, fan_in, name):
            w = rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)
            return Parameter(w.astype(dtype), name)

        self.conv_w: list[Parameter] = []
        self.conv_b: list[Parameter] = []
        c_in = spec.alphabet_size
        for i in range(spec.conv_layers):
            self.conv_w.append(he((spec.channels, c_in, 3), c_in * 3, f"conv{i}.w"))
            self.conv_b.append(Parameter(np.zeros(spec.channels, dtype=dtype), f"conv{i}.b"))
            c_in = spec.channels
        self.fc1_w = he((spec.flat_features, FC_HIDDEN), spec.flat_features, "fc1.w")
        self.fc1_b = Parameter(np.zeros(FC_HIDDEN, dtype=dtype), "fc1.b")
        self.fc2_w = he((FC_HIDDEN, spec.embedding_dim), FC_HIDDEN, "fc2.w")
        self.fc2_b = Parameter(np.zeros(spec.embedding_dim, dtype=dtype), "fc2.b")
        self.bn = BatchNorm1d(spec.embedding_dim, eps=1e-9, momentum=0.1, dtype=dtype, name="bn")
        if mean_independent_distance is None:
            log_r0 = 0.0
        else:
            log_r0 = init_scale(mean_independent_distance, spec.embedding_dim)
        self.log_r = Parameter(np.asarray(log_r0, dtype=dtype), "log_r")

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        for w, b in zip(self.conv_w, self.conv_b):
            params.extend((w, b))
        params.extend((self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b))
        params.extend((self.bn.gamma, self.bn.beta))
        params.append(self.log_r)
        return params

    @property
    def scale(self) -> float:
        return float(np.exp(self.log_r.value))

    def forward_onehot(self, x: np.ndarray, train: bool) -> tuple[np.ndarray, dict]:
        """x: (B, alphabet_size, input_len) -> embeddings (B, n) plus backward cache."""
        if x.shape[1] != self.spec.alphabet_size or x.shape[2] != self.spec.input_len:
            raise DataError(
                f"expected input (B, {self.spec.alphabet_size}, {self.spec.input_len}), got {x.shape}"
            )
        cache: dict = {"train": train, "convs": []}
        h = x
        for i in range(self.spec.conv_layers):
            cols = im2col3(h)
            z = conv1d_forward(h, self.conv_w[i].value, self.conv_b[i].value, cols)
            r = relu_forward(z)
            if i in self.spec.pool_after:
                out = avgpool1d_forward(r)
                pooled_from = r.shape[-1]
            else:
                out = r
                pooled_from = None
            cache["convs"].append((h, z, pooled_from, cols))
            h = out
        B = h.shape[0]
        flat = h.reshape(B, -1)
        z1 = linear_forward(flat, self.fc1_w.value, self.fc1_b.value)
        r1 = relu_forward(z1)
        z2 = linear_forward(r1, self.fc2_w.value, self.fc2_b.value)
        emb, bn_cache = self.bn.forward(z2, train)
        cache.update(conv_out_shape=h.shape, flat=flat, z1=z1, r1=r1, bn=bn_cache)
        return emb, cache

    def backward(self, cache: dict, demb: np.ndarray) -> None:
        """Accumulate parameter gradients for one branch."""
        dz2 = self.bn.backward(cache["bn"], demb)
        dr1, dw2, db2 = linear_backward(cache["r1"], self.fc2_w.value, dz2)
        self.fc2_w.grad += dw2
        self.fc2_b.grad += db2
        dz1 = relu_backward(cache["z1"], dr1)
        dflat, dw1, db1 = linear_backward(cache["flat"], self.fc1_w.value, dz1)
        self.fc1_w.grad += dw1
        self.fc1_b.grad += db1
        dh = dflat.reshape(cache["conv_out_shape"])
        for i in range(self.spec.conv_layers - 1, -1, -1):
            h_in, z, pooled_from, cols = cache["convs"][i]
            if pooled_from is not None:
                dh = avgpool1d_backward(pooled_from, dh)
            dz = relu_backward(z, dh)
            dh, dw, db = conv1d_backward(h_in, self.conv_w[i].value, dz, cols)
            self.conv_w[i].grad += dw
            self.conv_b[i].grad += db

    def embed_sequences(
        self,
        seqs: list[Sequence],
        alphabet: Alphabet = DNA,
        train: bool = False,
        batch_size: int = 256,
    ) -> np.ndarray:
        """Pad, one-hot, and embed a list of sequences (eval mode by default)."""
        codes = codes_matrix(seqs, alphabet, self.spec.input_len)
        out = np.empty((len(seqs), self.spec.embedding_dim), dtype=self.dtype)
        for lo in range(0, len(seqs), batch_size):
            hi = min(lo + batch_size, len(seqs))
            x = one_hot_batch(codes[lo:hi], self.spec.alphabet_size, self.dtype)
            out[lo:hi], _ = self.forward_onehot(x, train)
        return out


def codes_matrix(seqs: list[Sequence], alphabet: Alphabet, input_len: int) -> np.ndarray:
    """Stack sequences into a (N, input_len) code matrix, padding each one."""
    out = np.full((len(seqs), input_len), alphabet.pad_index, dtype=np.int16)
    for i, s in enumerate(seqs):
        padded = pad(s, input_len, alphabet)
        out[i] = padded.codes
    return out


def one_hot_batch(codes: np.ndarray, alphabet_size: int, dtype=np.float32) -> np.ndarray:
    B, L = codes.shape
    x = np.zeros((B, alphabet_size, L), dtype=dtype)
    x[np.arange(B)[:, None], codes, np.arange(L)[None, :]] = 1
    return x


def predict_distance(model: EmbeddingModel, u: np.ndarray, v: np.ndarray) -> float:
    """r^2 * ||u - v||^2 for one pair of embedding vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DataError(f"embedding vectors must share one shape, got {u.shape} / {v.shape}")
    return float(model.scale**2 * ((u - v) ** 2).sum())


def predict_distances(model: EmbeddingModel, emb_s: np.ndarray, emb_t: np.ndarray) -> np.ndarray:
    diff = emb_s.astype(np.float64) - emb_t.astype(np.float64)
    return model.scale**2 * (diff * diff).sum(axis=1)


def loss_and_grad(
    kind: str, dhat: np.ndarray, d: np.ndarray, k: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample loss values and derivatives with respect to dhat.

    dhat is floored at DHAT_FLOOR before any logarithm; at floored
    entries the derivative is 0 (the clamp blocks the gradient).
    """
    dhat = np.asarray(dhat, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    x = np.maximum(dhat, DHAT_FLOOR)
    if np.any(x <= 0):
        raise NumericError("predicted distance non-positive after flooring")
    live = dhat > DHAT_FLOOR
    if kind == "mse":
        values = (x - d) ** 2
        grads = 2.0 * (x - d)
    elif kind == "mae":
        values = np.abs(x - d)
        grads = np.sign(x - d)
    elif kind == "rechi2":
        c = np.maximum(d - 2.0, 0.0)
        values = x - c * np.log(x)
        grads = 1.0 - c / x
    elif kind == "pnll":
        values = x - d * np.log(x)
        grads = 1.0 - d / x
    elif kind == "gnll":
        if k is None or k <= 0:
            raise DataError(f"gnll needs a positive dilation k, got {k}")
        c = np.maximum(d - 2.0 / k, 0.0)
        values = x - c * np.log(x)
        grads = 1.0 - c / x
    else:
        raise DataError(f"unknown loss kind {kind!r}; choose from {LOSS_KINDS}")
    return values, grads * live


@dataclass
class TrainConfig:
    loss: str = "pnll"
    gnll_k: float | None = None
    epochs: int = 50
    batch_size: int = 128
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    val_fraction: float = 0.05
    val_max: int = 2000


@dataclass
class EpochLog:
    epoch: int
    loss: float
    ae_g: float
    ae_h: float


def train_step(
    model: EmbeddingModel,
    xs: np.ndarray,
    xt: np.ndarray,
    d: np.ndarray,
    cfg: TrainConfig,
) -> float:
    """One optimization step over a batch of pairs.

    Both branches share the model: gradients from the two forward passes
    accumulate into the same parameters before a single Adam step.
    """
    emb_s, cache_s = model.forward_onehot(xs, train=True)
    emb_t, cache_t = model.forward_onehot(xt, train=True)
    diff = emb_s - emb_t
    sq = (diff.astype(np.float64) ** 2).sum(axis=1)
    with np.errstate(over="ignore"):
        r2 = float(np.exp(2.0 * np.float64(model.log_r.value)))
        dhat = r2 * sq

    def _dump(reason):
        return NumericError(
            f"{reason}; batch dump: loss={cfg.loss}, d[:8]={d[:8].tolist()}, "
            f"dhat[:8]={np.round(dhat[:8], 4).tolist()}, "
            f"log_r={float(model.log_r.value):.6g}"
        )

    if not np.all(np.isfinite(dhat)):
        raise _dump("non-finite predicted distances (dhat)")
    values, grads = loss_and_grad(cfg.loss, dhat, d, cfg.gnll_k)
    loss = float(values.mean())
    if not math.isfinite(loss):
        raise _dump("non-finite training loss")
    B = d.size
    g = grads / B
    model.log_r.grad += np.asarray((g * 2.0 * dhat).sum(), dtype=model.dtype)
    demb_s = ((2.0 * r2) * g)[:, None].astype(model.dtype) * diff
    model.backward(cache_s, demb_s)
    model.backward(cache_t, -demb_s)
    model.adam_t += 1
    adam_step(
        model.parameters(),
        lr=cfg.lr,
        t=model.adam_t,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        eps=cfg.adam_eps,
    )
    return loss


def _pair_arrays(pairs, alphabet: Alphabet, input_len: int):
    s_codes = codes_matrix([p.s for p in pairs], alphabet, input_len)
    t_codes = codes_matrix([p.t for p in pairs], alphabet, input_len)
    d = np.array([p.d for p in pairs], dtype=np.float64)
    hom = np.array([p.homologous for p in pairs], dtype=bool)
    return s_codes, t_codes, d, hom


def _pair_distances(model: EmbeddingModel, s_codes, t_codes, batch_size=256) -> np.ndarray:
    n = s_codes.shape[0]
    dhat = np.empty(n, dtype=np.float64)
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        xs = one_hot_batch(s_codes[lo:hi], model.spec.alphabet_size, model.dtype)
        xt = one_hot_batch(t_codes[lo:hi], model.spec.alphabet_size, model.dtype)
        emb_s, _ = model.forward_onehot(xs, train=False)
        emb_t, _ = model.forward_onehot(xt, train=False)
        dhat[lo:hi] = predict_distances(model, emb_s, emb_t)
    return dhat


def train(
    model: EmbeddingModel,
    train_pairs,
    alphabet: Alphabet = DNA,
    cfg: TrainConfig = TrainConfig(),
    start_epoch: int = 0,
) -> list[EpochLog]:
    """Shuffled epochs over the training pairs, deterministic under the seed.

    A slice of the training pairs is held out for per-epoch approximation
    error logging (it never receives gradient updates). Shuffling is
    derived per epoch from the seed, so a run resumed from epoch e
    continues exactly as the unbroken run would have.
    """
    if not train_pairs:
        raise DataError("training requires a non-empty pair list")
    n = len(train_pairs)
    perm = substream(cfg.seed, "valsplit").permutation(n)
    n_val = min(cfg.val_max, int(round(cfg.val_fraction * n)))
    val_idx = perm[:n_val]
    fit_idx = perm[n_val:]
    if fit_idx.size == 0:
        raise DataError("validation slice swallowed the whole training set")
    fit_pairs = [train_pairs[i] for i in fit_idx]
    val_pairs = [train_pairs[i] for i in val_idx]
    s_codes, t_codes, d_all, _ = _pair_arrays(fit_pairs, alphabet, model.spec.input_len)
    if val_pairs:
        vs_codes, vt_codes, vd, vhom = _pair_arrays(val_pairs, alphabet, model.spec.input_len)
    logs: list[EpochLog] = []
    for epoch in range(start_epoch, cfg.epochs):
        order = substream(cfg.seed, "epoch", epoch).permutation(len(fit_pairs))
        epoch_loss = 0.0
        seen = 0
        for lo in range(0, len(fit_pairs), cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            if idx.size < 2:
                continue  # batch norm needs >= 2 samples; drop a trailing singleton
            xs = one_hot_batch(s_codes[idx], model.spec.alphabet_size, model.dtype)
            xt = one_hot_batch(t_codes[idx], model.spec.alphabet_size, model.dtype)
            loss = train_step(model, xs, xt, d_all[idx], cfg)
            epoch_loss += loss * idx.size
            seen += idx.size
        if val_pairs:
            vdhat = _pair_distances(model, vs_codes, vt_codes)
            ae_g = float(np.abs(vdhat - vd).mean())
            ae_h = float(np.abs(vdhat[vhom] - vd[vhom]).mean()) if vhom.any() else float("nan")
        else:
            ae_g = ae_h = float("nan")
        logs.append(EpochLog(epoch, epoch_loss / max(seen, 1), ae_g, ae_h))
    return logs


def clone_config(cfg: TrainConfig, **overrides) -> TrainConfig:
    return replace(cfg, **overrides)
