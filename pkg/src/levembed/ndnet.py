"""Minimal differentiable numeric engine.

Forward/backward kernels for the handful of layers the embedding
networks need (1D convolution with kernel 3 / stride 1 / padding 1,
average pooling with kernel 2, ReLU, fully connected, batch
normalization), a bias-corrected Adam step, and a central-difference
gradient checker. There is no autodiff graph: each network wires its own
fixed-topology backward pass out of these kernels.

Training runs in float32; gradient verification runs the same kernels in
float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

__all__ = [
    "Parameter",
    "BatchNorm1d",
    "conv1d_forward",
    "conv1d_backward",
    "avgpool1d_forward",
    "avgpool1d_backward",
    "relu_forward",
    "relu_backward",
    "linear_forward",
    "linear_backward",
    "adam_step",
    "grad_check",
    "GradCheckResult",
]


class Parameter:
    """A value array with its gradient and Adam moment accumulators."""

    __slots__ = ("name", "value", "grad", "m", "v")

    def __init__(self, value: np.ndarray, name: str):
        self.name = name
        self.value = np.asarray(value)
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad[...] = 0

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.value.shape})"


def im2col3(x: np.ndarray) -> np.ndarray:
    """Unfold zero-padded width-3 windows: (B, C, L) -> (C*3, B*L).

    Shared between the forward and backward conv kernels; callers may
    compute it once and pass it to both.
    """
    B, C, L = x.shape
    xp = np.zeros((B, C, L + 2), dtype=x.dtype)
    xp[:, :, 1:-1] = x
    win = np.lib.stride_tricks.sliding_window_view(xp, 3, axis=2)  # (B, C, L, 3)
    return win.transpose(1, 3, 0, 2).reshape(C * 3, B * L)


def conv1d_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, cols: np.ndarray | None = None
) -> np.ndarray:
    """Cross-correlation with kernel 3, stride 1, zero-padding 1.

    x: (B, C_in, L), w: (C_out, C_in, 3), b: (C_out,) -> (B, C_out, L).
    One GEMM over the unfolded windows (``cols``: optional precomputed
    im2col3(x)).
    """
    if x.ndim != 3 or w.ndim != 3 or w.shape[2] != 3:
        raise NumericError(f"conv1d expects x(B,C,L) and w(Cout,Cin,3), got {x.shape} / {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise NumericError(f"conv1d channel mismatch: input {x.shape[1]} vs weights {w.shape[1]}")
    B, _, L = x.shape
    if cols is None:
        cols = im2col3(x)
    out = (w.reshape(w.shape[0], -1) @ cols).reshape(w.shape[0], B, L)
    out = np.ascontiguousarray(out.transpose(1, 0, 2))
    out += b[None, :, None]
    return out


def conv1d_backward(
    x: np.ndarray, w: np.ndarray, dout: np.ndarray, cols: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv1d_forward w.r.t. input, weights, and bias."""
    B, C_in, L = x.shape
    if cols is None:
        cols = im2col3(x)
    c_out = w.shape[0]
    dout2 = np.ascontiguousarray(dout.transpose(1, 0, 2)).reshape(c_out, B * L)
    dw = (dout2 @ cols.T).reshape(w.shape)
    db = dout2.sum(axis=1)
    dcols = w.reshape(c_out, -1).T @ dout2  # (C_in*3, B*L)
    dcr = dcols.reshape(C_in, 3, B, L)
    dxp = np.zeros((B, C_in, L + 2), dtype=x.dtype)
    for t in range(3):
        dxp[:, :, t : t + L] += dcr[:, t].transpose(1, 0, 2)
    return dxp[:, :, 1:-1], dw, db


def avgpool1d_forward(x: np.ndarray) -> np.ndarray:
    """Non-overlapping mean over windows of 2; an odd trailing element is dropped."""
    L = x.shape[-1]
    if L < 2:
        raise NumericError(f"avgpool1d needs length >= 2, got {L}")
    L2 = L // 2
    return 0.5 * (x[..., 0 : 2 * L2 : 2] + x[..., 1 : 2 * L2 : 2])


def avgpool1d_backward(input_len: int, dout: np.ndarray) -> np.ndarray:
    dx = np.zeros(dout.shape[:-1] + (input_len,), dtype=dout.dtype)
    L2 = dout.shape[-1]
    dx[..., 0 : 2 * L2 : 2] = 0.5 * dout
    dx[..., 1 : 2 * L2 : 2] = 0.5 * dout
    return dx


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, dout: np.ndarray) -> np.ndarray:
    return dout * (x > 0)


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x: (B, F_in), w: (F_in, F_out), b: (F_out,)."""
    if x.shape[1] != w.shape[0]:
        raise NumericError(f"linear shape mismatch: x {x.shape} vs w {w.shape}")
    return x @ w + b


def linear_backward(
    x: np.ndarray, w: np.ndarray, dout: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dw = x.T @ dout
    db = dout.sum(axis=0)
    dx = dout @ w.T
    return dx, dw, db


class BatchNorm1d:
    """Batch normalization over (B, F) with eps inside the square root.

    Train mode normalizes by batch statistics and tracks running
    statistics with an exponential moving average; eval mode normalizes
    by the running statistics. The final embedding layer of the networks
    uses eps=1e-9: learned features can sit several orders of magnitude
    below 1, and the common 1e-5 would flatten them.
    """

    def __init__(
        self,
        num_features: int,
        eps: float = 1e-5,
        momentum: float = 0.1,
        dtype=np.float32,
        name: str = "bn",
    ):
        if eps <= 0:
            raise NumericError(f"eps must be positive, got {eps}")
        if not 0.0 < momentum < 1.0:
            raise NumericError(f"momentum must be in (0, 1), got {momentum}")
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.gamma = Parameter(np.ones(num_features, dtype=dtype), f"{name}.gamma")
        self.beta = Parameter(np.zeros(num_features, dtype=dtype), f"{name}.beta")
        self.running_mean = np.zeros(num_features, dtype=dtype)
        self.running_var = np.ones(num_features, dtype=dtype)

    def forward(self, x: np.ndarray, train: bool) -> tuple[np.ndarray, tuple]:
        if x.ndim != 2 or x.shape[1] != self.gamma.value.shape[0]:
            raise NumericError(f"batchnorm expects (B, {self.gamma.value.shape[0]}), got {x.shape}")
        if train:
            B = x.shape[0]
            if B < 2:
                raise NumericError(f"batchnorm train mode needs batch >= 2, got {B}")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv_std
            mom = self.momentum
            self.running_mean *= 1.0 - mom
            self.running_mean += mom * mean
            self.running_var *= 1.0 - mom
            self.running_var += mom * var * (B / (B - 1))
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean) * inv_std
        y = self.gamma.value * xhat + self.beta.value
        return y, (train, xhat, inv_std)

    def backward(self, cache: tuple, dout: np.ndarray) -> np.ndarray:
        train, xhat, inv_std = cache
        self.gamma.grad += (dout * xhat).sum(axis=0)
        self.beta.grad += dout.sum(axis=0)
        dxhat = dout * self.gamma.value
        if not train:
            return dxhat * inv_std
        # chain rule through the batch mean and variance
        return inv_std * (dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0))


def adam_step(
    params: list[Parameter],
    lr: float,
    t: int,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update in place; gradients are zeroed afterwards."""
    if t < 1:
        raise NumericError(f"adam step counter must be >= 1, got {t}")
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p in params:
        g = p.grad
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter {p.name}")
        p.m *= beta1
        p.m += (1.0 - beta1) * g
        p.v *= beta2
        p.v += (1.0 - beta2) * (g * g)
        mhat = p.m / c1
        vhat = p.v / c2
        p.value -= lr * mhat / (np.sqrt(vhat) + eps)
        p.zero_grad()


@dataclass
class GradCheckResult:
    max_rel_err: float
    worst_param: str
    worst_index: int
    per_param: dict[str, float]

    def ok(self, tolerance: float) -> bool:
        return self.max_rel_err < tolerance


def grad_check(
    f,
    params: list[Parameter],
    h: float = 1e-5,
    max_coords: int = 50,
    rng: np.random.Generator | None = None,
) -> GradCheckResult:
    """Compare stored analytic gradients against central finite differences.

    ``f`` recomputes the scalar objective from the current parameter
    values; call grad_check after a backward pass has filled the grads.
    Coordinates are sampled for large tensors. The relative error uses a
    denominator floor of 1e-4 so that coordinates whose true gradient is
    zero are judged against the finite-difference noise floor instead of
    dividing by ~0. Run in float64.
    """
    rng = rng or np.random.default_rng(0)
    worst = (0.0, "", 0)
    per_param: dict[str, float] = {}
    for p in params:
        if p.value.dtype != np.float64:
            raise NumericError(f"grad_check requires float64 parameters, got {p.value.dtype} in {p.name}")
        flat = p.value.reshape(-1)
        grad = p.grad.reshape(-1)
        n = flat.size
        idxs = np.arange(n) if n <= max_coords else rng.choice(n, size=max_coords, replace=False)
        worst_here = 0.0
        for idx in idxs:
            orig = flat[idx]
            flat[idx] = orig + h
            fp = f()
            flat[idx] = orig - h
            fm = f()
            flat[idx] = orig
            numeric = (fp - fm) / (2.0 * h)
            analytic = grad[idx]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-4)
            if rel > worst_here:
                worst_here = rel
            if rel > worst[0]:
                worst = (rel, p.name, int(idx))
        per_param[p.name] = worst_here
    return GradCheckResult(worst[0], worst[1], worst[2], per_param)
