"""From-scratch word-composition network and its SGD trainer.

Architecture: each word's one-hot goes through a two-layer perceptron shared
across positions, the output is LayerNorm-ed into a word embedding, the L
embeddings are concatenated, and a second two-layer perceptron produces the
category logits. Trained with plain constant-rate SGD on cross-entropy until
the mean training loss reaches a target.

Implemented directly on numpy arrays; the word one-hot never materializes in
the forward pass (the first layer is a row gather).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .datamodel import ModelParams, TrainingSet

_CHECKPOINT_MAGIC = b"LTLNET01"


class TrainingDivergence(RuntimeError):
    """Raised when the training loss becomes non-finite."""


@dataclass(frozen=True)
class NetworkConfig:
    """Sizes and optimizer settings.

    d_in is the vocabulary size, d_out the category count; the second
    perceptron's input width is L * d_embed.
    """

    d_in: int
    d_out: int
    L: int
    d_hidden1: int = 500
    d_embed: int = 10
    d_hidden2: int = 2000
    lr: float = 0.01
    batch_size: int = 100
    loss_target: float = 1e-4
    max_epochs: int = 2000
    ln_eps: float = 1e-5
    dtype: str = "float32"

    def __post_init__(self) -> None:
        for name in ("d_in", "d_out", "L", "d_hidden1", "d_embed", "d_hidden2", "batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.lr < 0 or self.loss_target <= 0 or self.ln_eps <= 0:
            raise ValueError("lr must be >= 0; loss_target and ln_eps must be > 0")

    @classmethod
    def for_params(cls, params: ModelParams, **overrides) -> "NetworkConfig":
        return cls(d_in=params.n_w, d_out=params.R, L=params.L, **overrides)

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


@dataclass(eq=False)
class Network:
    """Parameter blocks, in declaration order: word perceptron (W1, b1, W2,
    b2), LayerNorm gain/bias, mixer perceptron (W3, b3, W4, b4)."""

    config: NetworkConfig
    W1: np.ndarray  # (d_in, d_hidden1)
    b1: np.ndarray  # (d_hidden1,)
    W2: np.ndarray  # (d_hidden1, d_embed)
    b2: np.ndarray  # (d_embed,)
    ln_gain: np.ndarray  # (d_embed,)
    ln_bias: np.ndarray  # (d_embed,)
    W3: np.ndarray  # (L * d_embed, d_hidden2)
    b3: np.ndarray  # (d_hidden2,)
    W4: np.ndarray  # (d_hidden2, d_out)
    b4: np.ndarray  # (d_out,)

    PARAM_FIELDS = ("W1", "b1", "W2", "b2", "ln_gain", "ln_bias", "W3", "b3", "W4", "b4")

    def parameters(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.PARAM_FIELDS}


def init_network(cfg: NetworkConfig, rng: np.random.Generator) -> Network:
    """Fan-in-scaled uniform initialization; LayerNorm starts as identity."""
    dt = cfg.np_dtype

    def layer(fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
        bound = 1.0 / np.sqrt(fan_in)
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dt)
        b = rng.uniform(-bound, bound, size=fan_out).astype(dt)
        return W, b

    W1, b1 = layer(cfg.d_in, cfg.d_hidden1)
    W2, b2 = layer(cfg.d_hidden1, cfg.d_embed)
    W3, b3 = layer(cfg.L * cfg.d_embed, cfg.d_hidden2)
    W4, b4 = layer(cfg.d_hidden2, cfg.d_out)
    return Network(
        config=cfg,
        W1=W1, b1=b1, W2=W2, b2=b2,
        ln_gain=np.ones(cfg.d_embed, dtype=dt),
        ln_bias=np.zeros(cfg.d_embed, dtype=dt),
        W3=W3, b3=b3, W4=W4, b4=b4,
    )


def _forward_batch(net: Network, X: np.ndarray, want_cache: bool = False):
    """Logits for a batch of sentences X (B, L) of 1-based word ids.

    Returns (logits, cache); cache holds the intermediates backprop needs.
    """
    cfg = net.config
    B, L = X.shape
    words = X.reshape(-1) - 1  # (B*L,)
    H1pre = net.W1[words] + net.b1  # one-hot @ W1 is a row gather
    H1 = np.maximum(H1pre, 0.0)
    Z = H1 @ net.W2 + net.b2  # (B*L, d_embed)
    mu = Z.mean(axis=1, keepdims=True)
    Zc = Z - mu
    var = (Zc * Zc).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + cfg.ln_eps)
    Zhat = Zc * inv_std
    E = net.ln_gain * Zhat + net.ln_bias
    C = E.reshape(B, L * cfg.d_embed)
    H2pre = C @ net.W3 + net.b3
    H2 = np.maximum(H2pre, 0.0)
    logits = H2 @ net.W4 + net.b4
    if not want_cache:
        return logits, None
    cache = (words, H1pre, H1, Zhat, inv_std, C, H2pre, H2)
    return logits, cache


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Logits (length d_out) for a single sentence."""
    logits, _ = _forward_batch(net, np.asarray(x, dtype=np.int64).reshape(1, -1))
    return logits[0]


def features_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Concatenated word embeddings (B, L * d_embed): the representation
    feeding the mixer perceptron."""
    cfg = net.config
    B, L = X.shape
    words = np.asarray(X, dtype=np.int64).reshape(-1) - 1
    H1 = np.maximum(net.W1[words] + net.b1, 0.0)
    Z = H1 @ net.W2 + net.b2
    mu = Z.mean(axis=1, keepdims=True)
    Zc = Z - mu
    var = (Zc * Zc).mean(axis=1, keepdims=True)
    Zhat = Zc / np.sqrt(var + cfg.ln_eps)
    E = net.ln_gain * Zhat + net.ln_bias
    return E.reshape(B, L * cfg.d_embed)


def extract_features(net: Network, x: np.ndarray) -> np.ndarray:
    """Feature vector (length L * d_embed) for a single sentence."""
    return features_batch(net, np.asarray(x, dtype=np.int64).reshape(1, -1))[0]


def _softmax_cross_entropy(logits: np.ndarray, labels0: np.ndarray):
    """Mean cross-entropy and the logit gradient (softmax - onehot) / B."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=1, keepdims=True)
    B = logits.shape[0]
    picked = probs[np.arange(B), labels0]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    grad = probs
    grad[np.arange(B), labels0] -= 1.0
    grad /= B
    return loss, grad


def loss_and_grads(
    net: Network, X: np.ndarray, labels: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy on (X, labels) and gradients for every parameter
    block. Labels are 1-based category ids."""
    cfg = net.config
    B, L = X.shape
    D = cfg.d_embed
    labels0 = np.asarray(labels, dtype=np.int64) - 1
    logits, cache = _forward_batch(net, np.asarray(X, dtype=np.int64), want_cache=True)
    words, H1pre, H1, Zhat, inv_std, C, H2pre, H2 = cache

    loss, dlogits = _softmax_cross_entropy(logits, labels0)

    gW4 = H2.T @ dlogits
    gb4 = dlogits.sum(axis=0)
    dH2 = dlogits @ net.W4.T
    dH2pre = dH2 * (H2pre > 0)
    gW3 = C.T @ dH2pre
    gb3 = dH2pre.sum(axis=0)
    dC = dH2pre @ net.W3.T
    dE = dC.reshape(B * L, D)

    g_gain = (dE * Zhat).sum(axis=0)
    g_bias = dE.sum(axis=0)
    dZhat = dE * net.ln_gain
    # LayerNorm backward over the embedding axis
    dZ = inv_std * (
        dZhat
        - dZhat.mean(axis=1, keepdims=True)
        - Zhat * (dZhat * Zhat).mean(axis=1, keepdims=True)
    )

    gW2 = H1.T @ dZ
    gb2 = dZ.sum(axis=0)
    dH1 = dZ @ net.W2.T
    dH1pre = dH1 * (H1pre > 0)
    gb1 = dH1pre.sum(axis=0)
    onehot = np.zeros((B * L, cfg.d_in), dtype=net.W1.dtype)
    onehot[np.arange(B * L), words] = 1.0
    gW1 = onehot.T @ dH1pre

    grads = {
        "W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2,
        "ln_gain": g_gain, "ln_bias": g_bias,
        "W3": gW3, "b3": gb3, "W4": gW4, "b4": gb4,
    }
    return loss, grads


@dataclass
class TrainingLog:
    """Per-epoch mean training loss plus the stopping outcome."""

    epoch_losses: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def epochs(self) -> int:
        return len(self.epoch_losses)


def train_network(
    train: TrainingSet, cfg: NetworkConfig, rng: np.random.Generator
) -> tuple[Network, TrainingLog]:
    """Plain SGD (constant learning rate, shuffled mini-batches) on
    cross-entropy; stops once the epoch's mean loss reaches the target or the
    epoch cap is hit (the log records which)."""
    X, labels, _ = train.flat()
    net = init_network(cfg, rng)
    log = TrainingLog()
    n = X.shape[0]
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grads(net, X[idx], labels[idx])
            if not np.isfinite(loss):
                raise TrainingDivergence(f"non-finite loss at epoch {epoch + 1}")
            total += loss * len(idx)
            for name, g in grads.items():
                getattr(net, name)[...] -= cfg.lr * g
        mean_loss = total / n
        log.epoch_losses.append(mean_loss)
        if mean_loss <= cfg.loss_target:
            log.converged = True
            break
    return net, log


def evaluate_accuracy(net: Network, tests: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of test sentences whose argmax logit is uniquely the true
    category; an argmax tie counts as a failure."""
    logits, _ = _forward_batch(net, np.asarray(tests, dtype=np.int64))
    labels0 = np.asarray(labels, dtype=np.int64) - 1
    top = logits.max(axis=1, keepdims=True)
    at_top = logits == top
    unique = at_top.sum(axis=1) == 1
    correct = at_top[np.arange(len(labels0)), labels0] & unique
    return float(correct.mean())


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(net: Network, path: str) -> None:
    """Versioned binary layout: magic, config block, then each parameter
    block as little-endian float64 in declaration order."""
    cfg = net.config
    with open(path, "wb") as fp:
        fp.write(_CHECKPOINT_MAGIC)
        fp.write(
            struct.pack(
                "<8i3d",
                cfg.d_in, cfg.d_out, cfg.L,
                cfg.d_hidden1, cfg.d_embed, cfg.d_hidden2,
                cfg.batch_size, cfg.max_epochs,
                cfg.lr, cfg.loss_target, cfg.ln_eps,
            )
        )
        for name in Network.PARAM_FIELDS:
            arr = getattr(net, name).astype("<f8")
            fp.write(arr.tobytes())


def load_checkpoint(path: str, dtype: str = "float32") -> Network:
    """Read a checkpoint written by ``save_checkpoint``."""
    with open(path, "rb") as fp:
        magic = fp.read(len(_CHECKPOINT_MAGIC))
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"not a network checkpoint: bad magic {magic!r}")
        header = struct.unpack("<8i3d", fp.read(struct.calcsize("<8i3d")))
        d_in, d_out, L, d_h1, d_emb, d_h2, batch, max_epochs, lr, loss_target, ln_eps = header
        cfg = NetworkConfig(
            d_in=d_in, d_out=d_out, L=L,
            d_hidden1=d_h1, d_embed=d_emb, d_hidden2=d_h2,
            lr=lr, batch_size=batch, loss_target=loss_target,
            max_epochs=max_epochs, ln_eps=ln_eps, dtype=dtype,
        )
        shapes = {
            "W1": (d_in, d_h1), "b1": (d_h1,),
            "W2": (d_h1, d_emb), "b2": (d_emb,),
            "ln_gain": (d_emb,), "ln_bias": (d_emb,),
            "W3": (L * d_emb, d_h2), "b3": (d_h2,),
            "W4": (d_h2, d_out), "b4": (d_out,),
        }
        blocks = {}
        for name, shape in shapes.items():
            count = int(np.prod(shape))
            raw = fp.read(count * 8)
            if len(raw) != count * 8:
                raise ValueError(f"checkpoint truncated in block {name}")
            blocks[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(cfg.np_dtype)
        leftover = fp.read(1)
        if leftover:
            raise ValueError("trailing bytes after final parameter block")
    return Network(config=cfg, **blocks)
