"""Shallow dense autoencoder, written from scratch on numpy.

Architecture: input -> N_h (tanh) -> f_h (tanh) -> N_h (tanh) -> input
(linear). Trained with minibatch Adam on mean-squared reconstruction error
plus an L2 penalty on the two hidden-layer weight matrices (L1, L3). The
feature layer, the dimension-recovering output layer, and all biases are
not penalized: with the output weights free, the decoder can amplify
small structured bottleneck activations, which is what keeps the features
informative under a penalty this strong. Penalizing the output matrix as
well collapses the whole network onto the constant (mean-landscape)
predictor. The f_h activations of the middle layer are the extracted
features.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError, ShapeError, TrainingDivergedError
from .seeds import derive_seed

_MAGIC = b"MCTN"
_VERSION = 1


@dataclass(frozen=True)
class ArchitectureSpec:
    input_dim: int
    n_hidden: int
    n_features: int

    def __post_init__(self):
        if not (self.input_dim > self.n_hidden > self.n_features >= 1):
            raise ParameterError(
                "need input_dim > n_hidden > n_features >= 1, got "
                f"({self.input_dim}, {self.n_hidden}, {self.n_features})"
            )

    @property
    def label(self) -> str:
        return f"{self.n_hidden}x{self.n_features}"


@dataclass
class NetworkParams:
    """The four dense layers; weights are (fan_in, fan_out), x @ w + b."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    w4: np.ndarray
    b4: np.ndarray

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2,
                self.w3, self.b3, self.w4, self.b4)

    def weights(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.w2, self.w3, self.w4)

    def regularized_weights(self) -> tuple[np.ndarray, ...]:
        # the encoder/decoder hidden layers; see the module docstring
        return (self.w1, self.w3)

    @property
    def spec(self) -> ArchitectureSpec:
        return ArchitectureSpec(self.w1.shape[0], self.w1.shape[1], self.w2.shape[1])

    def copy(self) -> "NetworkParams":
        return NetworkParams(*(a.copy() for a in self.arrays()))

    @classmethod
    def zeros(cls, spec: ArchitectureSpec) -> "NetworkParams":
        d, nh, nf = spec.input_dim, spec.n_hidden, spec.n_features
        return cls(
            np.zeros((d, nh)), np.zeros(nh),
            np.zeros((nh, nf)), np.zeros(nf),
            np.zeros((nf, nh)), np.zeros(nh),
            np.zeros((nh, d)), np.zeros(d),
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.001
    l2_alpha: float = 0.005
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("epochs and batch_size must be >= 1")
        if not self.learning_rate > 0 or self.l2_alpha < 0:
            raise ParameterError("need learning_rate > 0 and l2_alpha >= 0")


@dataclass
class TrainReport:
    """Post-epoch losses: training includes the L2 term, validation does not."""

    train_loss: np.ndarray
    val_loss: np.ndarray


@dataclass
class AdamState:
    m: NetworkParams
    v: NetworkParams
    t: int = 0

    @classmethod
    def zeros(cls, spec: ArchitectureSpec) -> "AdamState":
        return cls(NetworkParams.zeros(spec), NetworkParams.zeros(spec))


def init_network(spec: ArchitectureSpec, seed: int) -> NetworkParams:
    """Uniform fan-based (Glorot) weight init, zero biases, seeded."""
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    d, nh, nf = spec.input_dim, spec.n_hidden, spec.n_features
    shapes = [(d, nh), (nh, nf), (nf, nh), (nh, d)]
    arrays = []
    for fan_in, fan_out in shapes:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        arrays.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        arrays.append(np.zeros(fan_out))
    return NetworkParams(*arrays)


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ShapeError("input must be a vector or a (batch, pixels) matrix")


def forward(params: NetworkParams, x):
    """Full pass; returns (reconstruction, features, cache).

    The cache holds the per-layer activations needed by backpropagation.
    """
    xb, single = _as_batch(x)
    if xb.shape[1] != params.w1.shape[0]:
        raise ShapeError(
            f"input has {xb.shape[1]} pixels, network expects {params.w1.shape[0]}"
        )
    a1 = np.tanh(xb @ params.w1 + params.b1)
    a2 = np.tanh(a1 @ params.w2 + params.b2)
    a3 = np.tanh(a2 @ params.w3 + params.b3)
    y = a3 @ params.w4 + params.b4
    cache = (xb, a1, a2, a3, y)
    if single:
        return y[0], a2[0], cache
    return y, a2, cache


def extract_features(params: NetworkParams, x) -> np.ndarray:
    """Encoder half only: tanh(L2(tanh(L1(x))))."""
    xb, single = _as_batch(x)
    if xb.shape[1] != params.w1.shape[0]:
        raise ShapeError(
            f"input has {xb.shape[1]} pixels, network expects {params.w1.shape[0]}"
        )
    a1 = np.tanh(xb @ params.w1 + params.b1)
    a2 = np.tanh(a1 @ params.w2 + params.b2)
    return a2[0] if single else a2


def loss(params: NetworkParams, batch, l2_alpha: float) -> float:
    """Mean over batch and pixels of squared error, plus alpha * sum(w^2)
    over the regularized (hidden-layer) weight matrices."""
    xb, _ = _as_batch(batch)
    if xb.shape[0] < 1:
        raise ParameterError("batch is empty")
    y, _, _ = forward(params, xb)
    mse = float(np.mean((y - xb) ** 2))
    reg = float(sum(np.sum(w * w) for w in params.regularized_weights()))
    return mse + l2_alpha * reg


def _backward_mse_into(params: NetworkParams, xb: np.ndarray,
                       grads: NetworkParams) -> float:
    """Backprop of the plain MSE term into preallocated gradient buffers.

    Returns the batch MSE. The L2 contribution is not added here; the
    training loop folds it into the optimizer update, and gradient() adds it
    explicitly.
    """
    n, d = xb.shape
    a1 = np.tanh(xb @ params.w1 + params.b1)
    a2 = np.tanh(a1 @ params.w2 + params.b2)
    a3 = np.tanh(a2 @ params.w3 + params.b3)
    diff = a3 @ params.w4
    diff += params.b4
    diff -= xb
    flat = diff.reshape(-1)
    mse = float(np.dot(flat, flat)) / (n * d)

    d4 = diff
    d4 *= 2.0 / (n * d)
    np.matmul(a3.T, d4, out=grads.w4)
    np.sum(d4, axis=0, out=grads.b4)
    d3 = (d4 @ params.w4.T) * (1.0 - a3 * a3)
    np.matmul(a2.T, d3, out=grads.w3)
    np.sum(d3, axis=0, out=grads.b3)
    d2 = (d3 @ params.w3.T) * (1.0 - a2 * a2)
    np.matmul(a1.T, d2, out=grads.w2)
    np.sum(d2, axis=0, out=grads.b2)
    d1 = (d2 @ params.w2.T) * (1.0 - a1 * a1)
    np.matmul(xb.T, d1, out=grads.w1)
    np.sum(d1, axis=0, out=grads.b1)
    return mse


def gradient(params: NetworkParams, batch, l2_alpha: float) -> NetworkParams:
    """Exact gradient of loss(params, batch, l2_alpha) w.r.t. every parameter."""
    xb, _ = _as_batch(batch)
    if xb.shape[0] < 1:
        raise ParameterError("batch is empty")
    grads = NetworkParams(*[np.empty_like(a) for a in params.arrays()])
    _backward_mse_into(params, xb, grads)
    if l2_alpha != 0.0:
        for gw, w in zip(grads.regularized_weights(),
                         params.regularized_weights()):
            gw += 2.0 * l2_alpha * w
    return grads


def _adam_update_numpy(p, g, m, v, b1, b2, scale, inv_sqrt_c2, eps, l2_two_alpha):
    geff = g + l2_two_alpha * p if l2_two_alpha != 0.0 else g
    m *= b1
    m += (1.0 - b1) * geff
    v *= b2
    v += (1.0 - b2) * (geff * geff)
    denom = np.sqrt(v)
    denom *= inv_sqrt_c2
    denom += eps
    p -= (m / denom) * scale


_adam_update = None


def _get_adam_update():
    """Fused single-pass Adam+L2 update; these parameter blocks are tens of
    megabytes, so per-step numpy temporaries are what dominates training
    time. Compiled with numba when available, numpy fallback otherwise
    (same operations in the same order)."""
    global _adam_update
    if _adam_update is None:
        try:
            from numba import njit

            @njit(cache=True)
            def kernel(p, g, m, v, b1, b2, scale, inv_sqrt_c2, eps,
                       l2_two_alpha):
                for i in range(p.size):
                    gi = g[i] + l2_two_alpha * p[i]
                    mi = b1 * m[i] + (1.0 - b1) * gi
                    vi = b2 * v[i] + (1.0 - b2) * (gi * gi)
                    m[i] = mi
                    v[i] = vi
                    p[i] = p[i] - (mi / (np.sqrt(vi) * inv_sqrt_c2 + eps)) * scale

            _adam_update = kernel
        except ImportError:
            _adam_update = _adam_update_numpy
    return _adam_update


def _apply_adam(state: AdamState, params: NetworkParams, grads: NetworkParams,
                config: TrainConfig, l2_alpha: float) -> None:
    state.t += 1
    update = _get_adam_update()
    scale = config.learning_rate / (1.0 - config.adam_beta1**state.t)
    inv_sqrt_c2 = 1.0 / np.sqrt(1.0 - config.adam_beta2**state.t)
    regularized = set(id(w) for w in params.regularized_weights())
    for p, g, m, v in zip(params.arrays(), grads.arrays(),
                          state.m.arrays(), state.v.arrays()):
        l2_two_alpha = 2.0 * l2_alpha if id(p) in regularized else 0.0
        update(p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
               config.adam_beta1, config.adam_beta2, scale, inv_sqrt_c2,
               config.adam_eps, l2_two_alpha)


def adam_step(state: AdamState, params: NetworkParams, grads: NetworkParams,
              config: TrainConfig):
    """One bias-corrected Adam update of every parameter. Mutates params and
    state in place; the gradients are consumed as given."""
    _apply_adam(state, params, grads, config, l2_alpha=0.0)
    return params, state


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        return np.asarray(data, dtype=np.float64)
    # sequence of Landscape objects or pixel vectors
    return np.stack([np.asarray(getattr(item, "pixels", item), dtype=np.float64)
                     for item in data])


def train(ae_train, ae_val, spec: ArchitectureSpec, config: TrainConfig):
    """Minibatch Adam training; returns (params, TrainReport).

    Each epoch reshuffles the training set with the seeded generator and
    takes one Adam step per batch (the trailing batch may be smaller).
    Training loss is recorded with the L2 term, validation loss without it,
    so the validation numbers measure reconstruction alone.
    """
    x_train = _as_matrix(ae_train)
    x_val = _as_matrix(ae_val)
    if x_train.shape[0] < 1 or x_val.shape[0] < 1:
        raise ParameterError("training and validation sets must be non-empty")

    params = init_network(spec, derive_seed(config.seed, "init"))
    state = AdamState.zeros(spec)
    grads = NetworkParams(*[np.empty_like(a) for a in params.arrays()])
    rng = np.random.default_rng(derive_seed(config.seed, "shuffle"))

    n = x_train.shape[0]
    train_curve = np.empty(config.epochs)
    val_curve = np.empty(config.epochs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for bi, start in enumerate(range(0, n, config.batch_size)):
            batch = x_train[order[start:start + config.batch_size]]
            batch_mse = _backward_mse_into(params, batch, grads)
            if not np.isfinite(batch_mse):
                raise TrainingDivergedError(epoch, bi)
            _apply_adam(state, params, grads, config, config.l2_alpha)
        train_curve[epoch] = loss(params, x_train, config.l2_alpha)
        val_curve[epoch] = loss(params, x_val, 0.0)
        if not (np.isfinite(train_curve[epoch]) and np.isfinite(val_curve[epoch])):
            raise TrainingDivergedError(epoch, None)
    return params, TrainReport(train_curve, val_curve)


def ensemble_specs(input_dim: int = 10000) -> list[ArchitectureSpec]:
    """The 40 ensemble architectures: hidden nodes 190..100 step -10 (outer,
    descending), features 40..10 step -10 (inner, descending)."""
    return [
        ArchitectureSpec(input_dim, nh, nf)
        for nh in range(190, 99, -10)
        for nf in (40, 30, 20, 10)
    ]


# ---------------------------------------------------------------------------
# Persistence. Network file: magic "MCTN", u32 version, u64 metadata length,
# UTF-8 JSON metadata, then w1,b1,w2,b2,w3,b3,w4,b4 as row-major float64.
# ---------------------------------------------------------------------------


def save_network(params: NetworkParams, path, config: TrainConfig | None = None,
                 extra: dict | None = None) -> None:
    spec = params.spec
    meta = {
        "input_dim": spec.input_dim,
        "n_hidden": spec.n_hidden,
        "n_features": spec.n_features,
    }
    if config is not None:
        meta["config"] = {
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "l2_alpha": config.l2_alpha,
            "adam_beta1": config.adam_beta1,
            "adam_beta2": config.adam_beta2,
            "adam_eps": config.adam_eps,
            "seed": config.seed,
        }
    if extra:
        meta.update(extra)
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for a in params.arrays():
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_network(path) -> tuple[NetworkParams, dict]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise FormatError("bad magic at offset 0")
    if len(raw) < 16:
        raise FormatError(f"truncated header at offset {len(raw)}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    (meta_len,) = struct.unpack_from("<Q", raw, 8)
    off = 16
    if len(raw) < off + meta_len:
        raise FormatError(f"truncated metadata at offset {len(raw)}")
    try:
        meta = json.loads(raw[off:off + meta_len].decode("utf-8"))
        spec = ArchitectureSpec(meta["input_dim"], meta["n_hidden"],
                                meta["n_features"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"unreadable metadata at offset {off}: {exc}") from None
    off += meta_len

    d, nh, nf = spec.input_dim, spec.n_hidden, spec.n_features
    shapes = [(d, nh), (nh,), (nh, nf), (nf,), (nf, nh), (nh,), (nh, d), (d,)]
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape))
        end = off + 8 * count
        if len(raw) < end:
            raise FormatError(f"truncated layer data at offset {len(raw)}")
        arrays.append(np.frombuffer(raw, dtype="<f8", count=count,
                                    offset=off).reshape(shape).copy())
        off = end
    if off != len(raw):
        raise FormatError(f"trailing data at offset {off}")
    return NetworkParams(*arrays), meta
