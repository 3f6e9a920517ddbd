"""Two-layer LSTM regressor implemented directly on numpy arrays.

Forward pass, backpropagation through time, inverted dropout, and Adam are
all written out here rather than delegated to a framework, in float64 so the
gradients can be checked against finite differences. The network reads a
window of W timesteps and predicts a single scalar from the final hidden
state of the top layer through a dense head.

Conventions:
  - gates are ordered (input, forget, output, candidate) wherever they are
    stacked into a fused matrix;
  - dropout is applied to each LSTM layer's output sequence before it feeds
    the layer above (the dense head included); the recurrent path inside a
    layer always sees the undropped state;
  - masks are redrawn once per mini-batch and shared across timesteps.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DataError, DivergenceError
from .frame import WindowedDataset

__all__ = [
    "LstmConfig",
    "LstmCellWeights",
    "LstmNetwork",
    "AdamState",
    "TrainingHistory",
    "init_network",
    "cell_forward",
    "forward",
    "mse_loss",
    "backward",
    "adam_step",
    "train",
    "predict_series",
    "save_checkpoint",
    "load_checkpoint",
]

GATES = ("i", "f", "o", "g")
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LstmConfig:
    input_size: int
    hidden_size: int = 64
    num_layers: int = 2
    dropout_rate: float = 0.20
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.input_size < 1:
            raise ValueError("input_size must be >= 1")
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0 <= self.patience <= self.max_epochs:
            raise ValueError("patience must be in [0, max_epochs]")

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "dropout_rate": self.dropout_rate,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
        }


@dataclass
class LstmCellWeights:
    """Per-gate parameter arrays: W maps layer input, U maps previous hidden."""

    w_i: np.ndarray
    u_i: np.ndarray
    b_i: np.ndarray
    w_f: np.ndarray
    u_f: np.ndarray
    b_f: np.ndarray
    w_o: np.ndarray
    u_o: np.ndarray
    b_o: np.ndarray
    w_g: np.ndarray
    u_g: np.ndarray
    b_g: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, f"{kind}_{gate}") for gate in GATES for kind in ("w", "u", "b")]

    def fused(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(W, U, b) with the four gates stacked along the first axis."""
        w = np.concatenate([self.w_i, self.w_f, self.w_o, self.w_g], axis=0)
        u = np.concatenate([self.u_i, self.u_f, self.u_o, self.u_g], axis=0)
        b = np.concatenate([self.b_i, self.b_f, self.b_o, self.b_g])
        return w, u, b


@dataclass
class LstmNetwork:
    layers: list[LstmCellWeights]
    dense_w: np.ndarray
    dense_b: np.ndarray  # shape (1,)
    config: LstmConfig

    def parameters(self) -> list[np.ndarray]:
        """All trainable arrays in a fixed order (update in place to train)."""
        out: list[np.ndarray] = []
        for layer in self.layers:
            out.extend(layer.arrays())
        out.append(self.dense_w)
        out.append(self.dense_b)
        return out


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


@dataclass(frozen=True)
class TrainingHistory:
    train_losses: tuple[float, ...]
    val_losses: tuple[float, ...]
    best_epoch: int


def _rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    init_ss, train_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(train_ss)


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_network(config: LstmConfig) -> LstmNetwork:
    """Fresh network with fan-scaled uniform weights and forget biases at 1."""
    rng, _ = _rng_streams(config.seed)
    h = config.hidden_size
    layers = []
    for layer_idx in range(config.num_layers):
        d = config.input_size if layer_idx == 0 else h
        fields = {}
        for gate in GATES:
            fields[f"w_{gate}"] = _glorot(rng, h, d)
            fields[f"u_{gate}"] = _glorot(rng, h, h)
            fields[f"b_{gate}"] = np.ones(h) if gate == "f" else np.zeros(h)
        layers.append(LstmCellWeights(**fields))
    dense_w = _glorot(rng, h, 1)[:, 0]
    dense_b = np.zeros(1)
    return LstmNetwork(layers=layers, dense_w=dense_w, dense_b=dense_b, config=config)


def cell_forward(weights: LstmCellWeights, x_t, h_prev, c_prev):
    """One LSTM step. Returns (h_t, c_t, cache) with cache kept for backprop."""
    x_t = np.asarray(x_t, dtype=float)
    h_prev = np.asarray(h_prev, dtype=float)
    c_prev = np.asarray(c_prev, dtype=float)
    i = expit(weights.w_i @ x_t + weights.u_i @ h_prev + weights.b_i)
    f = expit(weights.w_f @ x_t + weights.u_f @ h_prev + weights.b_f)
    o = expit(weights.w_o @ x_t + weights.u_o @ h_prev + weights.b_o)
    g = np.tanh(weights.w_g @ x_t + weights.u_g @ h_prev + weights.b_g)
    c_t = f * c_prev + i * g
    tc = np.tanh(c_t)
    h_t = o * tc
    if not (np.all(np.isfinite(h_t)) and np.all(np.isfinite(c_t))):
        raise DivergenceError("non-finite LSTM activations")
    cache = {"x": x_t, "h_prev": h_prev, "c_prev": c_prev, "i": i, "f": f, "o": o, "g": g, "c": c_t, "tc": tc}
    return h_t, c_t, cache


def _draw_masks(config: LstmConfig, rng: np.random.Generator | None) -> list[np.ndarray | None]:
    if config.dropout_rate == 0.0:
        return [None] * config.num_layers
    if rng is None:
        raise ValueError("train-mode forward with dropout needs an RNG")
    keep = 1.0 - config.dropout_rate
    return [(rng.random(config.hidden_size) < keep) / keep for _ in range(config.num_layers)]


def _forward_batch(network: LstmNetwork, x: np.ndarray, masks: list[np.ndarray | None], need_cache: bool):
    """Batched forward over windows x of shape (batch, W, features).

    Returns (predictions (batch,), caches). The per-layer python loop only
    covers the recurrent part; input-side projections are one matmul.
    """
    b, w_steps, _ = x.shape
    h_size = network.config.hidden_size
    caches = []
    layer_input = x
    for layer_idx, layer in enumerate(network.layers):
        w_fused, u_fused, b_fused = layer.fused()
        d = layer_input.shape[2]
        zx = layer_input.reshape(b * w_steps, d) @ w_fused.T + b_fused
        zx = zx.reshape(b, w_steps, 4 * h_size)
        h = np.zeros((b, h_size))
        c = np.zeros((b, h_size))
        gates_i = np.empty((b, w_steps, h_size))
        gates_f = np.empty((b, w_steps, h_size))
        gates_o = np.empty((b, w_steps, h_size))
        gates_g = np.empty((b, w_steps, h_size))
        c_seq = np.empty((b, w_steps, h_size))
        tc_seq = np.empty((b, w_steps, h_size))
        h_seq = np.empty((b, w_steps, h_size))
        for t in range(w_steps):
            a = zx[:, t, :] + h @ u_fused.T
            i = expit(a[:, :h_size])
            f = expit(a[:, h_size : 2 * h_size])
            o = expit(a[:, 2 * h_size : 3 * h_size])
            g = np.tanh(a[:, 3 * h_size :])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            gates_i[:, t] = i
            gates_f[:, t] = f
            gates_o[:, t] = o
            gates_g[:, t] = g
            c_seq[:, t] = c
            tc_seq[:, t] = tc
            h_seq[:, t] = h
        mask = masks[layer_idx]
        dropped = h_seq if mask is None else h_seq * mask
        if need_cache:
            caches.append(
                {
                    "x": layer_input,
                    "i": gates_i,
                    "f": gates_f,
                    "o": gates_o,
                    "g": gates_g,
                    "c": c_seq,
                    "tc": tc_seq,
                    "h": h_seq,
                    "mask": mask,
                }
            )
        layer_input = dropped
    preds = layer_input[:, -1, :] @ network.dense_w + network.dense_b[0]
    if need_cache:
        return preds, {"layers": caches, "dense_in": layer_input[:, -1, :], "batch": b}
    return preds, None


def forward(network: LstmNetwork, window, mode: str = "eval", rng: np.random.Generator | None = None):
    """Single-window forward pass. Returns (prediction, caches).

    In train mode inverted dropout runs with masks drawn from `rng`; eval
    mode never touches the RNG and applies no scaling.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[1] != network.config.input_size:
        raise DataError(
            f"window shape {window.shape} does not match input size {network.config.input_size}"
        )
    if mode == "train":
        masks = _draw_masks(network.config, rng)
    else:
        masks = [None] * network.config.num_layers
    preds, caches = _forward_batch(network, window[None, :, :], masks, need_cache=True)
    return float(preds[0]), caches


def mse_loss(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise DataError(f"shape mismatch: {predictions.shape} vs {targets.shape}")
    if predictions.size == 0:
        raise DataError("empty prediction vector")
    diff = predictions - targets
    return float(np.mean(diff * diff))


def backward(network: LstmNetwork, caches: dict, dloss_dpred) -> list[np.ndarray]:
    """Gradients for every parameter, ordered like network.parameters().

    `dloss_dpred` is the loss gradient with respect to each window's scalar
    prediction (shape (batch,)).
    """
    dpred = np.asarray(dloss_dpred, dtype=float)
    layer_caches = caches["layers"]
    if len(layer_caches) != len(network.layers):
        raise DataError("cache does not match network depth")
    b, w_steps, h_size = layer_caches[0]["h"].shape
    if dpred.shape != (b,):
        raise DataError(f"loss gradient shape {dpred.shape} does not match batch {b}")

    d_dense_w = caches["dense_in"].T @ dpred
    d_dense_b = np.array([dpred.sum()])
    # gradient w.r.t. the top layer's (dropped) output: dense head reads the
    # last timestep only
    d_out = np.zeros((b, w_steps, h_size))
    d_out[:, -1, :] = dpred[:, None] * network.dense_w

    grads_per_layer: list[list[np.ndarray]] = []
    for layer, cache in zip(reversed(network.layers), reversed(layer_caches)):
        mask = cache["mask"]
        dh_seq = d_out if mask is None else d_out * mask
        w_fused, u_fused, _ = layer.fused()
        h_prev_seq = np.concatenate([np.zeros((b, 1, h_size)), cache["h"][:, :-1]], axis=1)
        c_prev_seq = np.concatenate([np.zeros((b, 1, h_size)), cache["c"][:, :-1]], axis=1)
        da_seq = np.empty((b, w_steps, 4 * h_size))
        dh_rec = np.zeros((b, h_size))
        dc_rec = np.zeros((b, h_size))
        for t in range(w_steps - 1, -1, -1):
            i = cache["i"][:, t]
            f = cache["f"][:, t]
            o = cache["o"][:, t]
            g = cache["g"][:, t]
            tc = cache["tc"][:, t]
            dh = dh_seq[:, t] + dh_rec
            dc = dh * o * (1.0 - tc * tc) + dc_rec
            da = np.empty((b, 4 * h_size))
            da[:, :h_size] = dc * g * i * (1.0 - i)
            da[:, h_size : 2 * h_size] = dc * c_prev_seq[:, t] * f * (1.0 - f)
            da[:, 2 * h_size : 3 * h_size] = dh * tc * o * (1.0 - o)
            da[:, 3 * h_size :] = dc * i * (1.0 - g * g)
            da_seq[:, t] = da
            dh_rec = da @ u_fused
            dc_rec = dc * f
        x = cache["x"]
        d = x.shape[2]
        dw_fused = da_seq.reshape(b * w_steps, 4 * h_size).T @ x.reshape(b * w_steps, d)
        du_fused = np.einsum("btk,bth->kh", da_seq, h_prev_seq)
        db_fused = da_seq.sum(axis=(0, 1))
        d_out = (da_seq.reshape(b * w_steps, 4 * h_size) @ w_fused).reshape(b, w_steps, d)
        layer_grads = []
        for gate_idx in range(4):
            sl = slice(gate_idx * h_size, (gate_idx + 1) * h_size)
            layer_grads.extend([dw_fused[sl], du_fused[sl], db_fused[sl]])
        grads_per_layer.append(layer_grads)

    out: list[np.ndarray] = []
    for layer_grads in reversed(grads_per_layer):
        out.extend(layer_grads)
    out.append(d_dense_w)
    out.append(d_dense_b)
    return out


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, lr: float) -> AdamState:
    """One Adam update, modifying `params` in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter, gradient, and state lengths disagree")
    state.t += 1
    correction1 = 1.0 - state.beta1**state.t
    correction2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


def _eval_mse(network: LstmNetwork, inputs: np.ndarray, targets: np.ndarray, chunk: int = 512) -> float:
    none_masks = [None] * network.config.num_layers
    total = 0.0
    for start in range(0, len(inputs), chunk):
        stop = min(start + chunk, len(inputs))
        preds, _ = _forward_batch(network, inputs[start:stop], none_masks, need_cache=False)
        diff = preds - targets[start:stop]
        total += float(diff @ diff)
    return total / len(inputs)


def _clone_params(params: list[np.ndarray]) -> list[np.ndarray]:
    return [p.copy() for p in params]


def train(network: LstmNetwork, train_set: WindowedDataset, val_set: WindowedDataset | None, config: LstmConfig):
    """Mini-batch Adam training with early stopping on validation MSE.

    Windows are visited in a seeded random permutation each epoch; dropout
    masks are redrawn per batch. When a validation set is supplied the
    parameters of the best validation epoch are restored at the end, and
    training stops after `patience` epochs without improvement. Returns
    (network, TrainingHistory); the network is updated in place.
    """
    if len(train_set.targets) == 0:
        raise DataError("empty training set")
    x_train = np.asarray(train_set.inputs, dtype=float)
    y_train = np.asarray(train_set.targets, dtype=float)
    if x_train.shape[2] != config.input_size:
        raise DataError(
            f"training windows have {x_train.shape[2]} features, config expects {config.input_size}"
        )
    has_val = val_set is not None and len(val_set.targets) > 0
    if has_val:
        x_val = np.asarray(val_set.inputs, dtype=float)
        y_val = np.asarray(val_set.targets, dtype=float)

    _, rng = _rng_streams(config.seed)
    params = network.parameters()
    state = AdamState.for_params(params)
    n = len(y_train)
    train_losses: list[float] = []
    val_losses: list[float] = []
    best_val = np.inf
    best_epoch = -1
    best_params: list[np.ndarray] | None = None
    bad_epochs = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        sq_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb = x_train[idx]
            yb = y_train[idx]
            masks = _draw_masks(config, rng)
            preds, caches = _forward_batch(network, xb, masks, need_cache=True)
            diff = preds - yb
            batch_sq = float(diff @ diff)
            if not np.isfinite(batch_sq):
                raise DivergenceError(f"non-finite training loss in epoch {epoch}", epoch=epoch)
            sq_sum += batch_sq
            dpred = (2.0 / len(yb)) * diff
            grads = backward(network, caches, dpred)
            adam_step(params, grads, state, config.learning_rate)
        train_losses.append(sq_sum / n)

        if has_val:
            val_mse = _eval_mse(network, x_val, y_val)
            if not np.isfinite(val_mse):
                raise DivergenceError(f"non-finite validation loss in epoch {epoch}", epoch=epoch)
            val_losses.append(val_mse)
            if val_mse < best_val:
                best_val = val_mse
                best_epoch = epoch
                best_params = _clone_params(params)
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs >= max(config.patience, 1):
                    break
        else:
            val_losses.append(float("nan"))

    if has_val and best_params is not None:
        for p, saved in zip(params, best_params):
            p[...] = saved
    else:
        best_epoch = len(train_losses) - 1
    history = TrainingHistory(
        train_losses=tuple(train_losses),
        val_losses=tuple(val_losses),
        best_epoch=best_epoch,
    )
    return network, history


def predict_series(network: LstmNetwork, test_set: WindowedDataset) -> np.ndarray:
    """Eval-mode one-step predictions for every window, aligned with targets."""
    inputs = np.asarray(test_set.inputs, dtype=float)
    if inputs.shape[2] != network.config.input_size:
        raise DataError(
            f"windows have {inputs.shape[2]} features, network expects {network.config.input_size}"
        )
    none_masks = [None] * network.config.num_layers
    chunks = []
    for start in range(0, len(inputs), 512):
        preds, _ = _forward_batch(network, inputs[start : start + 512], none_masks, need_cache=False)
        chunks.append(preds)
    return np.concatenate(chunks)


def save_checkpoint(network: LstmNetwork, path, state: AdamState | None = None) -> None:
    """Write a .npz checkpoint.

    Layout: `meta` holds a JSON string with {version, config, has_adam,
    adam_t}; each weight is stored under layer{L}_{w|u|b}_{i|f|o|g}, the head
    under dense_w / dense_b, and Adam moments (when present) under
    adam_m{k} / adam_v{k} in parameter order. float64 throughout, so a
    save/load round trip is bit-exact.
    """
    arrays: dict[str, np.ndarray] = {}
    for layer_idx, layer in enumerate(network.layers):
        for gate in GATES:
            for kind in ("w", "u", "b"):
                arrays[f"layer{layer_idx}_{kind}_{gate}"] = getattr(layer, f"{kind}_{gate}")
    arrays["dense_w"] = network.dense_w
    arrays["dense_b"] = network.dense_b
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": network.config.to_dict(),
        "has_adam": state is not None,
        "adam_t": 0 if state is None else state.t,
    }
    if state is not None:
        for k, (m, v) in enumerate(zip(state.m, state.v)):
            arrays[f"adam_m{k}"] = m
            arrays[f"adam_v{k}"] = v
    buf = io.BytesIO()
    np.savez(buf, meta=np.array(json.dumps(meta)), **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint.

    Returns (network, adam_state_or_None).
    """
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise DataError(f"unsupported checkpoint version {meta['version']}")
        config = LstmConfig(**meta["config"])
        layers = []
        for layer_idx in range(config.num_layers):
            fields = {}
            for gate in GATES:
                for kind in ("w", "u", "b"):
                    fields[f"{kind}_{gate}"] = data[f"layer{layer_idx}_{kind}_{gate}"]
            layers.append(LstmCellWeights(**fields))
        network = LstmNetwork(
            layers=layers,
            dense_w=data["dense_w"],
            dense_b=data["dense_b"],
            config=config,
        )
        state = None
        if meta["has_adam"]:
            params = network.parameters()
            state = AdamState(
                m=[data[f"adam_m{k}"] for k in range(len(params))],
                v=[data[f"adam_v{k}"] for k in range(len(params))],
                t=int(meta["adam_t"]),
            )
    return network, state
