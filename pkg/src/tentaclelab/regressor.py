"""Bidirectional LSTM regressor from pressure series to bending state.

Everything is plain numpy: forward pass, backpropagation through time,
and SGD-with-momentum training. The network is one bidirectional LSTM
layer followed by a tanh fully connected layer and a linear output
layer; inputs and targets are z-scored with statistics frozen at
training time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .fitting import FitReport, fit_report

__all__ = [
    "LabeledSequence",
    "TrainConfig",
    "RegressorWeights",
    "TrainingError",
    "forward",
    "loss",
    "gradients",
    "train",
    "evaluate",
    "save_weights",
    "load_weights",
]

WEIGHTS_SCHEMA = 1

# Parameter array names; per-direction LSTM blocks use the f/b prefix.
_PARAM_NAMES = ("Wf", "Uf", "bf", "Wb", "Ub", "bb", "W1", "b1", "W2", "b2")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LabeledSequence:
    """Aligned input/target series: (T, n_in) pressures, (T, 2) states."""

    inputs: np.ndarray
    targets: np.ndarray
    dt: float

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if x.ndim != 2 or y.ndim != 2:
            raise ValueError("inputs and targets must be 2-D arrays")
        if len(x) != len(y):
            raise ValueError("inputs and targets must have equal length")
        if len(x) < 2:
            raise ValueError("sequences need at least 2 steps")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sequence entries must be finite")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 0.01
    lr_decay: float = 0.85
    momentum: float = 0.8
    epochs: int = 35
    sequence_chunk: int = 200
    hidden: int = 32
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must lie in (0, 1]")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.sequence_chunk < 2:
            raise ValueError("sequence_chunk must be at least 2")
        if self.hidden < 1:
            raise ValueError("hidden size must be at least 1")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")


@dataclass
class RegressorWeights:
    """All network parameters plus frozen normalization statistics.

    LSTM gate blocks are stacked row-wise in i, f, g, o order: W* is
    (4H, n_in), U* is (4H, H), b* is (4H,); suffix f/b marks the
    forward/backward direction. Head: W1 (H, 2H) with tanh, W2
    (n_out, H) linear.
    """

    hidden: int
    params: dict = field(repr=False)
    in_mean: np.ndarray
    in_std: np.ndarray
    out_mean: np.ndarray
    out_std: np.ndarray

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden size must be at least 1")
        for name in _PARAM_NAMES:
            if name not in self.params:
                raise ValueError(f"missing parameter array {name}")
            if not np.all(np.isfinite(self.params[name])):
                raise ValueError(f"parameter {name} contains non-finite values")
        for arr in (self.in_std, self.out_std):
            if np.any(np.asarray(arr) <= 0):
                raise ValueError("normalization std components must be > 0")

    @property
    def n_in(self) -> int:
        return self.params["Wf"].shape[1]

    @property
    def n_out(self) -> int:
        return self.params["W2"].shape[0]


def init_weights(n_in: int, n_out: int, hidden: int, seed: int,
                 in_mean=None, in_std=None, out_mean=None,
                 out_std=None) -> RegressorWeights:
    """Seeded uniform init in +-1/sqrt(H) for every parameter."""
    rng = np.random.default_rng(seed)
    H = hidden
    lim = 1.0 / np.sqrt(H)
    shapes = {
        "Wf": (4 * H, n_in), "Uf": (4 * H, H), "bf": (4 * H,),
        "Wb": (4 * H, n_in), "Ub": (4 * H, H), "bb": (4 * H,),
        "W1": (H, 2 * H), "b1": (H,), "W2": (n_out, H), "b2": (n_out,),
    }
    params = {k: rng.uniform(-lim, lim, size=s) for k, s in shapes.items()}
    one = np.ones
    return RegressorWeights(
        hidden=H, params=params,
        in_mean=np.zeros(n_in) if in_mean is None else np.asarray(in_mean),
        in_std=one(n_in) if in_std is None else np.asarray(in_std),
        out_mean=np.zeros(n_out) if out_mean is None else np.asarray(out_mean),
        out_std=one(n_out) if out_std is None else np.asarray(out_std))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _lstm_pass(x, W, U, b, H):
    """Run one direction over (T, n_in); returns h (T, H) and caches."""
    T = len(x)
    h = np.zeros((T, H))
    cache = []
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    for t in range(T):
        z = W @ x[t] + U @ h_prev + b
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H:2 * H])
        g = np.tanh(z[2 * H:3 * H])
        o = _sigmoid(z[3 * H:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h[t] = o * tc
        cache.append((i, f, g, o, c_prev, tc, h_prev))
        h_prev = h[t]
        c_prev = c
    return h, cache


def _lstm_grads(x, dh_ext, cache, W, U, H):
    """BPTT through one direction; dh_ext is (T, H) from the head."""
    T = len(x)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dh_rec = np.zeros(H)
    dc = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i, f, g, o, c_prev, tc, h_prev = cache[t]
        dh = dh_ext[t] + dh_rec
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        dW += np.outer(dz, x[t])
        dU += np.outer(dz, h_prev)
        db += dz
        dh_rec = U.T @ dz
        dc = dc * f
    return dW, dU, db


def _forward_norm(w: RegressorWeights, xn: np.ndarray):
    """Forward pass on normalized inputs; returns normalized predictions
    and the caches needed for backprop."""
    H = w.hidden
    p = w.params
    hf, cf = _lstm_pass(xn, p["Wf"], p["Uf"], p["bf"], H)
    hb_r, cb = _lstm_pass(xn[::-1], p["Wb"], p["Ub"], p["bb"], H)
    hb = hb_r[::-1]
    u = np.concatenate([hf, hb], axis=1)            # (T, 2H)
    a = np.tanh(u @ p["W1"].T + p["b1"])            # (T, H)
    yn = a @ p["W2"].T + p["b2"]                    # (T, n_out)
    return yn, (xn, hf, cf, cb, u, a)


def forward(w: RegressorWeights, seq: np.ndarray) -> np.ndarray:
    """Predict a (T, n_out) state series from a (T, n_in) input series."""
    x = np.asarray(seq, dtype=float)
    if x.ndim != 2 or x.shape[1] != w.n_in:
        raise ValueError(f"expected (T, {w.n_in}) inputs, got {x.shape}")
    xn = (x - w.in_mean) / w.in_std
    yn, _ = _forward_norm(w, xn)
    return yn * w.out_std + w.out_mean


def loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over all steps and channels (normalized space)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError("prediction and target shapes must match")
    return float(np.mean((pred - target) ** 2))


def gradients(w: RegressorWeights, batch) -> tuple:
    """Loss and its exact gradient over a batch of LabeledSequence.

    The loss is the mean squared error over every step, channel, and
    sequence of the batch, computed in normalized space.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    H = w.hidden
    p = w.params
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    total_loss = 0.0
    n_elem = sum(len(seq.inputs) for seq in batch) * w.n_out
    for seq in batch:
        xn = (seq.inputs - w.in_mean) / w.in_std
        tn = (seq.targets - w.out_mean) / w.out_std
        yn, (xc, hf, cf, cb, u, a) = _forward_norm(w, xn)
        err = yn - tn
        total_loss += float(np.sum(err ** 2))
        dy = 2.0 * err / n_elem                       # (T, n_out)
        grads["W2"] += dy.T @ a
        grads["b2"] += dy.sum(axis=0)
        da = dy @ p["W2"]
        dz1 = da * (1.0 - a * a)
        grads["W1"] += dz1.T @ u
        grads["b1"] += dz1.sum(axis=0)
        du = dz1 @ p["W1"]                            # (T, 2H)
        dW, dU, db = _lstm_grads(xc, du[:, :H], cf, p["Wf"], p["Uf"], H)
        grads["Wf"] += dW
        grads["Uf"] += dU
        grads["bf"] += db
        dW, dU, db = _lstm_grads(xc[::-1], du[::-1, H:], cb,
                                 p["Wb"], p["Ub"], H)
        grads["Wb"] += dW
        grads["Ub"] += dU
        grads["bb"] += db
    return total_loss / n_elem, grads


def _chunks(data, size):
    out = []
    for seq in data:
        T = len(seq.inputs)
        for k in range(0, T, size):
            end = min(k + size, T)
            if end - k >= 2:
                out.append(LabeledSequence(seq.inputs[k:end],
                                           seq.targets[k:end], seq.dt))
    return out


def train(data, cfg: TrainConfig) -> tuple:
    """SGD-with-momentum training; returns (weights, per-epoch losses).

    Sequences are cut into chunks of cfg.sequence_chunk steps; each
    epoch is one seeded-shuffled pass over all chunks with the update
    v <- m*v - lr*g, w <- w + v, and lr decays by cfg.lr_decay per
    epoch. Raises TrainingError if the loss stops being finite.
    """
    data = list(data)
    if not data:
        raise ValueError("training data must be nonempty")
    n_in = data[0].inputs.shape[1]
    n_out = data[0].targets.shape[1]
    allx = np.concatenate([s.inputs for s in data])
    ally = np.concatenate([s.targets for s in data])
    in_std = allx.std(axis=0)
    out_std = ally.std(axis=0)
    if np.any(in_std == 0) or np.any(out_std == 0):
        raise ValueError("training data has a constant channel; "
                         "cannot normalize")
    w = init_weights(n_in, n_out, cfg.hidden, cfg.seed,
                     in_mean=allx.mean(axis=0), in_std=in_std,
                     out_mean=ally.mean(axis=0), out_std=out_std)
    chunks = _chunks(data, cfg.sequence_chunk)
    rng = np.random.default_rng(cfg.seed + 1)
    lr = cfg.lr0
    vel = {k: np.zeros_like(v) for k, v in w.params.items()}
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(chunks))
        epoch_loss = 0.0
        for j in order:
            l, g = gradients(w, [chunks[j]])
            if not np.isfinite(l):
                raise TrainingError(f"training diverged at epoch {epoch}")
            epoch_loss += l
            for k in w.params:
                vel[k] = cfg.momentum * vel[k] - lr * g[k]
                w.params[k] = w.params[k] + vel[k]
        history.append(epoch_loss / len(chunks))
        lr *= cfg.lr_decay
    return w, np.array(history)


def evaluate(w: RegressorWeights, data, geom, kind: str = "affine",
             truth_tip=None) -> FitReport:
    """FitReport of network predictions against labels across sequences."""
    preds = np.concatenate([forward(w, s.inputs) for s in data])
    truths = np.concatenate([s.targets for s in data])
    return fit_report(preds, truths, geom, kind=kind, truth_tip=truth_tip)


def _pack(params: dict) -> np.ndarray:
    return np.concatenate([params[k].ravel() for k in _PARAM_NAMES])


def _unpack(vec: np.ndarray, like: dict) -> dict:
    out = {}
    pos = 0
    for k in _PARAM_NAMES:
        n = like[k].size
        out[k] = vec[pos:pos + n].reshape(like[k].shape)
        pos += n
    return out


def save_weights(w: RegressorWeights, path) -> None:
    doc = {
        "schema": WEIGHTS_SCHEMA,
        "hidden": w.hidden,
        "in_mean": np.asarray(w.in_mean, dtype=float).tolist(),
        "in_std": np.asarray(w.in_std, dtype=float).tolist(),
        "out_mean": np.asarray(w.out_mean, dtype=float).tolist(),
        "out_std": np.asarray(w.out_std, dtype=float).tolist(),
        "params": {k: w.params[k].tolist() for k in _PARAM_NAMES},
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_weights(path) -> RegressorWeights:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("schema") != WEIGHTS_SCHEMA:
        raise ValueError(f"unsupported weights schema in {path}")
    params = {k: np.asarray(doc["params"][k], dtype=float)
              for k in _PARAM_NAMES}
    return RegressorWeights(
        hidden=int(doc["hidden"]), params=params,
        in_mean=np.asarray(doc["in_mean"], dtype=float),
        in_std=np.asarray(doc["in_std"], dtype=float),
        out_mean=np.asarray(doc["out_mean"], dtype=float),
        out_std=np.asarray(doc["out_std"], dtype=float))
