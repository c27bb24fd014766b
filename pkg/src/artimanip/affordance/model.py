"""Two-layer per-point scorer trained with class-weighted binary cross entropy."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotate import as_points
from .features import DEFAULT_VIEW, FEATURE_DIM, extract_features

MAGIC = b"AFFM"
VERSION = 1
POS_WEIGHT_RANGE = (1.0, 20.0)
_TINY = np.finfo(np.float64).tiny
_ONE_MINUS = np.nextafter(1.0, 0.0)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Hyper:
    hidden: int = 32
    epochs: int = 300
    lr: float = 0.05
    batch: int = 256
    k: int = 16
    momentum: float = 0.9

    def __post_init__(self):
        if self.hidden < 1 or self.batch < 1 or self.epochs < 0 or self.k < 4:
            raise ValueError(f"invalid hyperparameters {self}")
        if not self.lr > 0 or not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"invalid hyperparameters {self}")


@dataclass(frozen=True)
class AffordanceModel:
    mean: np.ndarray
    std: np.ndarray
    w1: np.ndarray  # (FEATURE_DIM, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float
    k: int = 16
    hyper: dict = field(default_factory=dict)

    def __post_init__(self):
        d, h = self.w1.shape
        if d != FEATURE_DIM or self.mean.shape != (d,) or self.std.shape != (d,):
            raise ValueError("feature dimension mismatch")
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise ValueError("hidden width mismatch")
        if not np.all(self.std > 0):
            raise ValueError("normalization stds must be positive")

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, np.array([self.b2])]

    def logits(self, features: np.ndarray) -> np.ndarray:
        z = (features - self.mean) / self.std
        return np.tanh(z @ self.w1 + self.b1) @ self.w2 + self.b2

    def scores(self, features: np.ndarray) -> np.ndarray:
        # keep saturated logits strictly inside (0, 1)
        return np.clip(sigmoid(self.logits(features)), _TINY, _ONE_MINUS)


@dataclass(frozen=True)
class AffordanceMap:
    """Per-point actionability scores aligned with a part cloud."""

    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1 or np.any(s < 0.0) or np.any(s > 1.0) or not np.all(np.isfinite(s)):
            raise ValueError("affordance scores must be finite values in [0, 1]")
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return len(self.scores)

    def labels(self, threshold: float = 0.5) -> np.ndarray:
        return (self.scores >= threshold).astype(np.int8)


@dataclass
class TrainingReport:
    epoch_losses: list[float]
    initial_loss: float
    final_loss: float
    epochs: int
    seed: int
    pos_weight: float


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x)))


def _softplus(x):
    return np.logaddexp(0.0, x)


def bce_loss(logits, labels, pos_weight: float = 1.0) -> float:
    """Mean class-weighted BCE computed from logits."""
    y = np.asarray(labels, dtype=np.float64)
    s = np.asarray(logits, dtype=np.float64)
    per = pos_weight * y * _softplus(-s) + (1.0 - y) * _softplus(s)
    return float(per.mean())


def loss_and_grads(params, z, y, pos_weight: float):
    """BCE loss of normalized features ``z`` and its gradient w.r.t. ``params``.

    ``params`` is ``[w1, b1, w2, b2]`` with ``b2`` a length-1 array.
    """
    w1, b1, w2, b2 = params
    h = np.tanh(z @ w1 + b1)
    s = h @ w2 + b2[0]
    n = len(y)
    loss = bce_loss(s, y, pos_weight)
    p = sigmoid(s)
    g = (pos_weight * y * (p - 1.0) + (1.0 - y) * p) / n
    gw2 = h.T @ g
    gb2 = np.array([g.sum()])
    dpre = np.outer(g, w2) * (1.0 - h * h)
    gw1 = z.T @ dpre
    gb1 = dpre.sum(axis=0)
    return loss, [gw1, gb1, gw2, gb2]


def positive_weight(labels) -> float:
    y = np.asarray(labels)
    pos = int(y.sum())
    neg = len(y) - pos
    return float(np.clip(neg / max(pos, 1), *POS_WEIGHT_RANGE))


def dataset_features(data, k: int = 16) -> tuple[np.ndarray, np.ndarray]:
    feats, labels = [], []
    for entry in data:
        feats.append(extract_features(entry.points, k))
        labels.append(np.asarray(entry.labels, dtype=np.float64))
    if not feats:
        return np.zeros((0, FEATURE_DIM)), np.zeros(0)
    return np.concatenate(feats), np.concatenate(labels)


def train_affordance(data, hyper: Hyper | None = None, seed: int = 0, features=None):
    """Fit the scorer by mini-batch gradient descent with momentum.

    ``features`` may pass precomputed ``(X, y)`` to skip extraction.
    Returns ``(model, report)``.
    """
    hyper = hyper or Hyper()
    if features is None:
        if len(data) == 0:
            raise TrainingError("dataset is empty")
        X, y = dataset_features(data, hyper.k)
    else:
        X, y = (np.asarray(a, dtype=np.float64) for a in features)
    if len(y) == 0:
        raise TrainingError("dataset is empty")
    if y.min() == y.max():
        raise TrainingError("training labels contain a single class")

    rng = np.random.default_rng(seed)
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), 1e-8)
    Z = (X - mean) / std
    d, h = Z.shape[1], hyper.hidden
    params = [
        rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, h)),
        np.zeros(h),
        rng.normal(0.0, 1.0 / np.sqrt(h), size=h),
        np.zeros(1),
    ]
    velocity = [np.zeros_like(p) for p in params]
    pw = positive_weight(y)

    def full_loss():
        w1, b1, w2, b2 = params
        return bce_loss(np.tanh(Z @ w1 + b1) @ w2 + b2[0], y, pw)

    initial = full_loss()
    losses = []
    n = len(y)
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch):
            idx = order[start:start + hyper.batch]
            _, grads = loss_and_grads(params, Z[idx], y[idx], pw)
            for p, v, g in zip(params, velocity, grads):
                v *= hyper.momentum
                v -= hyper.lr * g
                p += v
        loss = full_loss()
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss} after epoch {epoch}")
        losses.append(loss)

    w1, b1, w2, b2 = params
    model = AffordanceModel(
        mean, std, w1, b1, w2, float(b2[0]), hyper.k,
        {"hidden": h, "epochs": hyper.epochs, "lr": hyper.lr, "batch": hyper.batch,
         "momentum": hyper.momentum, "seed": seed},
    )
    report = TrainingReport(losses, initial, losses[-1] if losses else initial, hyper.epochs, seed, pw)
    return model, report


def predict_affordance(model: AffordanceModel, part, view_dir=DEFAULT_VIEW) -> AffordanceMap:
    pts = as_points(part)
    if len(pts) <= model.k:
        raise ValueError(f"cloud has {len(pts)} points; need more than the neighborhood size {model.k}")
    return AffordanceMap(model.scores(extract_features(pts, model.k, view_dir)))


# --- persistence -----------------------------------------------------------

_HEAD = struct.Struct("<4sIIII")
_HYPER_KEYS = ("epochs", "lr", "batch", "momentum", "seed")


def model_to_bytes(model: AffordanceModel) -> bytes:
    """Magic, version, feature dim, hidden width, k; then float64 LE arrays.

    Array order: mean, std, w1 (row-major), b1, w2, b2, then the
    hyperparameter snapshot (epochs, lr, batch, momentum, seed).
    """
    head = _HEAD.pack(MAGIC, VERSION, FEATURE_DIM, model.hidden, model.k)
    hyper = np.array([float(model.hyper.get(key, np.nan)) for key in _HYPER_KEYS])
    body = np.concatenate(
        [model.mean, model.std, model.w1.ravel(), model.b1, model.w2, [model.b2], hyper]
    ).astype("<f8")
    return head + body.tobytes()


def model_from_bytes(data: bytes) -> AffordanceModel:
    if len(data) < _HEAD.size:
        raise ValueError("model file is truncated")
    magic, version, d, h, k = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"bad model magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported model version {version}")
    if d != FEATURE_DIM:
        raise ValueError(f"model expects {d} features, extractor produces {FEATURE_DIM}")
    n = 2 * d + d * h + h + h + 1 + len(_HYPER_KEYS)
    if len(data) != _HEAD.size + 8 * n:
        raise ValueError("model file size does not match its header")
    v = np.frombuffer(data, "<f8", n, _HEAD.size).astype(np.float64)
    o = 0

    def take(m):
        nonlocal o
        out = v[o:o + m]
        o += m
        return out.copy()

    mean, std = take(d), take(d)
    w1 = take(d * h).reshape(d, h)
    b1, w2, b2 = take(h), take(h), take(1)[0]
    hv = take(len(_HYPER_KEYS))
    hyper = {key: val for key, val in zip(_HYPER_KEYS, hv.tolist())}
    hyper["hidden"] = h
    return AffordanceModel(mean, std, w1, b1, w2, float(b2), int(k), hyper)


def save_model(model: AffordanceModel, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path: str | Path) -> AffordanceModel:
    return model_from_bytes(Path(path).read_bytes())
