"""Desk-scale federated learning: synthetic data, shard partitioning,
softmax-regression local training, weighted aggregation and evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

NUM_CLASSES = 10


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray     # (n, F)
    labels: np.ndarray       # (n,) ints in [0, num_classes)

    def __len__(self):
        return len(self.labels)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class ModelParams:
    weights: np.ndarray      # (C, F)
    biases: np.ndarray       # (C,)

    @classmethod
    def zeros(cls, num_features: int, num_classes: int = NUM_CLASSES) -> "ModelParams":
        return cls(np.zeros((num_classes, num_features)), np.zeros(num_classes))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.biases])

    @classmethod
    def from_flat(cls, v: np.ndarray, num_features: int, num_classes: int = NUM_CLASSES) -> "ModelParams":
        cut = num_classes * num_features
        return cls(v[:cut].reshape(num_classes, num_features).copy(), v[cut:].copy())


# --------------------------------------------------------------------------
# data

def generate_synthetic(stream: np.random.Generator, num_features: int = 32, train_size: int = 10_000,
                       test_size: int = 2_000, separation: float = 3.0,
                       num_classes: int = NUM_CLASSES) -> tuple[Dataset, Dataset]:
    """Balanced Gaussian blobs with unit isotropic noise.

    Class means are ``separation`` times a random orthonormal set of
    directions (random unit directions when there are fewer features than
    classes). Returns ``(train, test)``.
    """
    if train_size % num_classes or test_size % num_classes:
        raise ValueError("train and test sizes must be multiples of the class count")
    raw = stream.standard_normal((num_features, num_classes))
    if num_features >= num_classes:
        q, r = np.linalg.qr(raw)
        dirs = (q * np.sign(np.diag(r))).T
    else:
        dirs = (raw / np.linalg.norm(raw, axis=0)).T
    means = separation * dirs

    def draw(n):
        y = np.repeat(np.arange(num_classes), n // num_classes)
        y = y[stream.permutation(n)]
        x = means[y] + stream.standard_normal((n, num_features))
        return Dataset(x, y)

    return draw(train_size), draw(test_size)


def partition_noniid(dataset: Dataset, num_users: int, shards_per_user: int,
                     stream: np.random.Generator) -> list[np.ndarray]:
    """Sort by label, cut into ``num_users * shards_per_user`` equal
    contiguous shards and deal them out at random."""
    num_shards = num_users * shards_per_user
    if len(dataset) % num_shards:
        raise ValueError(f"{len(dataset)} samples do not split into {num_shards} equal shards")
    order = np.argsort(dataset.labels, kind="stable")
    shards = order.reshape(num_shards, -1)
    dealt = stream.permutation(num_shards).reshape(num_users, shards_per_user)
    return [np.sort(shards[row].ravel()) for row in dealt]


def partition_iid(dataset: Dataset, num_users: int, stream: np.random.Generator) -> list[np.ndarray]:
    if len(dataset) % num_users:
        raise ValueError(f"{len(dataset)} samples do not split evenly across {num_users} users")
    return [np.sort(part) for part in stream.permutation(len(dataset)).reshape(num_users, -1)]


def load_dataset_csv(path) -> Dataset:
    """Read ``F,num_classes`` then one ``x_1,...,x_F,label`` row per sample."""
    lines = Path(path).read_text().splitlines()
    f, c = (int(v) for v in lines[0].split(","))
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    if data.shape[1] != f + 1:
        raise ValueError(f"expected {f + 1} columns per sample, found {data.shape[1]}")
    labels = data[:, -1].astype(np.int64)
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError("labels outside [0, num_classes)")
    return Dataset(data[:, :-1], labels)


def save_dataset_csv(dataset: Dataset, path, num_classes: int = NUM_CLASSES) -> None:
    rows = [f"{dataset.num_features},{num_classes}"]
    rows += [",".join([*(repr(float(v)) for v in x), str(int(y))])
             for x, y in zip(dataset.features, dataset.labels)]
    Path(path).write_text("\n".join(rows) + "\n")


# --------------------------------------------------------------------------
# softmax regression

def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(model: ModelParams, x: np.ndarray, y: np.ndarray) -> tuple[float, ModelParams]:
    """Mean multinomial cross-entropy and its gradient."""
    logits = x @ model.weights.T + model.biases
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = len(y)
    loss = -logp[np.arange(n), y].mean()
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    return float(loss), ModelParams(delta.T @ x, delta.sum(axis=0))


def loss(model: ModelParams, x: np.ndarray, y: np.ndarray) -> float:
    return loss_and_grad(model, x, y)[0]


def _batches(n: int, batch_size: int, stream: np.random.Generator):
    perm = stream.permutation(n)
    return [perm[s:s + batch_size] for s in range(0, n, batch_size)]


def local_train(model: ModelParams, data: Dataset, epochs: int, lr: float, stream: np.random.Generator,
                batch_size: int = 32) -> ModelParams:
    """Mini-batch gradient descent, reshuffled from ``stream`` every epoch.

    The input model is not modified.
    """
    if epochs < 0 or lr <= 0:
        raise ValueError("need epochs >= 0 and lr > 0")
    w, b = model.weights.copy(), model.biases.copy()
    if len(data) == 0:
        return ModelParams(w, b)
    for _ in range(epochs):
        for idx in _batches(len(data), batch_size, stream):
            _, g = loss_and_grad(ModelParams(w, b), data.features[idx], data.labels[idx])
            w -= lr * g.weights
            b -= lr * g.biases
    return ModelParams(w, b)


def local_train_many(model: ModelParams, datasets: Sequence[Dataset], epochs: int, lr: float,
                     streams: Sequence[np.random.Generator], batch_size: int = 32) -> list[ModelParams]:
    """Train one copy of ``model`` per dataset; same result as calling
    :func:`local_train` per user, but batched when all sizes are equal."""
    sizes = {len(d) for d in datasets}
    if len(sizes) != 1 or 0 in sizes:
        return [local_train(model, d, epochs, lr, s, batch_size) for d, s in zip(datasets, streams)]
    u = len(datasets)
    x_all = np.stack([d.features for d in datasets])          # (U, n, F)
    y_all = np.stack([d.labels for d in datasets])            # (U, n)
    w = np.repeat(model.weights[None], u, axis=0)             # (U, C, F)
    b = np.repeat(model.biases[None], u, axis=0)              # (U, C)
    rows = np.arange(u)[:, None]
    n = x_all.shape[1]
    for _ in range(epochs):
        plans = [_batches(n, batch_size, s) for s in streams]
        for step in range(len(plans[0])):
            idx = np.stack([p[step] for p in plans])           # (U, bs)
            x = x_all[rows, idx]
            y = y_all[rows, idx]
            logits = np.einsum("ubf,ucf->ubc", x, w) + b[:, None, :]
            p = _softmax(logits)
            p[rows, np.arange(idx.shape[1])[None, :], y] -= 1.0
            p /= idx.shape[1]
            w -= lr * np.einsum("ubc,ubf->ucf", p, x)
            b -= lr * p.sum(axis=1)
    return [ModelParams(w[j], b[j]) for j in range(u)]


def aggregate(locals_: Sequence[tuple[ModelParams, int, bool]]) -> ModelParams:
    """Data-size weighted average of the selected local models."""
    chosen = [(m, n) for m, n, sel in locals_ if sel]
    total = float(sum(n for _, n in chosen))
    if not chosen or total <= 0:
        raise ValueError("aggregation needs at least one selected user with data")
    w = sum((n / total) * m.weights for m, n in chosen)
    b = sum((n / total) * m.biases for m, n in chosen)
    return ModelParams(np.asarray(w), np.asarray(b))


def predict(model: ModelParams, x: np.ndarray) -> np.ndarray:
    return np.argmax(x @ model.weights.T + model.biases, axis=1)


def evaluate(model: ModelParams, test: Dataset) -> float:
    return float(np.mean(predict(model, test.features) == test.labels))
