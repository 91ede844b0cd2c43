"""Linear soft-margin SVM trained by dual coordinate descent, plus a per-view bank.

The primal problem is

    min_w  1/2 ||w||^2 + C * sum_i max(0, 1 - y_i (w . x_i + b))

with the bias folded in as a weight on a constant feature of value
``bias_scale`` (so the bias is lightly regularized). Each epoch visits every
sample once in a seeded random order; ``max_iter`` counts epochs. The dual
objective decreases monotonically, epoch over epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MissingView, SingleClass


@dataclass(frozen=True)
class LinearClassifier:
    weights: np.ndarray
    bias: float
    view: object = None
    n_iter: int = field(default=0, compare=False)
    history: tuple = field(default=(), compare=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def decision_function(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1, x.shape[-1]) if x.ndim > 1 else x.reshape(1, -1)
        if flat.shape[1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} features, got {flat.shape[1]}")
        out = flat @ self.weights + self.bias
        return out if x.ndim > 1 else out[0]

    def predict(self, x):
        """Labels in {-1, +1} (0 maps to +1) and the raw decision values."""
        value = self.decision_function(x)
        label = np.where(value >= 0, 1, -1)
        if np.ndim(value) == 0:
            return int(label), float(value)
        return label, value


def primal_objective(X, y, w, b, C) -> float:
    margins = 1.0 - y * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(margins, 0.0).sum())


def _check_training_set(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise DimensionMismatch(f"features must be 2-D, got shape {X.shape}")
    if len(X) != len(y):
        raise DimensionMismatch(f"{len(X)} feature vectors but {len(y)} labels")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise SingleClass("training data holds a single class")
    return X, y


def train(X, y, C: float = 1.0, max_iter: int = 100, tol: float = 1e-3, seed: int = 0,
          bias_scale: float = 1.0, view=None) -> LinearClassifier:
    """Fit a linear SVM.

    Stops after ``max_iter`` epochs or once the projected-gradient spread
    drops below ``tol``. ``history`` records ``(dual, primal)`` objectives of
    the bias-augmented problem, starting with the all-zero solution; at the
    optimum they sum to zero.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    X, y = _check_training_set(X, y)
    n, d = X.shape
    rng = np.random.default_rng(seed)

    qdiag = np.einsum("ij,ij->i", X, X) + bias_scale**2
    alpha = np.zeros(n)
    w = np.zeros(d)
    wb = 0.0
    history = [(0.0, primal_objective(X, y, w, 0.0, C))]
    epoch = 0
    for epoch in range(1, max_iter + 1):
        pg_max, pg_min = -np.inf, np.inf
        for i in rng.permutation(n):
            xi = X[i]
            yi = y[i]
            g = yi * (xi @ w + wb * bias_scale) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0 and qdiag[i] > 0:
                a_new = min(max(a - g / qdiag[i], 0.0), C)
                delta = (a_new - a) * yi
                if delta != 0.0:
                    alpha[i] = a_new
                    w += delta * xi
                    wb += delta * bias_scale
        b = wb * bias_scale
        dual = 0.5 * (float(w @ w) + wb * wb) - float(alpha.sum())
        history.append((dual, primal_objective(X, y, w, b, C) + 0.5 * wb * wb))
        if pg_max - pg_min < tol:
            break
    return LinearClassifier(w.copy(), float(wb * bias_scale), view, epoch, tuple(history))


@dataclass(frozen=True)
class ClassifierBank:
    classifiers: dict

    @property
    def views(self):
        return tuple(sorted(self.classifiers))

    def __getitem__(self, view) -> LinearClassifier:
        try:
            return self.classifiers[view]
        except KeyError:
            raise MissingView(view, "no classifier") from None

    def __len__(self):
        return len(self.classifiers)


def train_bank(per_view_data, views, C: float = 1.0, max_iter: int = 100, tol: float = 1e-3,
               seed: int = 0) -> ClassifierBank:
    """Train one classifier per view from ``{view: (X, y)}``; views are independent."""
    out = {}
    for v in sorted(views):
        if v not in per_view_data:
            raise MissingView(v)
        X, y = per_view_data[v]
        try:
            out[v] = train(X, y, C=C, max_iter=max_iter, tol=tol, seed=seed, view=v)
        except (SingleClass, DimensionMismatch) as exc:
            raise type(exc)(f"view {v}: {exc}") from exc
    return ClassifierBank(out)
