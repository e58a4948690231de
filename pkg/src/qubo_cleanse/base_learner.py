"""L2-regularized logistic regression trained by damped Newton iterations.

The objective is the mean log-loss plus ``lam / 2 * ||w||^2``; the bias is
not penalized. With ``scale_by_size`` (the default) ``lam = l2_strength / m``
for a subset of ``m`` instances, which is the summed-loss objective with an
inverse regularization strength ``C = 1 / l2_strength``; otherwise
``lam = l2_strength``. Training is full-batch and deterministic, so the
validation loss of a given subset is reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit

from .task_data import Split

__all__ = [
    "LogisticModel",
    "TrainSettings",
    "objective_and_gradient",
    "train",
    "predict_proba",
    "log_loss",
    "LOSS_EPS",
]

LOSS_EPS = 1e-15


@dataclass(frozen=True)
class TrainSettings:
    l2_strength: float = 1.0
    max_iterations: int = 200
    convergence_tolerance: float = 1e-8
    scale_by_size: bool = True

    def __post_init__(self):
        if not self.l2_strength >= 0:
            raise ValueError("l2_strength must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.convergence_tolerance > 0:
            raise ValueError("convergence_tolerance must be positive")

    def penalty(self, m: int) -> float:
        """Penalty on the mean loss for a subset of ``m`` instances."""
        if self.scale_by_size:
            return self.l2_strength / max(m, 1)
        return self.l2_strength


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2_strength: float = 0.0
    n_iter: int = 0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def zeros(cls, b: int, l2_strength: float = 0.0) -> "LogisticModel":
        return cls(np.zeros(b), 0.0, l2_strength)

    def to_csv(self) -> str:
        """Debug dump: one ``index,value`` row per weight, the bias last as ``bias``."""
        lines = ["index,value"]
        lines += [f"{i},{w!r}" for i, w in enumerate(self.weights.tolist())]
        lines.append(f"bias,{self.bias!r}")
        return "\n".join(lines) + "\n"


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.asarray(X, dtype=float), np.ones((X.shape[0], 1))])


def objective_and_gradient(theta, X, t, l2_strength):
    """Regularized mean log-loss and its gradient.

    Parameters
    ----------
    theta : ndarray, shape (b + 1,)
        Weights followed by the bias.
    X : ndarray, shape (m, b)
    t : ndarray, shape (m,)
    l2_strength : float

    Returns
    -------
    value : float
    grad : ndarray, shape (b + 1,)
    """
    theta = np.asarray(theta, dtype=float)
    w = theta[:-1]
    penalty = 0.5 * l2_strength * float(w @ w)
    grad = np.zeros_like(theta)
    grad[:-1] = l2_strength * w
    m = X.shape[0]
    if m == 0:
        return penalty, grad
    A = _design(X)
    t = np.asarray(t, dtype=float)
    z = A @ theta
    # log(1 + e^z) - t z, stable for large |z|
    value = float(np.mean(np.logaddexp(0.0, z) - t * z)) + penalty
    grad += A.T @ (expit(z) - t) / m
    return value, grad


def _hessian(theta, A, l2_strength):
    p = expit(A @ theta)
    H = (A * (p * (1.0 - p))[:, None]).T @ A / A.shape[0]
    H[np.arange(A.shape[1] - 1), np.arange(A.shape[1] - 1)] += l2_strength
    return H


def train(instances: Split, settings: TrainSettings = TrainSettings(), history: list | None = None) -> LogisticModel:
    """Fit a logistic model on ``instances``.

    An empty split yields the all-zero model. When ``history`` is given, the
    objective value at each iterate (starting point included) is appended.
    """
    X = np.asarray(instances.inputs, dtype=float)
    t = np.asarray(instances.labels, dtype=float)
    b = X.shape[1]
    lam = settings.penalty(X.shape[0])
    theta = np.zeros(b + 1)
    if X.shape[0] == 0:
        if history is not None:
            history.append(0.0)
        return LogisticModel(theta[:-1], 0.0, lam, 0)

    A = _design(X)
    value, grad = objective_and_gradient(theta, X, t, lam)
    if history is not None:
        history.append(value)
    steps = 0
    for _ in range(settings.max_iterations):
        if np.linalg.norm(grad) <= settings.convergence_tolerance:
            break
        H = _hessian(theta, A, lam)
        try:
            step = -linalg.solve(H, grad, assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            step = -grad
        slope = float(grad @ step)
        if not slope < 0:
            # Hessian too ill-conditioned to give a descent direction
            step, slope = -grad, -float(grad @ grad)
        # Armijo backtracking
        alpha = 1.0
        while True:
            cand = theta + alpha * step
            cand_value, cand_grad = objective_and_gradient(cand, X, t, lam)
            if cand_value <= value + 1e-4 * alpha * slope or alpha < 1e-12:
                break
            alpha *= 0.5
        if cand_value > value:
            # line search stalled at machine precision
            break
        theta, value, grad = cand, cand_value, cand_grad
        steps += 1
        if history is not None:
            history.append(value)
    return LogisticModel(theta[:-1], theta[-1], lam, steps)


def predict_proba(model: LogisticModel, x) -> np.ndarray | float:
    """Probability of label 1 for one input vector or a ``(m, b)`` batch."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.weights.shape[0]:
        raise ValueError(
            f"input length {x.shape[-1]} does not match model width {model.weights.shape[0]}"
        )
    p = expit(x @ model.weights + model.bias)
    return float(p) if x.ndim == 1 else p


def log_loss(model: LogisticModel, instances: Split, eps: float = LOSS_EPS) -> float:
    """Mean binary cross-entropy with probabilities clamped to ``[eps, 1 - eps]``."""
    if len(instances) == 0:
        raise ValueError("log-loss is undefined on an empty split")
    p = np.clip(predict_proba(model, instances.inputs), eps, 1.0 - eps)
    t = instances.labels.astype(float)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log1p(-p)))
