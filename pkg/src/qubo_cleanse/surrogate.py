"""Quadratic pseudo-Boolean surrogate over selection vectors.

The surrogate is

    f(q) = alpha0 + sum_j alpha_j q_j + sum_{i<j} alpha_ij q_i q_j

which is linear in the expanded feature vector
``[1, q_1..q_n, q_1 q_2, q_1 q_3, .., q_{n-1} q_n]`` (pairs in row-major
upper-triangular order) and equals ``alpha0 + q^T U q`` for the
upper-triangular matrix ``U`` with the linear terms on its diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

__all__ = [
    "SurrogateCoefficients",
    "n_params",
    "pair_indices",
    "expand",
    "expand_many",
    "evaluate",
    "to_qubo",
    "qubo_energy",
    "fit_ridge",
    "qubo_to_csv",
]


def n_params(n: int) -> int:
    """Length of the expanded feature vector for ``n`` selection bits."""
    return 1 + n + n * (n - 1) // 2


def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major ``(i, j)`` index arrays of the strict upper triangle."""
    return np.triu_indices(n, k=1)


@dataclass(frozen=True)
class SurrogateCoefficients:
    alpha0: float
    linear: np.ndarray
    pairwise: np.ndarray

    def __post_init__(self):
        linear = np.array(self.linear, dtype=float).reshape(-1)
        pairwise = np.array(self.pairwise, dtype=float).reshape(-1)
        n = linear.shape[0]
        if pairwise.shape[0] != n * (n - 1) // 2:
            raise ValueError(
                f"{pairwise.shape[0]} pairwise coefficients do not fit n={n}"
            )
        if not (np.isfinite(self.alpha0) and np.all(np.isfinite(linear)) and np.all(np.isfinite(pairwise))):
            raise ValueError("surrogate coefficients must be finite")
        linear.setflags(write=False)
        pairwise.setflags(write=False)
        object.__setattr__(self, "alpha0", float(self.alpha0))
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "pairwise", pairwise)

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.alpha0], self.linear, self.pairwise])

    @classmethod
    def from_vector(cls, alpha, n: int | None = None) -> "SurrogateCoefficients":
        alpha = np.asarray(alpha, dtype=float).reshape(-1)
        if n is None:
            # p = 1 + n(n+1)/2
            n = int(round((np.sqrt(8 * (alpha.shape[0] - 1) + 1) - 1) / 2))
        if alpha.shape[0] != n_params(n):
            raise ValueError(f"expected {n_params(n)} coefficients for n={n}, got {alpha.shape[0]}")
        return cls(alpha[0], alpha[1:1 + n], alpha[1 + n:])


def expand(q) -> np.ndarray:
    """Expanded feature vector of one selection."""
    return expand_many(np.atleast_2d(q))[0]


def expand_many(Q) -> np.ndarray:
    """Row-wise expansion of a ``(k, n)`` stack of selections into ``(k, p)``."""
    Q = np.asarray(Q).astype(np.uint8)
    if Q.ndim != 2:
        raise ValueError("expected a 2-D stack of selections")
    k, n = Q.shape
    i, j = pair_indices(n)
    out = np.empty((k, n_params(n)), dtype=np.uint8)
    out[:, 0] = 1
    out[:, 1:1 + n] = Q
    out[:, 1 + n:] = Q[:, i] & Q[:, j]
    return out


def _check_dim(n: int, q) -> np.ndarray:
    q = np.asarray(q)
    if q.ndim != 1 or q.shape[0] != n:
        raise ValueError(f"selection of length {q.size} does not match n={n}")
    return q.astype(float)


def evaluate(coeffs: SurrogateCoefficients, q) -> float:
    """Surrogate value by the explicit linear-plus-pairwise sum."""
    qf = _check_dim(coeffs.n, q)
    i, j = pair_indices(coeffs.n)
    return float(coeffs.alpha0 + coeffs.linear @ qf + coeffs.pairwise @ (qf[i] * qf[j]))


def to_qubo(coeffs: SurrogateCoefficients) -> np.ndarray:
    """Upper-triangular QUBO matrix; the constant ``alpha0`` is dropped."""
    n = coeffs.n
    U = np.diag(coeffs.linear)
    U[pair_indices(n)] = coeffs.pairwise
    return U


def qubo_energy(U, q) -> float:
    """``q^T U q``."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("QUBO matrix must be square")
    qf = _check_dim(U.shape[0], q)
    return float(qf @ U @ qf)


def fit_ridge(features, targets, lam: float = 1.0) -> SurrogateCoefficients:
    """Ridge regression of ``targets`` on expanded features, intercept unpenalized.

    Minimizes ``sum_k (l_k - alpha . qt_k)^2 + lam * ||alpha[1:]||^2``. The
    intercept is eliminated by centering; the penalized part is solved through
    a thin SVD of the centered design, which stays stable whether the history
    is shorter or longer than the coefficient vector.

    Parameters
    ----------
    features : array_like, shape (k, p)
        Expanded feature rows; the first column must be all ones.
    targets : array_like, shape (k,)
    lam : float
        Penalty strength, strictly positive.
    """
    if not lam > 0:
        raise ValueError(f"ridge penalty must be positive, got {lam}")
    F = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).reshape(-1)
    if F.ndim != 2 or F.shape[0] != y.shape[0] or y.shape[0] < 1:
        raise ValueError("need a non-empty feature matrix matching the targets")
    Z = F[:, 1:]
    z_mean = Z.mean(axis=0)
    y_mean = y.mean()
    Zc = Z - z_mean
    yc = y - y_mean
    U_, s, Vt = linalg.svd(Zc, full_matrices=False, lapack_driver="gesdd")
    shrink = s / (s * s + lam)
    beta = Vt.T @ (shrink * (U_.T @ yc))
    alpha0 = y_mean - z_mean @ beta
    return SurrogateCoefficients.from_vector(np.concatenate([[alpha0], beta]))


def qubo_to_csv(U) -> str:
    """Debug dump of the nonzero upper-triangular entries as ``i,j,value`` rows."""
    U = np.asarray(U, dtype=float)
    lines = ["i,j,value"]
    for i, j in zip(*np.nonzero(np.triu(U))):
        lines.append(f"{i},{j},{float(U[i, j])!r}")
    return "\n".join(lines) + "\n"
