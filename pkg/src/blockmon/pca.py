"""Full-PCA block models with Hotelling T^2 and clipped contribution ratios."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ComputationError, ConvergenceError, InputError, ZeroVarianceError
from .fdist import f_quantile

EIG_FLOOR = 1e-10
ZERO_STD = 1e-12


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std


def fit_standardizer(X, tags=None) -> Standardizer:
    """Column means and sample (n - 1) standard deviations of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InputError("need a 2-D matrix with at least two rows to standardize")
    if not np.all(np.isfinite(X)):
        raise InputError("training data contains non-finite values")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    bad = np.flatnonzero(std < ZERO_STD)
    if bad.size:
        j = int(bad[0])
        raise ZeroVarianceError(tags[j] if tags is not None else f"column {j}")
    return Standardizer(mean, std)


def t2_limit(n: int, p_eff: int, alpha: float) -> float:
    """F-based upper control limit of T^2 for ``n`` training rows."""
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    if p_eff < 1 or n <= p_eff:
        raise InputError(f"T2 limit needs n > p_eff >= 1 (n={n}, p_eff={p_eff})")
    coef = (n * n - 1.0) * p_eff / (n * (n - p_eff))
    return coef * f_quantile(1.0 - alpha, p_eff, n - p_eff)


@dataclass(frozen=True)
class PcaModel:
    block_name: str
    variables: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    loadings: np.ndarray  # p x k, orthonormal columns
    eigenvalues: np.ndarray  # k, descending
    alpha: float
    t2_limit: float
    n_train: int

    @property
    def k(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def p(self) -> int:
        return len(self.variables)

    @property
    def standardizer(self) -> Standardizer:
        return Standardizer(self.mean, self.std)

    def standardize(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def scores(self, Z):
        return np.asarray(Z, dtype=float) @ self.loadings

    def t2(self, Z):
        return hotelling_t2(self, Z)

    def contributions(self, Z):
        return contributions(self, Z)

    def to_dict(self) -> dict:
        return {
            "block_name": self.block_name,
            "variables": list(self.variables),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "loadings": self.loadings.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "alpha": self.alpha,
            "t2_limit": self.t2_limit,
            "n_train": self.n_train,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        p = len(d["variables"])
        loadings = np.asarray(d["loadings"], dtype=float).reshape(p, -1)
        return cls(
            block_name=d["block_name"],
            variables=tuple(d["variables"]),
            mean=np.asarray(d["mean"], dtype=float),
            std=np.asarray(d["std"], dtype=float),
            loadings=loadings,
            eigenvalues=np.asarray(d["eigenvalues"], dtype=float),
            alpha=float(d["alpha"]),
            t2_limit=float(d["t2_limit"]),
            n_train=int(d["n_train"]),
        )


def _check_finite(Z, what="observation"):
    Z = np.asarray(Z, dtype=float)
    if not np.all(np.isfinite(Z)):
        raise InputError(f"{what} contains non-finite values")
    return Z


def fit_full_pca(
    Z,
    alpha: float = 0.01,
    standardizer: Standardizer | None = None,
    variables=None,
    block_name: str = "block",
) -> PcaModel:
    """Eigendecompose the covariance of standardized data ``Z``.

    Every component whose variance exceeds ``EIG_FLOOR`` times the largest
    one is kept, so the residual subspace is numerically empty.
    """
    Z = _check_finite(Z, "training data")
    if Z.ndim != 2:
        raise InputError("training data must be 2-D")
    n, p = Z.shape
    if n <= p:
        warnings.warn(f"block {block_name!r}: {n} samples for {p} variables", stacklevel=2)
    Zc = Z - Z.mean(axis=0)
    cov = Zc.T @ Zc / (n - 1)
    try:
        evals, evecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition failed for block {block_name!r}") from exc
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[0] <= 0.0:
        raise ComputationError(f"block {block_name!r} has no variance")
    keep = evals > EIG_FLOOR * evals[0]
    evals, evecs = evals[keep], evecs[:, keep]
    # deterministic signs: the largest-magnitude loading of each column is positive
    pivot = np.abs(evecs).argmax(axis=0)
    evecs = evecs * np.sign(evecs[pivot, np.arange(evecs.shape[1])])
    if standardizer is None:
        standardizer = Standardizer(np.zeros(p), np.ones(p))
    if variables is None:
        variables = tuple(f"x{j}" for j in range(p))
    k = evals.shape[0]
    return PcaModel(
        block_name=block_name,
        variables=tuple(variables),
        mean=np.asarray(standardizer.mean, dtype=float),
        std=np.asarray(standardizer.std, dtype=float),
        loadings=evecs,
        eigenvalues=evals,
        alpha=alpha,
        t2_limit=t2_limit(n, k, alpha),
        n_train=n,
    )


def fit_block_model(X, variables, alpha=0.01, block_name="block") -> PcaModel:
    """Standardize raw block data, then fit a full PCA model on it."""
    st = fit_standardizer(X, tags=list(variables))
    return fit_full_pca(st.transform(X), alpha, st, variables, block_name)


def hotelling_t2(model: PcaModel, z):
    """T^2 = sum_i t_i^2 / lambda_i of standardized observation(s) ``z``."""
    z = _check_finite(z)
    t = z @ model.loadings
    return np.sum(t * t / model.eigenvalues, axis=-1)


def contribution_terms(model: PcaModel, z):
    """Unclipped per-component terms (t_i / lambda_i) P_ji z_j / T2_lim.

    Shape ``(..., k, p)``; summing over both trailing axes gives
    T^2 / T2_lim.
    """
    z = _check_finite(z)
    w = (z @ model.loadings) / model.eigenvalues
    return w[..., :, None] * model.loadings.T * z[..., None, :] / model.t2_limit


def contributions(model: PcaModel, z):
    """Clipped contribution ratio of each variable, in [0, 1]."""
    return clip_contributions(contribution_terms(model, z))


def clip_contributions(terms):
    """Drop negative terms, sum over components (axis -2), cap at 1."""
    return np.minimum(np.maximum(terms, 0.0).sum(axis=-2), 1.0)


def save_models(models, path) -> None:
    doc = {"models": [m.to_dict() for m in models]}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_models(path) -> list[PcaModel]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return [PcaModel.from_dict(d) for d in doc["models"]]
    except OSError as exc:
        raise InputError(f"cannot read model bundle {str(path)!r}: {exc.strerror}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"model bundle {str(path)!r} is malformed: {exc}") from exc
