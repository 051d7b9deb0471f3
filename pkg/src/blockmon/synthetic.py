"""Synthetic normal-operation streams for exercising the monitor.

Variables follow a static latent-factor model: each one mixes a few shared
factors with its own noise, then gets an arbitrary offset and scale, much
like correlated plant measurements.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import TEP_PERIOD_MIN, Dataset


@dataclass(frozen=True)
class LatentProcess:
    tags: tuple[str, ...]
    loadings: np.ndarray  # p x f, rows of norm sqrt(1 - noise_var)
    noise_sd: np.ndarray
    offset: np.ndarray
    scale: np.ndarray

    @classmethod
    def random(cls, tags, n_factors=6, noise_var=(0.05, 0.25), rng=None):
        rng = np.random.default_rng(rng)
        p = len(tags)
        raw = rng.standard_normal((p, n_factors))
        psi = rng.uniform(*noise_var, size=p)
        loadings = raw / np.linalg.norm(raw, axis=1, keepdims=True) * np.sqrt(1.0 - psi)[:, None]
        offset = rng.uniform(-50.0, 50.0, size=p)
        scale = 10.0 ** rng.uniform(-1.0, 1.0, size=p)
        return cls(tuple(tags), loadings, np.sqrt(psi), offset, scale)

    def sample(self, n, rng=None, name="synthetic", onset=None) -> Dataset:
        rng = np.random.default_rng(rng)
        f = rng.standard_normal((n, self.loadings.shape[1]))
        e = rng.standard_normal((n, len(self.tags))) * self.noise_sd
        x = (f @ self.loadings.T + e) * self.scale + self.offset
        return Dataset(x, self.tags, TEP_PERIOD_MIN, onset, name)


def inject_shift(data: Dataset, tag: str, size: float, onset: int) -> Dataset:
    """Copy of ``data`` with ``size`` added to ``tag`` from ``onset`` on."""
    m = data.matrix.copy()
    j = data.variable_order.index(tag)
    m[onset:, j] += size
    return Dataset(m, data.variable_order, data.sample_period_min, onset,
                   f"{data.name}+shift({tag})")
