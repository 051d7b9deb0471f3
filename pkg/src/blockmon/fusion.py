"""Bayesian fusion of block T^2 statistics and alarm logic."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

log = logging.getLogger(__name__)

DEFAULT_CONFIRM_RUN = 7


def likelihoods(t2, t2_limit):
    """Return ``(P(x|N), P(x|F))`` for T^2 value(s) against a block limit.

    P(x|F) = exp(-limit / T^2) is taken at its limit 0 when T^2 = 0.
    """
    t2 = np.asarray(t2, dtype=float)
    t2_limit = np.asarray(t2_limit, dtype=float)
    normal = np.exp(-t2 / t2_limit)
    with np.errstate(divide="ignore", over="ignore"):
        fault = np.where(t2 > 0.0, np.exp(-t2_limit / np.where(t2 > 0.0, t2, 1.0)), 0.0)
    if normal.ndim == 0:
        return float(normal), float(fault)
    return normal, fault


def posterior(p_normal, p_fault, alpha):
    """P(F|x) with priors P(F) = alpha and P(N) = 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    pn = np.asarray(p_normal, dtype=float)
    pf = np.asarray(p_fault, dtype=float)
    zero = (pn == 0.0) & (pf == 0.0)
    if np.any(zero):
        log.warning("both likelihoods vanished for %d value(s); posterior set to 0",
                    int(np.sum(zero)))
    # written through the likelihood ratio so equal likelihoods return alpha exactly
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = pn / pf
        out = np.where(pf > 0.0, alpha / (alpha + (1.0 - alpha) * ratio), 0.0)
    return float(out) if out.ndim == 0 else out


def bic(p_fault, post):
    """Likelihood-weighted mean of block posteriors along the last axis."""
    p_fault = np.asarray(p_fault, dtype=float)
    post = np.asarray(post, dtype=float)
    den = p_fault.sum(axis=-1, keepdims=True)
    ok = den > 0.0
    # normalize first: a lone block then gets weight exactly 1
    w = np.where(ok, p_fault / np.where(ok, den, 1.0), 0.0)
    out = (w * post).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AlarmConfig:
    threshold: float
    confirm_run: int = DEFAULT_CONFIRM_RUN

    def __post_init__(self):
        if self.confirm_run < 1:
            raise InputError("confirm_run must be >= 1")


@dataclass(frozen=True)
class AlarmResult:
    sample: np.ndarray  # index > threshold, per sample
    latched: np.ndarray  # true from the end of the first qualifying run onward
    first_alarm_index: int | None


def first_run_end(exceed, run: int, start: int = 0) -> int | None:
    """Index closing the first ``run`` consecutive True values at or after ``start``."""
    count = 0
    for i in range(start, len(exceed)):
        if exceed[i]:
            count += 1
            if count >= run:
                return i
        else:
            count = 0
    return None


def confirm_alarms(index_series, cfg: AlarmConfig, start: int = 0) -> AlarmResult:
    """Apply the consecutive-exceedance rule to an index series.

    Only samples at or after ``start`` may form the confirming run.
    """
    x = np.asarray(index_series, dtype=float)
    if x.size == 0:
        raise InputError("index series is empty")
    sample = x > cfg.threshold
    first = first_run_end(sample, cfg.confirm_run, start)
    latched = np.zeros(x.shape, dtype=bool)
    if first is not None:
        latched[first:] = True
    return AlarmResult(sample, latched, first)


def calibrate_threshold(normal_index_series, target_far: float) -> float:
    """Nearest-rank (ceiling) empirical quantile at 1 - target_far.

    Alarms are strict exceedances, so the calibration series itself sees a
    false-alarm fraction of at most ``target_far``.
    """
    x = np.sort(np.asarray(normal_index_series, dtype=float))
    if x.size == 0:
        raise InputError("calibration series is empty")
    if not 0.0 <= target_far < 1.0:
        raise InputError(f"target FAR must lie in [0, 1), got {target_far}")
    n = x.size
    if target_far == 0.0:
        return float(np.nextafter(x[-1], math.inf))
    # m = number of samples allowed above the threshold, the largest with m/n <= target
    m = math.floor(target_far * n)
    while m > 0 and m / n > target_far:
        m -= 1
    while (m + 1) / n <= target_far:
        m += 1
    return float(x[n - m - 1])


@dataclass(frozen=True)
class FusionSeries:
    block_names: tuple[str, ...]
    t2: np.ndarray  # n x B
    t2_limits: np.ndarray  # B
    p_normal: np.ndarray
    p_fault: np.ndarray
    posterior: np.ndarray  # n x B
    bic: np.ndarray  # n
    alpha: float
    threshold: float
    sample_period_min: float = 3.0

    @property
    def n(self) -> int:
        return self.bic.shape[0]

    @property
    def time_min(self) -> np.ndarray:
        return np.arange(self.n) * self.sample_period_min

    @property
    def alarm(self) -> np.ndarray:
        return self.bic > self.threshold

    @property
    def block_alarm(self) -> np.ndarray:
        """Per-block exceedance of each block's own T^2 limit (n x B)."""
        return self.t2 > self.t2_limits


def fuse(t2, t2_limits, alpha, threshold=None, block_names=None, sample_period_min=3.0):
    """Turn an ``n x B`` matrix of block T^2 values into a :class:`FusionSeries`.

    ``threshold`` on the fused index defaults to ``alpha``: a lone block
    whose T^2 equals its limit has posterior exactly ``alpha``.
    """
    t2 = np.atleast_2d(np.asarray(t2, dtype=float))
    limits = np.asarray(t2_limits, dtype=float)
    pn, pf = likelihoods(t2, limits)
    post = posterior(pn, pf, alpha)
    index = bic(pf, post)
    if block_names is None:
        block_names = tuple(f"block{b}" for b in range(t2.shape[1]))
    return FusionSeries(
        block_names=tuple(block_names),
        t2=t2,
        t2_limits=limits,
        p_normal=pn,
        p_fault=pf,
        posterior=post,
        bic=index,
        alpha=alpha,
        threshold=alpha if threshold is None else float(threshold),
        sample_period_min=sample_period_min,
    )
