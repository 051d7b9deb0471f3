"""Datasets, the block monitoring pipeline and detection metrics."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .decompose import MonitoringBlock
from .errors import InputError
from .fusion import (
    DEFAULT_CONFIRM_RUN,
    AlarmConfig,
    FusionSeries,
    calibrate_threshold,
    confirm_alarms,
    first_run_end,
    fuse,
)
from .pca import PcaModel, contributions, fit_block_model

TEP_COLUMNS = tuple(f"XMEAS({i})" for i in range(1, 42)) + tuple(f"XMV({i})" for i in range(1, 12))
TEP_PERIOD_MIN = 3.0
TEP_ONSET = 160


@dataclass(frozen=True)
class Dataset:
    matrix: np.ndarray
    variable_order: tuple[str, ...]
    sample_period_min: float = TEP_PERIOD_MIN
    fault_onset_index: int | None = None
    name: str = ""

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2:
            raise InputError("dataset matrix must be 2-D")
        if m.shape[1] != len(self.variable_order):
            raise InputError(
                f"dataset has {m.shape[1]} columns but {len(self.variable_order)} variable names"
            )
        if not np.all(np.isfinite(m)):
            raise InputError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def columns(self, tags) -> np.ndarray:
        pos = {t: j for j, t in enumerate(self.variable_order)}
        missing = [t for t in tags if t not in pos]
        if missing:
            label = f" {self.name!r}" if self.name else ""
            raise InputError(f"dataset{label} lacks variables {missing}")
        return self.matrix[:, [pos[t] for t in tags]]


def load_matrix(path, transpose: bool = False) -> np.ndarray:
    """Read a whitespace-delimited numeric text file.

    With ``transpose`` the file's rows are variables (the layout of the
    public TEP ``d00.dat`` training file).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read data file {str(path)!r}: {exc.strerror}") from exc
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tok = line.split()
        if not tok:
            continue
        if width is None:
            width = len(tok)
        elif len(tok) != width:
            raise InputError(
                f"{path}: row {lineno} has {len(tok)} values, expected {width}"
            )
        try:
            rows.append([float(t) for t in tok])
        except ValueError:
            col = next(j for j, t in enumerate(tok, start=1) if not _is_float(t))
            raise InputError(f"{path}: row {lineno}, column {col}: not a number") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    m = np.asarray(rows, dtype=float)
    return m.T.copy() if transpose else m


def _is_float(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_columns(path) -> tuple[str, ...]:
    """Column tags, whitespace separated, ``#`` comments allowed."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read column file {str(path)!r}: {exc.strerror}") from exc
    tags = [t for line in text.splitlines() for t in line.split("#", 1)[0].split()]
    if len(set(tags)) != len(tags):
        raise InputError(f"column file {str(path)!r} repeats a tag")
    return tuple(tags)


def load_dataset(path, transpose=False, columns=None, onset=None,
                 sample_period_min=TEP_PERIOD_MIN) -> Dataset:
    m = load_matrix(path, transpose=transpose)
    if columns is None:
        if m.shape[1] != len(TEP_COLUMNS):
            raise InputError(
                f"{path}: {m.shape[1]} columns; pass a column file unless the data has the "
                f"{len(TEP_COLUMNS)} TEP columns"
            )
        columns = TEP_COLUMNS
    return Dataset(m, tuple(columns), sample_period_min, onset, Path(path).stem)


def confusion(alarms, onset: int | None) -> dict:
    a = np.asarray(alarms, dtype=bool)
    if onset is None:
        normal, faulty = a, a[:0]
    else:
        if not 0 <= onset < a.size:
            raise InputError(f"fault onset {onset} outside series of length {a.size}")
        normal, faulty = a[:onset], a[onset:]
    tp = int(faulty.sum())
    fp = int(normal.sum())
    return {"tp": tp, "fn": faulty.size - tp, "fp": fp, "tn": normal.size - fp}


def fdr(alarms, onset: int) -> float:
    """Fraction of samples at or after ``onset`` that carry an alarm."""
    if onset is None:
        raise InputError("FDR needs a fault onset")
    c = confusion(alarms, onset)
    return c["tp"] / (c["tp"] + c["fn"])


def far(alarms, onset: int | None = None) -> float:
    """Fraction of normal samples (before ``onset``, or all) that carry an alarm."""
    a = np.asarray(alarms, dtype=bool)
    if onset is not None and onset > a.size:
        raise InputError(f"fault onset {onset} outside series of length {a.size}")
    normal = a if onset is None else a[:onset]
    if normal.size == 0:
        raise InputError("no normal samples to compute FAR")
    return float(normal.sum()) / normal.size


@dataclass(frozen=True)
class ContributionMap:
    block_name: str
    times: np.ndarray  # sample indices
    variables: tuple[str, ...]
    values: np.ndarray  # len(times) x len(variables)
    sample_period_min: float = TEP_PERIOD_MIN


class BlockMonitor:
    """A set of fitted block models scored together through the fused index."""

    def __init__(self, models: list[PcaModel], threshold=None, confirm_run=DEFAULT_CONFIRM_RUN):
        if not models:
            raise InputError("a monitor needs at least one block model")
        alphas = {m.alpha for m in models}
        if len(alphas) != 1:
            raise InputError(f"block models disagree on alpha: {sorted(alphas)}")
        names = [m.block_name for m in models]
        if len(set(names)) != len(names):
            raise InputError("block names must be unique")
        self.models = list(models)
        self.alpha = alphas.pop()
        self.threshold = self.alpha if threshold is None else float(threshold)
        self.confirm_run = confirm_run

    @classmethod
    def fit(cls, train: Dataset, blocks: list[MonitoringBlock], alpha=0.01, **kw):
        models = [
            fit_block_model(train.columns(b.variables), b.variables, alpha, b.name)
            for b in blocks
        ]
        return cls(models, **kw)

    @property
    def block_names(self) -> tuple[str, ...]:
        return tuple(m.block_name for m in self.models)

    def model(self, name: str) -> PcaModel:
        for m in self.models:
            if m.block_name == name:
                return m
        raise InputError(f"unknown block {name!r}; known blocks: {list(self.block_names)}")

    def t2_matrix(self, data: Dataset) -> np.ndarray:
        cols = [m.t2(m.standardize(data.columns(m.variables))) for m in self.models]
        return np.column_stack(cols)

    def score(self, data: Dataset, threshold=None) -> FusionSeries:
        if data.n == 0:
            raise InputError("dataset has no rows")
        return fuse(
            self.t2_matrix(data),
            [m.t2_limit for m in self.models],
            self.alpha,
            self.threshold if threshold is None else threshold,
            self.block_names,
            data.sample_period_min,
        )

    def calibrate(self, normal: Dataset, target_far=0.05) -> float:
        """Set the fused-index threshold from a normal-operation run."""
        self.threshold = calibrate_threshold(self.score(normal).bic, target_far)
        return self.threshold

    def contribution_map(self, data: Dataset, block: str, start=0, stop=None) -> ContributionMap:
        m = self.model(block)
        stop = data.n if stop is None else min(stop, data.n)
        if not 0 <= start < stop:
            raise InputError(f"empty sample window [{start}, {stop})")
        z = m.standardize(data.columns(m.variables)[start:stop])
        return ContributionMap(m.block_name, np.arange(start, stop), m.variables,
                               contributions(m, z), data.sample_period_min)


@dataclass(frozen=True)
class MetricsReport:
    mode: str  # "sample" or "confirmed"
    fdr: float | None
    far: float | None
    detection_delay_min: float | None
    first_alarm_block: str | None
    block_alarm_order: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class BenchmarkResult:
    fault_id: str
    sample: MetricsReport
    confirmed: MetricsReport
    series: FusionSeries = field(repr=False)

    def to_json(self) -> dict:
        return {
            "fault_id": self.fault_id,
            "fdr_sample": self.sample.fdr,
            "fdr_confirmed": self.confirmed.fdr,
            "far": self.sample.far,
            "detection_delay_min": self.confirmed.detection_delay_min,
            "first_alarm_block": self.confirmed.first_alarm_block,
            "block_alarm_order": [[b, i] for b, i in self.confirmed.block_alarm_order],
        }


def block_alarm_order(series: FusionSeries, run: int, start: int = 0):
    """Blocks sorted by the end of their first ``run``-long exceedance run."""
    firsts = []
    alarms = series.block_alarm
    for b, name in enumerate(series.block_names):
        idx = first_run_end(alarms[:, b], run, start)
        if idx is not None:
            firsts.append((idx, b, name))
    firsts.sort()
    return tuple((name, idx) for idx, _, name in firsts)


def _safe(fn, *args):
    try:
        return fn(*args)
    except InputError:
        return None


def evaluate_series(series: FusionSeries, onset: int | None, confirm_run=DEFAULT_CONFIRM_RUN,
                    fault_id: str = "") -> BenchmarkResult:
    """Sample- and confirmed-mode metrics for a scored run."""
    n = series.n
    if onset is not None and not 0 <= onset < n:
        raise InputError(f"fault onset {onset} outside series of length {n}")
    start = 0 if onset is None else onset
    period = series.sample_period_min

    sample_alarm = series.alarm
    order1 = block_alarm_order(series, 1, start)
    first1 = first_run_end(sample_alarm, 1, start)
    sample = MetricsReport(
        mode="sample",
        fdr=None if onset is None else fdr(sample_alarm, onset),
        far=_safe(far, sample_alarm, onset),
        detection_delay_min=None if onset is None or first1 is None else (first1 - onset) * period,
        first_alarm_block=order1[0][0] if order1 else None,
        block_alarm_order=order1,
    )

    cfg = AlarmConfig(series.threshold, confirm_run)
    post = confirm_alarms(series.bic, cfg, start)
    if onset is None:
        far_c = far(post.latched)
    else:
        far_c = confirm_alarms(series.bic[:onset], cfg).latched.mean() if onset > 0 else None
    order = block_alarm_order(series, confirm_run, start)
    first = post.first_alarm_index
    confirmed = MetricsReport(
        mode="confirmed",
        fdr=None if onset is None else fdr(post.latched, onset),
        far=None if far_c is None else float(far_c),
        detection_delay_min=None if onset is None or first is None else (first - onset) * period,
        first_alarm_block=order[0][0] if order else None,
        block_alarm_order=order,
    )
    return BenchmarkResult(fault_id, sample, confirmed, series)


def benchmark_run(train: Dataset, test: Dataset, blocks: list[MonitoringBlock], alpha=0.01,
                  confirm_run=DEFAULT_CONFIRM_RUN, threshold=None, calibration: Dataset | None = None,
                  target_far=0.05, fault_id=None) -> BenchmarkResult:
    """Fit block models on ``train`` and evaluate them on ``test``.

    With ``calibration`` the fused-index threshold is recalibrated on that
    normal run to ``target_far``; otherwise ``threshold`` (default alpha)
    is used.
    """
    mon = BlockMonitor.fit(train, blocks, alpha, threshold=threshold, confirm_run=confirm_run)
    if calibration is not None:
        mon.calibrate(calibration, target_far)
    series = mon.score(test)
    return evaluate_series(series, test.fault_onset_index, confirm_run,
                           fault_id if fault_id is not None else test.name)


def fault_id_from_name(name: str) -> str:
    """``d05_te`` -> ``5``; other names pass through."""
    m = re.fullmatch(r"d(\d+)(_te)?", name)
    return str(int(m.group(1))) if m else name
