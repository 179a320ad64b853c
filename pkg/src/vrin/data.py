"""Grid representation of irregular event streams, plus synthetic data.

Raw observations arrive as per-patient event lists (timestamp, variable,
value). They are binned onto a fixed (time step, variable) grid with a
binary observation mask, zero-fill for missing cells, and a per-variable
time-gap matrix that accumulates across missing steps.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

OBSERVATIONS_FILE = "observations.csv"
LABELS_FILE = "labels.csv"
VARIABLES_FILE = "variables.csv"


@dataclass
class IrregularSeries:
    """One patient's raw event stream and outcome label."""

    patient_id: str
    events: list  # (timestamp_hours, variable_index, value)
    label: int

    def __post_init__(self):
        if not self.events:
            raise ValueError(f"patient '{self.patient_id}' has no observations")
        if any(t < 0 for t, _, _ in self.events):
            raise ValueError(f"patient '{self.patient_id}' has a negative timestamp")


@dataclass
class MaskedBatch:
    """Regular-grid tensors for a cohort.

    values: (N, T, D) observed values, exactly zero where mask == 0
    mask:   (N, T, D) 1 where observed
    delta:  (N, T, D) hours since the variable was last observed
    timestamps: (N, T) bin start times in hours
    labels: (N,) binary outcomes
    """

    values: np.ndarray
    mask: np.ndarray
    delta: np.ndarray
    timestamps: np.ndarray
    labels: np.ndarray
    patient_ids: list = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    @property
    def n_features(self) -> int:
        return self.values.shape[2]

    def subset(self, indices) -> "MaskedBatch":
        idx = np.asarray(indices)
        ids = [self.patient_ids[i] for i in idx] if self.patient_ids else []
        return MaskedBatch(
            values=self.values[idx].copy(),
            mask=self.mask[idx].copy(),
            delta=self.delta[idx].copy(),
            timestamps=self.timestamps[idx].copy(),
            labels=self.labels[idx].copy(),
            patient_ids=ids,
        )

    def copy(self) -> "MaskedBatch":
        return self.subset(np.arange(self.n_samples))


@dataclass
class NormalizationStats:
    """Per-variable mean/std over observed training entries."""

    mean: np.ndarray
    std: np.ndarray

    def to_arrays(self) -> dict:
        return {"norm.mean": self.mean, "norm.std": self.std}

    @classmethod
    def from_arrays(cls, arrays: dict) -> "NormalizationStats":
        return cls(mean=np.asarray(arrays["norm.mean"], dtype=np.float64),
                   std=np.asarray(arrays["norm.std"], dtype=np.float64))


@dataclass
class RemovalRecord:
    """Ground-truth entries hidden from the model: (sample, t, d, true_value)."""

    entries: list

    def __len__(self) -> int:
        return len(self.entries)

    def positions(self) -> np.ndarray:
        return np.asarray([(n, t, d) for n, t, d, _ in self.entries], dtype=np.intp)

    def true_values(self) -> np.ndarray:
        return np.asarray([v for _, _, _, v in self.entries], dtype=np.float64)

    def for_samples(self, indices) -> "RemovalRecord":
        keep = set(int(i) for i in np.asarray(indices).ravel())
        return RemovalRecord([e for e in self.entries if e[0] in keep])


def build_delta(mask: np.ndarray, timestamps: np.ndarray) -> np.ndarray:
    """Time since last observation per variable.

    delta[:, 0, :] = 1; for t > 0 the gap s_t - s_{t-1} is taken as-is when
    the variable was observed at t-1 and otherwise accumulates the previous
    delta on top of the gap.
    """
    mask = np.asarray(mask, dtype=np.float64)
    timestamps = np.asarray(timestamps, dtype=np.float64)
    n, t_len, d = mask.shape
    gaps = np.diff(timestamps, axis=1)
    if np.any(gaps <= 0):
        raise ValueError("timestamps must be strictly increasing per sample")
    delta = np.empty((n, t_len, d), dtype=np.float64)
    delta[:, 0, :] = 1.0
    for t in range(1, t_len):
        gap = gaps[:, t - 1][:, None]
        carried = np.where(mask[:, t - 1, :] == 1.0, 0.0, delta[:, t - 1, :])
        delta[:, t, :] = gap + carried
    return delta


def bin_to_grid(series: list, window_hours: float, horizon_hours: float) -> MaskedBatch:
    """Average events into fixed windows; mask marks non-empty cells.

    Cell (t, d) holds the mean of all events for variable d with timestamp
    in [t*w, (t+1)*w). Events at or past the horizon are dropped (count
    logged). Bin-start times serve as the timestamp vector.
    """
    if window_hours <= 0:
        raise ValueError(f"window_hours must be positive, got {window_hours}")
    n_steps = horizon_hours / window_hours
    if abs(n_steps - round(n_steps)) > 1e-9:
        raise ValueError("horizon_hours must be an integer multiple of window_hours")
    n_steps = int(round(n_steps))

    n = len(series)
    n_features = 1 + max(d for s in series for _, d, _ in s.events)
    sums = np.zeros((n, n_steps, n_features), dtype=np.float64)
    counts = np.zeros((n, n_steps, n_features), dtype=np.int64)
    dropped = 0
    for i, s in enumerate(series):
        for ts, d, v in s.events:
            t = int(ts // window_hours)
            if t >= n_steps:
                dropped += 1
                continue
            sums[i, t, d] += v
            counts[i, t, d] += 1
    if dropped:
        log.info("bin_to_grid: dropped %d events past the %.1fh horizon", dropped, horizon_hours)

    mask = (counts > 0).astype(np.float64)
    with np.errstate(invalid="ignore"):
        values = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    timestamps = np.tile(np.arange(n_steps, dtype=np.float64) * window_hours, (n, 1))
    delta = build_delta(mask, timestamps)
    labels = np.asarray([s.label for s in series], dtype=np.int64)
    return MaskedBatch(values=values, mask=mask, delta=delta, timestamps=timestamps,
                       labels=labels, patient_ids=[s.patient_id for s in series])


def normalize(batch: MaskedBatch, stats: NormalizationStats | None = None):
    """Z-score observed entries per variable; missing entries stay exactly 0.

    Without precomputed stats, mean/std come from the observed entries of
    the given batch (population std). Constant variables are shifted only.
    """
    if stats is None:
        obs = batch.mask == 1.0
        count = obs.sum(axis=(0, 1))
        safe = np.maximum(count, 1)
        mean = np.where(count > 0, (batch.values * batch.mask).sum(axis=(0, 1)) / safe, 0.0)
        sq = ((batch.values - mean[None, None, :]) ** 2 * batch.mask).sum(axis=(0, 1))
        std = np.where(count > 0, np.sqrt(sq / safe), 1.0)
        std = np.where(std == 0.0, 1.0, std)
        stats = NormalizationStats(mean=mean, std=std)
    out = batch.copy()
    out.values = np.where(batch.mask == 1.0,
                          (batch.values - stats.mean[None, None, :]) / stats.std[None, None, :],
                          0.0)
    return out, stats


def denormalize_values(values: np.ndarray, stats: NormalizationStats,
                       variable_idx: np.ndarray | None = None) -> np.ndarray:
    if variable_idx is None:
        return values * stats.std[None, None, :] + stats.mean[None, None, :]
    return values * stats.std[variable_idx] + stats.mean[variable_idx]


def remove_values(batch: MaskedBatch, fraction: float, scope: str = "all_splits",
                  seed: int = 0, train_indices=None):
    """Hide floor(fraction * observed) entries, returning the record.

    scope 'all_splits' draws uniformly over every observed entry;
    'train_only' restricts eligibility to the given training samples.
    Deltas are rebuilt so time gaps never leak the removed positions.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    if scope not in ("all_splits", "train_only"):
        raise ValueError(f"scope must be 'all_splits' or 'train_only', got '{scope}'")
    if scope == "train_only":
        if train_indices is None:
            raise ValueError("scope 'train_only' requires train_indices")
        eligible = np.zeros(batch.n_samples, dtype=bool)
        eligible[np.asarray(train_indices)] = True
    else:
        eligible = np.ones(batch.n_samples, dtype=bool)

    out = batch.copy()
    cells = np.argwhere((batch.mask == 1.0) & eligible[:, None, None])
    n_remove = int(np.floor(fraction * len(cells)))
    record = RemovalRecord([])
    if n_remove > 0:
        rng = np.random.default_rng(seed)
        chosen = cells[rng.choice(len(cells), size=n_remove, replace=False)]
        for n, t, d in chosen:
            record.entries.append((int(n), int(t), int(d), float(batch.values[n, t, d])))
            out.values[n, t, d] = 0.0
            out.mask[n, t, d] = 0.0
        out.delta = build_delta(out.mask, out.timestamps)
    return out, record


def restore_removed(batch: MaskedBatch, record: RemovalRecord) -> MaskedBatch:
    """Invert remove_values bit-exactly."""
    out = batch.copy()
    for n, t, d, v in record.entries:
        out.values[n, t, d] = v
        out.mask[n, t, d] = 1.0
    out.delta = build_delta(out.mask, out.timestamps)
    return out


def kfold_split(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Disjoint shuffled folds covering 0..n-1 with sizes differing by <= 1."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} samples, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, k)]


def generate_synthetic(n: int, n_steps: int, n_features: int, missing_rate: float,
                       positive_rate: float = 0.15, seed: int = 0,
                       window_hours: float = 1.0, latent_dim: int = 2,
                       noise_scale: float = 0.05) -> list[IrregularSeries]:
    """Cohort of correlated-channel series with calibrated binary labels.

    A per-sample AR(1) latent process drives the channels through a random
    mixing matrix; observations are dropped i.i.d. at ``missing_rate``.
    Labels threshold a fixed linear functional of the latent trajectory at
    the empirical (1 - positive_rate) quantile, so the realized positive
    rate matches the target on the generated cohort.
    """
    if not 0.0 <= missing_rate < 1.0:
        raise ValueError(f"missing_rate must be in [0, 1), got {missing_rate}")
    rng = np.random.default_rng(seed)

    mixing = rng.normal(size=(latent_dim, n_features))
    channel_scale = rng.uniform(0.5, 2.0, size=n_features)
    channel_shift = rng.uniform(-1.0, 1.0, size=n_features)
    readout = rng.normal(size=latent_dim)
    rho = 0.85

    latents = np.empty((n, n_steps, latent_dim))
    z = rng.normal(size=(n, latent_dim))
    for t in range(n_steps):
        latents[:, t, :] = z
        z = rho * z + np.sqrt(1.0 - rho * rho) * rng.normal(size=(n, latent_dim))

    channels = latents @ mixing * channel_scale + channel_shift
    channels += noise_scale * rng.normal(size=channels.shape)

    score = latents.mean(axis=1) @ readout
    threshold = np.quantile(score, 1.0 - positive_rate)
    labels = (score > threshold).astype(int)

    observed = rng.random((n, n_steps, n_features)) >= missing_rate
    offsets = rng.random((n, n_steps, n_features)) * window_hours

    series = []
    for i in range(n):
        if not observed[i].any():
            t = int(rng.integers(n_steps))
            d = int(rng.integers(n_features))
            observed[i, t, d] = True
        events = [
            (float(t * window_hours + offsets[i, t, d]), int(d), float(channels[i, t, d]))
            for t in range(n_steps)
            for d in range(n_features)
            if observed[i, t, d]
        ]
        series.append(IrregularSeries(patient_id=f"p{i:05d}", events=events,
                                      label=int(labels[i])))
    return series


# ---------------------------------------------------------------------------
# long-format file interchange


def save_dataset(out_dir, series: list, variable_names: list[str]) -> None:
    """Write observations/labels/variables CSVs (UTF-8, fractional hours)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / OBSERVATIONS_FILE).open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["patient_id", "timestamp", "variable", "value"])
        for s in series:
            for ts, d, v in s.events:
                w.writerow([s.patient_id, repr(float(ts)), variable_names[d], repr(float(v))])
    with (out / LABELS_FILE).open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["patient_id", "label"])
        for s in series:
            w.writerow([s.patient_id, s.label])
    with (out / VARIABLES_FILE).open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["variable", "index"])
        for i, name in enumerate(variable_names):
            w.writerow([name, i])


def load_dataset(data_dir) -> tuple[list, list[str]]:
    """Read the three-file long format back into series + variable names."""
    root = Path(data_dir)
    for required in (OBSERVATIONS_FILE, LABELS_FILE, VARIABLES_FILE):
        if not (root / required).exists():
            raise FileNotFoundError(f"missing '{required}' in {root}")

    vocab: dict[str, int] = {}
    with (root / VARIABLES_FILE).open(newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            vocab[row["variable"]] = int(row["index"])
    names = [None] * len(vocab)
    for name, idx in vocab.items():
        names[idx] = name

    labels: dict[str, int] = {}
    order: list[str] = []
    with (root / LABELS_FILE).open(newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            pid = row["patient_id"]
            labels[pid] = int(row["label"])
            order.append(pid)

    events: dict[str, list] = {pid: [] for pid in order}
    with (root / OBSERVATIONS_FILE).open(newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            pid = row["patient_id"]
            if pid not in events:
                raise ValueError(f"observation for unknown patient '{pid}'")
            if row["variable"] not in vocab:
                raise ValueError(f"observation for unknown variable '{row['variable']}'")
            events[pid].append((float(row["timestamp"]), vocab[row["variable"]],
                                float(row["value"])))

    series = [IrregularSeries(patient_id=pid, events=events[pid], label=labels[pid])
              for pid in order]
    return series, names
