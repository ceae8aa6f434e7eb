"""Seeded Monte Carlo of the detection chain.

Per pulse: draw a photon number (Poisson or fixed), send every photon to
bin ``i`` with probability ``w_i`` and detect it there with probability
``eta_i``, add independent dark events with probability ``p_d,i``, and count
the bins that clicked. Per-bin efficiencies and weights may differ, which the
closed-form model in :mod:`pnrarray.detector` cannot describe.

Random streams
--------------
Pulses are processed in blocks of :data:`BLOCK_SIZE`. Block ``b`` of a run
with master seed ``s`` draws from
``default_rng(SeedSequence(s, spawn_key=(b,)))``, so each block can be
simulated by any worker in any order and the merged histogram is the same.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detector import DetectorConfig
from .errors import ConfigError
from .estimation import ClickSample
from .ingest import TRIGGER_CHANNEL, TimeTagRecord, TriggerConfig

__all__ = [
    "BLOCK_SIZE",
    "SimDetector",
    "Source",
    "SimResult",
    "uniform_detector",
    "heterogeneous_two_arm",
    "block_rng",
    "sample_clicks",
    "run_experiment",
    "simulate_patterns",
    "patterns_from_counts",
    "synthetic_timetags",
]

BLOCK_SIZE = 1 << 16
_WEIGHT_ATOL = 1e-12


@dataclass(frozen=True)
class SimDetector:
    """Per-bin splitting weights, efficiencies and dark probabilities."""

    weights: np.ndarray
    etas: np.ndarray
    p_ds: np.ndarray

    def __post_init__(self) -> None:
        arrays = []
        for name in ("weights", "etas", "p_ds"):
            a = np.array(getattr(self, name), dtype=float).ravel()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            arrays.append(a)
        w, e, d = arrays
        if not (w.size == e.size == d.size) or w.size == 0:
            raise ConfigError("weights, etas and p_ds need the same nonzero length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > _WEIGHT_ATOL:
            raise ConfigError("weights must be nonnegative and sum to 1")
        if np.any(e < 0) or np.any(e > 1):
            raise ConfigError("per-bin efficiencies must lie in [0, 1]")
        if np.any(d < 0) or np.any(d >= 1):
            raise ConfigError("per-bin dark probabilities must lie in [0, 1)")

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def mean_eta(self) -> float:
        return float(self.etas.mean())


@dataclass(frozen=True)
class Source:
    """Light source: ``Source.poisson(mu)`` or ``Source.fock(m)``."""

    kind: str
    value: float

    def __post_init__(self) -> None:
        if self.kind == "poisson":
            if not self.value >= 0:
                raise ConfigError("Poisson mean must be nonnegative")
        elif self.kind == "fock":
            if int(self.value) != self.value or self.value < 0:
                raise ConfigError("Fock photon number must be a nonnegative integer")
            object.__setattr__(self, "value", int(self.value))
        else:
            raise ConfigError(f"unknown source kind {self.kind!r}")

    @classmethod
    def poisson(cls, mu: float) -> "Source":
        return cls("poisson", float(mu))

    @classmethod
    def fock(cls, m: int) -> "Source":
        return cls("fock", m)


@dataclass(frozen=True)
class SimResult:
    histogram: np.ndarray
    n_pulses: int
    seed: int

    @property
    def sample(self) -> ClickSample:
        return ClickSample(self.histogram)

    def pmf(self) -> np.ndarray:
        return self.histogram / self.n_pulses


def uniform_detector(cfg: DetectorConfig) -> SimDetector:
    n = cfg.n
    return SimDetector(np.full(n, 1.0 / n), np.full(n, cfg.eta), np.full(n, cfg.p_d))


def heterogeneous_two_arm(cfg: DetectorConfig, eta_a: float, eta_b: float) -> SimDetector:
    """Uniform splitting; first half of the bins at ``eta_a``, second half at ``eta_b``."""
    if cfg.n % 2:
        raise ConfigError("a two-detector array needs an even number of bins")
    half = cfg.n // 2
    etas = np.r_[np.full(half, float(eta_a)), np.full(half, float(eta_b))]
    return SimDetector(np.full(cfg.n, 1.0 / cfg.n), etas, np.full(cfg.n, cfg.p_d))


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _simulate_block(det: SimDetector, source: Source, rng: np.random.Generator, size: int):
    if source.kind == "poisson":
        photons = rng.poisson(source.value, size)
    else:
        photons = np.full(size, source.value, dtype=np.int64)
    # photon fates: detected in bin i (w_i eta_i) or lost (remainder)
    p_hit = det.weights * det.etas
    pvals = np.r_[p_hit, max(0.0, 1.0 - p_hit.sum())]
    detected = rng.multinomial(photons, pvals / pvals.sum())[:, : det.n]
    clicked = detected > 0
    if np.any(det.p_ds > 0):
        clicked |= rng.random((size, det.n)) < det.p_ds
    return photons, clicked


def _blocks(n_pulses: int):
    for b, start in enumerate(range(0, n_pulses, BLOCK_SIZE)):
        yield b, min(BLOCK_SIZE, n_pulses - start)


def _check_run(det, n_pulses: int) -> None:
    if not isinstance(det, SimDetector):
        raise ConfigError("expected a SimDetector")
    if int(n_pulses) != n_pulses or n_pulses < 1:
        raise ConfigError("n_pulses must be a positive integer")


def sample_clicks(det: SimDetector, source: Source, seed: int) -> int:
    """Click count of a single pulse; equals a one-pulse :func:`run_experiment`."""
    _check_run(det, 1)
    _, clicked = _simulate_block(det, source, block_rng(seed, 0), 1)
    return int(clicked.sum())


def run_experiment(
    det: SimDetector, source: Source, n_pulses: int, seed: int, workers: int = 1
) -> SimResult:
    """Histogram of click counts over ``n_pulses`` independent pulses."""
    _check_run(det, n_pulses)

    def one(block):
        b, size = block
        _, clicked = _simulate_block(det, source, block_rng(seed, b), size)
        return np.bincount(clicked.sum(axis=1), minlength=det.n + 1)

    blocks = list(_blocks(int(n_pulses)))
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, blocks))
    else:
        parts = [one(b) for b in blocks]
    return SimResult(np.sum(parts, axis=0).astype(np.int64), int(n_pulses), seed)


def simulate_patterns(
    det: SimDetector, source: Source, n_pulses: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pulse photon numbers and ``(n_pulses, n)`` click masks.

    Uses the same streams as :func:`run_experiment`, so row sums reproduce
    its histogram for equal arguments.
    """
    _check_run(det, n_pulses)
    photons, masks = [], []
    for b, size in _blocks(int(n_pulses)):
        k, clicked = _simulate_block(det, source, block_rng(seed, b), size)
        photons.append(k)
        masks.append(clicked)
    return np.concatenate(photons), np.concatenate(masks)


def patterns_from_counts(counts: Sequence[int], n_windows: int, seed: int | None = None) -> np.ndarray:
    """Click masks realising the given per-pulse counts.

    Without a seed the first ``x`` windows click; with one, a random subset.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size and (counts.min() < 0 or counts.max() > n_windows):
        raise ConfigError(f"counts must lie in 0..{n_windows}")
    masks = np.zeros((counts.size, n_windows), dtype=bool)
    if seed is None:
        masks[:] = np.arange(n_windows) < counts[:, None]
        return masks
    rng = np.random.default_rng(seed)
    ranks = np.argsort(rng.random((counts.size, n_windows)), axis=1)
    return ranks < counts[:, None]


def synthetic_timetags(
    patterns: np.ndarray,
    cfg: TriggerConfig | None = None,
    *,
    start_ps: int = 0,
    seed: int | None = None,
    jitter: bool = False,
    extra_event_prob: float = 0.0,
    stray_per_pulse: int = 0,
) -> list:
    """Time-tag records that :func:`pnrarray.ingest.bin_events` maps back to ``patterns``.

    One trigger per row at ``start_ps + k * period``. Each clicked window gets
    an event at its centre, or uniformly inside it with ``jitter``; with
    ``extra_event_prob`` a second event lands in the same window. Stray
    events are placed in the gaps between windows. Records come out sorted
    by time.
    """
    cfg = cfg or TriggerConfig()
    patterns = np.asarray(patterns, dtype=bool)
    if patterns.ndim != 2 or patterns.shape[1] != cfg.n_windows:
        raise ConfigError(f"patterns must have shape (pulses, {cfg.n_windows})")
    rng = np.random.default_rng(seed)
    period = int(round(cfg.period_ns * 1000))
    channels = np.array([ch for ch, _ in cfg.windows])
    lo = np.empty(cfg.n_windows, dtype=np.int64)
    hi = np.empty(cfg.n_windows, dtype=np.int64)
    first = 0
    for ch, offs in cfg.bin_offsets_ns.items():
        lo[first:first + len(offs)], hi[first:first + len(offs)] = cfg._edges_ps(offs)
        first += len(offs)

    records = []
    for k, row in enumerate(patterns):
        t0 = start_ps + k * period
        records.append(TimeTagRecord(TRIGGER_CHANNEL, t0))
        for i in np.flatnonzero(row):
            n_ev = 1 + int(extra_event_prob > 0 and rng.random() < extra_event_prob)
            for _ in range(n_ev):
                if jitter:
                    t = int(rng.integers(lo[i], hi[i]))
                else:
                    t = int((lo[i] + hi[i]) // 2)
                records.append(TimeTagRecord(int(channels[i]), t0 + t))
        for _ in range(stray_per_pulse):
            records.append(_stray_event(rng, cfg, channels, lo, hi, t0, period))
    records.sort(key=lambda r: (r.timestamp_ps, r.channel))
    return records


def _stray_event(rng, cfg, channels, lo, hi, t0, period) -> TimeTagRecord:
    ch = int(rng.choice(sorted(cfg.bin_offsets_ns)))
    mine = channels == ch
    while True:
        t = int(rng.integers(0, period))
        if not np.any((lo[mine] <= t) & (t < hi[mine])):
            return TimeTagRecord(ch, t0 + t)
