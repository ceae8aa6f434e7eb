"""Time-tag ingestion: raw detector events to per-pulse click counts.

File formats (UTF-8, LF line endings, no header):

* time tags: ``channel,timestamp_ps`` per line; channel 0 is the trigger,
  channels 1 and 2 are the two detectors;
* click samples: one integer click count per line, in pulse order.

Each trigger opens one half-open window ``[t + off - w/2, t + off + w/2)`` per
expected bin arrival ``off``. A window with one or more detector events
counts as one click. Events are attributed to the most recent trigger; those
that precede the first trigger or miss every window are reported as stray.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, NoTriggerError, ParseError
from .estimation import ClickSample
from .multiplexer import DETECTION_WINDOW_NS, MultiplexerSpec, bin_schedule

__all__ = [
    "TimeTagRecord",
    "TriggerConfig",
    "BinnedEvents",
    "parse_timetags",
    "write_timetags",
    "bin_events",
    "read_click_counts",
    "write_click_counts",
    "dark_prob_per_bin",
    "TRIGGER_CHANNEL",
]

TRIGGER_CHANNEL = 0
DETECTOR_CHANNELS = (1, 2)
#: Pulse period of the 100 kHz reference laser.
DEFAULT_PERIOD_NS = 10_000.0
#: Fixed delay between a trigger and the first (undelayed) bin.
DEFAULT_LATENCY_NS = 100.0

_LINE = re.compile(r"([0-9]+),([0-9]+)")
_INT = re.compile(r"[0-9]+")


class TimeTagRecord(NamedTuple):
    channel: int
    timestamp_ps: int


def _default_offsets() -> dict:
    return TriggerConfig.offsets_from_multiplexer(MultiplexerSpec())


@dataclass(frozen=True)
class TriggerConfig:
    """Where to look for detector events relative to each trigger.

    ``bin_offsets_ns`` maps a detector channel to the expected arrival times
    of its bins after the trigger. Window order, and thus the bin index used
    in click patterns, is channel by channel in the listed offset order.
    """

    period_ns: float = DEFAULT_PERIOD_NS
    window_ns: float = DETECTION_WINDOW_NS
    bin_offsets_ns: dict = field(default_factory=_default_offsets)

    def __post_init__(self) -> None:
        if not self.window_ns > 0:
            raise ConfigError("window_ns must be positive")
        if not self.period_ns > 0:
            raise ConfigError("period_ns must be positive")
        offsets = {
            int(ch): tuple(float(o) for o in offs)
            for ch, offs in sorted(self.bin_offsets_ns.items())
        }
        if not offsets or any(not o for o in offsets.values()):
            raise ConfigError("at least one expected arrival per channel is required")
        for ch, offs in offsets.items():
            if ch == TRIGGER_CHANNEL:
                raise ConfigError("the trigger channel cannot carry bins")
            lo, hi = self._edges_ps(offs)
            order = np.argsort(lo)
            if np.any(lo[order][1:] < hi[order][:-1]):
                raise ConfigError(f"channel {ch}: detection windows overlap")
            if lo.min() < 0 or hi.max() > round(self.period_ns * 1000):
                raise ConfigError(
                    f"channel {ch}: windows must lie within one trigger period"
                )
        object.__setattr__(self, "bin_offsets_ns", offsets)

    def _edges_ps(self, offsets: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        centre = np.asarray(offsets, dtype=float) * 1000.0
        half = self.window_ns * 500.0
        return np.round(centre - half).astype(np.int64), np.round(centre + half).astype(np.int64)

    @classmethod
    def offsets_from_multiplexer(
        cls, spec: MultiplexerSpec, latency_ns: float = DEFAULT_LATENCY_NS
    ) -> dict:
        offsets: dict = {}
        for fiber, delay in bin_schedule(spec):
            offsets.setdefault(fiber, []).append(latency_ns + delay)
        return offsets

    @classmethod
    def from_multiplexer(
        cls,
        spec: MultiplexerSpec,
        latency_ns: float = DEFAULT_LATENCY_NS,
        period_ns: float = DEFAULT_PERIOD_NS,
        window_ns: float = DETECTION_WINDOW_NS,
    ) -> "TriggerConfig":
        return cls(period_ns, window_ns, cls.offsets_from_multiplexer(spec, latency_ns))

    @property
    def windows(self) -> list[tuple[int, float]]:
        """``(channel, offset_ns)`` for every window, in bin order."""
        return [(ch, o) for ch, offs in self.bin_offsets_ns.items() for o in offs]

    @property
    def n_windows(self) -> int:
        return sum(len(o) for o in self.bin_offsets_ns.values())


def _read_text(stream) -> str:
    if isinstance(stream, (bytes, bytearray)):
        return bytes(stream).decode("utf-8")
    if isinstance(stream, str):
        return stream
    data = stream.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _lines(text: str) -> list[str]:
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return lines


def parse_timetags(stream, channels: Iterable[int] = (TRIGGER_CHANNEL, *DETECTOR_CHANNELS)) -> list:
    """Parse a time-tag CSV given as bytes, text or an open file."""
    allowed = set(channels)
    records = []
    for lineno, line in enumerate(_lines(_read_text(stream)), start=1):
        match = _LINE.fullmatch(line)
        if match is None:
            raise ParseError(f"expected 'channel,timestamp_ps', got {line!r}", lineno)
        channel, ts = int(match.group(1)), int(match.group(2))
        if channel not in allowed:
            raise ParseError(f"unknown channel {channel}", lineno)
        records.append(TimeTagRecord(channel, ts))
    return records


def write_timetags(records, stream: IO[str] | None = None) -> str:
    """Serialise records; returns the text and writes it to ``stream`` if given."""
    text = "".join(f"{int(c)},{int(t)}\n" for c, t in records)
    if stream is not None:
        stream.write(text)
    return text


@dataclass(frozen=True)
class BinnedEvents:
    """Outcome of :func:`bin_events`.

    ``counts[k]`` is the click count of trigger ``k``. ``assigned`` counts
    events that landed in a window (with multiplicity), ``stray`` the rest.
    """

    counts: np.ndarray
    n_bins: int
    n_events: int
    assigned: int
    stray: int

    @property
    def sample(self) -> ClickSample:
        return ClickSample.from_counts(self.counts, self.n_bins)


def _as_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(records, tuple) and len(records) == 2 and isinstance(records[0], np.ndarray):
        return np.asarray(records[0], np.int64), np.asarray(records[1], np.int64)
    arr = np.array([(int(c), int(t)) for c, t in records], dtype=np.int64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def bin_events(records, cfg: TriggerConfig | None = None) -> BinnedEvents:
    """Turn a time-tag stream into per-trigger click counts.

    ``records`` is a list of :class:`TimeTagRecord` (any order) or a
    ``(channels, timestamps_ps)`` pair of arrays.
    """
    cfg = cfg or TriggerConfig()
    channels, stamps = _as_arrays(records)
    triggers = np.sort(stamps[channels == TRIGGER_CHANNEL])
    if triggers.size == 0:
        raise NoTriggerError("time-tag stream contains no trigger events")

    is_det = channels != TRIGGER_CHANNEL
    det_ch, det_t = channels[is_det], stamps[is_det]
    # ties go to the trigger: an event at the trigger time belongs to it
    owner = np.searchsorted(triggers, det_t, side="right") - 1
    clicked = np.zeros((triggers.size, cfg.n_windows), dtype=bool)
    assigned = 0
    first = 0
    for ch, offsets in cfg.bin_offsets_ns.items():
        lo, hi = cfg._edges_ps(offsets)
        order = np.argsort(lo)
        lo, hi = lo[order], hi[order]
        window_index = first + order
        first += len(offsets)
        sel = (det_ch == ch) & (owner >= 0)
        rel = det_t[sel] - triggers[owner[sel]]
        j = np.searchsorted(lo, rel, side="right") - 1
        inside = (j >= 0) & (rel < hi[np.maximum(j, 0)])
        clicked[owner[sel][inside], window_index[j[inside]]] = True
        assigned += int(inside.sum())
    n_events = int(det_t.size)
    return BinnedEvents(
        counts=clicked.sum(axis=1),
        n_events=n_events,
        assigned=assigned,
        stray=n_events - assigned,
        n_bins=cfg.n_windows,
    )


def read_click_counts(stream) -> np.ndarray:
    """Read a click-sample CSV (one integer per line)."""
    values = []
    for lineno, line in enumerate(_lines(_read_text(stream)), start=1):
        if _INT.fullmatch(line) is None:
            raise ParseError(f"expected a nonnegative integer, got {line!r}", lineno)
        values.append(int(line))
    return np.array(values, dtype=np.int64)


def write_click_counts(counts, stream: IO[str] | None = None) -> str:
    buf = io.StringIO()
    for x in np.asarray(counts, dtype=np.int64):
        buf.write(f"{x}\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def dark_prob_per_bin(rate_hz: float, window_ns: float) -> float:
    """First-order probability of a dark count inside one window.

    Pass ``window_ns`` = bins x window to get the per-pulse probability over
    several bins of one detector.
    """
    if rate_hz < 0:
        raise ConfigError("dark-count rate must be nonnegative")
    if not window_ns > 0:
        raise ConfigError("window must be positive")
    p = rate_hz * window_ns * 1e-9
    if p >= 1.0:
        raise ConfigError(f"rate x window = {p} >= 1; first-order formula is meaningless")
    return p
