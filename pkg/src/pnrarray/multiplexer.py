"""Fiber-coupler delay tree that turns one pulse into 16 time-bin pulses.

The default tree has four 2x2 couplers in series. The three links between
them are pairs of fibers, one of which carries a delay loop (150, 300 and
600 ns), and the two outputs of the last coupler go to two detectors. A
photon's path is therefore a sequence of coupler passes, each either
*straight* (same port index in and out) or *crossed*. Off the design
wavelength a straight pass transmits ``1/2 + a*dl`` and a crossed pass
``1/2 - a*dl``, so a bin's power is the product of those factors along its
path.

Routing is stored as data: one sign pattern per bin (+1 straight, -1 cross),
in bin order. The output fiber and the arrival delay follow from the pattern
and the chosen input port.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

__all__ = [
    "CouplerSpec",
    "MultiplexerSpec",
    "BinWeights",
    "CouplingRangeError",
    "OverlappingBinsError",
    "ScheduledBin",
    "default_routing",
    "bin_ports",
    "bin_weights",
    "effective_array_size",
    "loss_budget",
    "bin_schedule",
    "max_count_rate_hz",
    "overall_efficiency",
    "MEASURED_LOSS_DB",
    "DETECTION_WINDOW_NS",
    "DETECTOR_MAX_RATE_HZ",
]

#: Multiplexer loss measured with a power meter on the reference setup, dB.
MEASURED_LOSS_DB = 0.63
#: Width of the time window placed around each expected arrival.
DETECTION_WINDOW_NS = 30.0
#: Maximum count rate of the detectors used on the reference setup, Hz.
DETECTOR_MAX_RATE_HZ = 10e6


class CouplingRangeError(ConfigError):
    """Wavelength offset drives a coupler transmission out of (0, 1)."""


class OverlappingBinsError(ConfigError):
    """Two time-bins on the same fiber fall inside one detection window."""


@dataclass(frozen=True)
class CouplerSpec:
    """One nominally 50/50 coupler.

    ``slope_a`` is the change of the straight-through transmission per nm of
    wavelength offset. No value is published for the reference couplers, so
    the default is only a plausible magnitude.
    """

    slope_a: float = 0.005
    excess_loss_db: float = 0.1

    def __post_init__(self) -> None:
        if not self.excess_loss_db >= 0:
            raise ConfigError("excess_loss_db must be nonnegative")


def _ports(signs: Sequence[int], input_port: int) -> list[int]:
    ports = []
    port = input_port
    for s in signs:
        port = port if s > 0 else 1 - port
        ports.append(port)
    return ports


def default_routing(stages: int = 4, input_port: int = 1) -> tuple:
    """All ``2**stages`` sign patterns, ordered by output fiber then delay."""
    rows = []
    for signs in itertools.product((1, -1), repeat=stages):
        ports = _ports(signs, input_port)
        # fiber 1 is output port 0; delay loops sit on port 1 of each link
        delay_key = sum(p << k for k, p in enumerate(ports[:-1]))
        rows.append((ports[-1], delay_key, signs))
    rows.sort()
    return tuple(signs for _, _, signs in rows)


@dataclass(frozen=True)
class MultiplexerSpec:
    """Coupler tree description.

    ``loop_delays_ns[k]`` is the extra delay of the looped fiber between
    coupler ``k`` and ``k + 1``; it must be strictly increasing and have
    ``stages - 1`` entries. ``routing`` defaults to :func:`default_routing`.
    """

    stages: int = 4
    loop_delays_ns: tuple = (150.0, 300.0, 600.0)
    fiber_loss_db_per_km: float = 2.5
    avg_path_m: float = 105.0
    coupler: CouplerSpec = field(default_factory=CouplerSpec)
    input_port: int = 1
    routing: tuple | None = None

    def __post_init__(self) -> None:
        if int(self.stages) != self.stages or self.stages < 1:
            raise ConfigError("stages must be a positive integer")
        delays = tuple(float(d) for d in self.loop_delays_ns)
        object.__setattr__(self, "loop_delays_ns", delays)
        if len(delays) != self.stages - 1:
            raise ConfigError(
                f"{self.stages} stages need {self.stages - 1} loop delays, got {len(delays)}"
            )
        if any(d <= 0 for d in delays) or any(b <= a for a, b in zip(delays, delays[1:])):
            raise ConfigError("loop delays must be positive and strictly increasing")
        if self.fiber_loss_db_per_km < 0 or self.avg_path_m < 0:
            raise ConfigError("fiber loss and path length must be nonnegative")
        if self.input_port not in (0, 1):
            raise ConfigError("input_port must be 0 or 1")
        if isinstance(self.coupler, dict):
            object.__setattr__(self, "coupler", CouplerSpec(**self.coupler))
        routing = self.routing
        if routing is None:
            routing = default_routing(self.stages, self.input_port)
        routing = tuple(tuple(int(s) for s in row) for row in routing)
        _validate_routing(routing, self.stages)
        object.__setattr__(self, "routing", routing)

    @property
    def n_bins(self) -> int:
        return 2**self.stages

    @property
    def signs(self) -> np.ndarray:
        return np.array(self.routing, dtype=float)


def _validate_routing(routing: tuple, stages: int) -> None:
    if len(routing) != 2**stages:
        raise ConfigError(f"routing must list {2**stages} bins, got {len(routing)}")
    for row in routing:
        if len(row) != stages or any(s not in (1, -1) for s in row):
            raise ConfigError(f"routing row {row} must hold {stages} entries of +1/-1")
    if len(set(routing)) != len(routing):
        raise ConfigError("routing rows must be distinct paths through the tree")


def bin_ports(spec: MultiplexerSpec) -> list[tuple[int, int]]:
    """``(fiber, delay_ns)`` of every bin, in routing order."""
    out = []
    for signs in spec.routing:
        ports = _ports(signs, spec.input_port)
        delay = sum((d for d, p in zip(spec.loop_delays_ns, ports[:-1]) if p == 1), 0.0)
        out.append((ports[-1] + 1, delay))
    return out


class BinWeights(NamedTuple):
    fractions: np.ndarray
    linear_coeffs: np.ndarray


def _check_coupling(spec: MultiplexerSpec, delta_lambda_nm: float) -> float:
    ad = spec.coupler.slope_a * float(delta_lambda_nm)
    if not abs(ad) < 0.5:
        raise CouplingRangeError(
            f"|a * delta_lambda| = {abs(ad)} puts a coupler outside (0, 1) transmission"
        )
    return ad


def bin_weights(spec: MultiplexerSpec, delta_lambda_nm: float = 0.0) -> BinWeights:
    """Normalised power per bin at a wavelength offset.

    ``linear_coeffs[i]`` is the derivative of ``fractions[i]`` with respect to
    ``a * delta_lambda`` at zero offset.
    """
    ad = _check_coupling(spec, delta_lambda_nm)
    signs = spec.signs
    fractions = np.prod(0.5 + signs * ad, axis=1)
    # excess loss is the same on every path and cancels here
    fractions = fractions / math.fsum(fractions)
    linear = signs.sum(axis=1) * 0.5 ** (spec.stages - 1)
    return BinWeights(fractions, linear)


def effective_array_size(spec: MultiplexerSpec, delta_lambda_nm: float) -> int:
    """Number of bins whose power stays level or grows at this offset."""
    direction = np.sign(_check_coupling(spec, delta_lambda_nm))
    linear = bin_weights(spec, 0.0).linear_coeffs
    return int(np.count_nonzero(linear * direction >= 0))


def loss_budget(spec: MultiplexerSpec) -> tuple[float, float]:
    """Expected multiplexer loss in dB and the matching transmission."""
    total_db = (
        spec.stages * spec.coupler.excess_loss_db
        + spec.fiber_loss_db_per_km * spec.avg_path_m / 1000.0
    )
    return total_db, 10.0 ** (-total_db / 10.0)


class ScheduledBin(NamedTuple):
    fiber: int
    arrival_offset_ns: float


def bin_schedule(spec: MultiplexerSpec, window_ns: float = DETECTION_WINDOW_NS) -> list:
    """Arrival offset of every bin relative to the undelayed path.

    Raises :class:`OverlappingBinsError` when two bins on one fiber are closer
    than ``window_ns``.
    """
    if window_ns <= 0:
        raise ConfigError("window_ns must be positive")
    schedule = [ScheduledBin(f, d) for f, d in bin_ports(spec)]
    for fiber in (1, 2):
        offsets = sorted(s.arrival_offset_ns for s in schedule if s.fiber == fiber)
        gaps = np.diff(offsets)
        if gaps.size and gaps.min() < window_ns:
            raise OverlappingBinsError(
                f"fiber {fiber}: bins {gaps.min()} ns apart, window is {window_ns} ns"
            )
    return schedule


def max_count_rate_hz(spec: MultiplexerSpec) -> float:
    """Count rate a detector sees when every bin on its fiber clicks."""
    schedule = bin_schedule(spec)
    offsets = sorted(s.arrival_offset_ns for s in schedule if s.fiber == 1)
    return 1e9 / float(np.diff(offsets).min())


def overall_efficiency(transmission, detector_etas: Sequence[float]) -> float:
    """Multiplexer transmission times the mean detector efficiency.

    ``transmission`` is a number or a :class:`MultiplexerSpec`, in which case
    it is taken from :func:`loss_budget`.
    """
    if isinstance(transmission, MultiplexerSpec):
        transmission = loss_budget(transmission)[1]
    etas = np.asarray(detector_etas, dtype=float)
    if etas.size == 0 or np.any(etas < 0) or np.any(etas > 1):
        raise ConfigError("detector efficiencies must be a nonempty list in [0, 1]")
    if not 0.0 <= transmission <= 1.0:
        raise ConfigError("transmission must lie in [0, 1]")
    return float(transmission * etas.mean())
