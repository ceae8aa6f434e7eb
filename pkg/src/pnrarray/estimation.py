"""Mean-photon-number estimation from click samples.

The click count of every pulse is binomial in the per-bin click probability,
so the likelihood of a sample depends on the data only through the mean
click count ``<x>``. Inverting ``<x> = n q(mu)`` gives the maximum-likelihood
estimate in closed form. The helpers here report its statistical spread (delta
method and Cramér-Rao floor), the discretisation step between neighbouring
attainable estimates, the dynamic-range ceiling, and single-shot Fock-state
classification built on the exact Fock click distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .detector import DetectorConfig, click_pmf_fock
from .errors import (
    ConfigError,
    InsufficientDataError,
    OutOfRangeError,
    SaturatedError,
)

__all__ = [
    "ClickSample",
    "MuEstimate",
    "AttenuationFit",
    "FockClassification",
    "sample_mean",
    "mu_from_mean_clicks",
    "mle_mu",
    "cramer_rao_bound",
    "delta_method_std",
    "resolution_spacing",
    "max_resolvable_mu",
    "attenuation_fit",
    "fock_classify",
]

#: Success probability a photon number needs to count as resolvable.
SUCCESS_THRESHOLD = 0.5
#: Upper limit on the photon numbers considered by ``fock_classify``.
M_MAX_CAP = 50


@dataclass(frozen=True)
class ClickSample:
    """Per-pulse click counts, stored as a histogram over ``0..n_bins``.

    Use :meth:`from_counts` for a raw list of counts.
    """

    histogram: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.histogram)
        if h.ndim != 1 or h.size < 2:
            raise ConfigError("histogram must cover click counts 0..n with n >= 1")
        if not np.issubdtype(h.dtype, np.integer):
            if not np.all(np.equal(np.mod(h, 1), 0)):
                raise ConfigError("histogram entries must be integers")
        h = h.astype(np.int64)
        if np.any(h < 0):
            raise ConfigError("histogram entries must be nonnegative")
        h.setflags(write=False)
        object.__setattr__(self, "histogram", h)

    @classmethod
    def from_counts(cls, counts: Sequence[int], n_bins: int) -> "ClickSample":
        counts = np.asarray(counts)
        if counts.size and (counts.min() < 0 or counts.max() > n_bins):
            raise ConfigError(f"click counts must lie in 0..{n_bins}")
        if counts.size and not np.all(np.equal(np.mod(counts, 1), 0)):
            raise ConfigError("click counts must be integers")
        return cls(np.bincount(counts.astype(np.int64), minlength=n_bins + 1))

    @property
    def n_bins(self) -> int:
        return self.histogram.size - 1

    @property
    def n_pulses(self) -> int:
        return int(self.histogram.sum())

    def counts(self) -> np.ndarray:
        """Expand back into a sorted array of per-pulse counts."""
        return np.repeat(np.arange(self.histogram.size), self.histogram)

    def total_clicks(self) -> int:
        return int(np.dot(np.arange(self.histogram.size), self.histogram))


@dataclass(frozen=True)
class MuEstimate:
    """MLE of the mean photon number.

    ``std`` is the delta-method standard deviation from the sample and
    ``crb_floor`` the Cramer-Rao standard deviation at ``mu_hat``; both are
    on the scale of ``mu_hat``. ``clamped`` marks a negative estimate set to 0.
    """

    mu_hat: float
    std: float
    resolution: float
    mean_clicks: float
    n_pulses: int
    crb_floor: float
    clamped: bool = False


class AttenuationFit(NamedTuple):
    amplitude: float
    decade_slope: float
    residuals: np.ndarray


class FockClassification(NamedTuple):
    decision_map: np.ndarray
    success_probs: np.ndarray
    max_resolvable: int
    matrix: np.ndarray  # matrix[m, x] = Pr(x clicks | m photons)


def _require_efficiency(cfg: DetectorConfig) -> None:
    if cfg.eta <= 0.0:
        raise ConfigError("estimation requires eta > 0")


def sample_mean(sample: ClickSample) -> float:
    if sample.n_pulses < 1:
        raise InsufficientDataError("sample contains no pulses")
    return sample.total_clicks() / sample.n_pulses


def mu_from_mean_clicks(cfg: DetectorConfig, mean_clicks: float) -> float:
    """Invert the mean click count. May be negative when ``p_d > 0``."""
    _require_efficiency(cfg)
    n = cfg.n
    if mean_clicks >= n:
        raise SaturatedError(
            f"mean click count {mean_clicks} reached the array size {n}; "
            "the estimate diverges"
        )
    if mean_clicks < 0:
        raise OutOfRangeError("mean click count must be nonnegative")
    # -(n/eta) ln((n - <x>) / ((1 - p_d) n)), split to avoid cancellation at small <x>
    return -(n / cfg.eta) * (math.log1p(-mean_clicks / n) - math.log1p(-cfg.p_d))


def cramer_rao_bound(cfg: DetectorConfig, mu: float, n_pulses: int) -> float:
    """Lower bound on the variance of an unbiased estimate of ``mu``."""
    _require_efficiency(cfg)
    if n_pulses <= 0:
        raise ConfigError("n_pulses must be positive")
    if mu < 0:
        raise ConfigError("mu must be nonnegative")
    n = cfg.n
    # (1 - p_d)^-1 e^{mu eta / n} - 1
    excess = math.expm1(mu * cfg.eta / n - math.log1p(-cfg.p_d))
    return n * excess / (cfg.eta**2 * n_pulses)


def _sample_std(sample: ClickSample) -> float:
    x = np.arange(sample.histogram.size, dtype=float)
    h = sample.histogram
    mean = sample_mean(sample)
    ss = math.fsum(h * (x - mean) ** 2)
    return math.sqrt(ss / (sample.n_pulses - 1))


def delta_method_std(cfg: DetectorConfig, sample: ClickSample) -> float:
    """Standard deviation of the estimate propagated from the sample variance."""
    _require_efficiency(cfg)
    N = sample.n_pulses
    if N < 2:
        raise InsufficientDataError("sample standard deviation needs N >= 2")
    mean = sample_mean(sample)
    if mean >= cfg.n:
        raise SaturatedError("saturated sample has no finite derivative")
    return cfg.n / (cfg.eta * (cfg.n - mean)) * _sample_std(sample) / math.sqrt(N)


def resolution_spacing(cfg: DetectorConfig, mean_clicks: float, n_pulses: int) -> float:
    """Gap between the estimate at ``mean_clicks`` and the next attainable one."""
    _require_efficiency(cfg)
    n = cfg.n
    headroom = n - mean_clicks
    step = 1.0 / n_pulses
    if headroom <= step:
        raise OutOfRangeError(
            f"mean click count {mean_clicks} leaves no finite next estimate "
            f"for n={n}, N={n_pulses}"
        )
    return -(n / cfg.eta) * math.log1p(-step / headroom)


def max_resolvable_mu(cfg: DetectorConfig, n_pulses: float) -> float:
    """Largest estimate that still has a finite successor, i.e. at ``<x> = n - 2/N``."""
    _require_efficiency(cfg)
    if n_pulses <= 0:
        raise ConfigError("n_pulses must be positive")
    return (cfg.n / cfg.eta) * math.log(cfg.n * n_pulses * (1.0 - cfg.p_d) / 2.0)


def mle_mu(cfg: DetectorConfig, sample: ClickSample) -> MuEstimate:
    """Maximum-likelihood estimate of the mean photon number.

    Negative estimates, possible with dark counts and very weak light, are
    clamped to zero and flagged. ``std`` is NaN for a single pulse, and
    ``resolution`` is infinite when the next attainable mean is saturated.
    """
    if sample.n_bins != cfg.n:
        raise ConfigError(
            f"sample was recorded with n={sample.n_bins}, detector has n={cfg.n}"
        )
    N = sample.n_pulses
    mean = sample_mean(sample)
    raw = mu_from_mean_clicks(cfg, mean)
    clamped = raw < 0.0
    mu_hat = 0.0 if clamped else raw
    std = delta_method_std(cfg, sample) if N >= 2 else float("nan")
    if cfg.n - mean > 1.0 / N:
        resolution = resolution_spacing(cfg, mean, N)
    else:
        resolution = float("inf")
    return MuEstimate(
        mu_hat=mu_hat,
        std=std,
        resolution=resolution,
        mean_clicks=mean,
        n_pulses=N,
        crb_floor=math.sqrt(cramer_rao_bound(cfg, mu_hat, N)),
        clamped=clamped,
    )


def attenuation_fit(points) -> AttenuationFit:
    """Straight-line fit of ``log10(mu_hat)`` against optical density.

    ``points`` is an iterable of ``(od, mu_hat)``. The model is
    ``log10(mu_hat) = log10(amplitude) - decade_slope * od`` with equal weights.
    """
    arr = np.asarray(list(points), dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 2:
        raise InsufficientDataError("need at least two (od, mu_hat) points")
    od, mu = arr[:, 0], arr[:, 1]
    if np.any(mu <= 0) or not np.all(np.isfinite(arr)):
        raise OutOfRangeError("all estimates must be finite and positive")
    if np.unique(od).size < 2:
        raise InsufficientDataError("need at least two distinct optical densities")
    y = np.log10(mu)
    slope, intercept = np.polyfit(od, y, 1)
    residuals = y - (intercept + slope * od)
    return AttenuationFit(10.0**intercept, -slope, residuals)


def fock_classify(
    cfg: DetectorConfig, m_max: int | None = None, rule: str = "map"
) -> FockClassification:
    """Single-shot photon-number classification from the click count.

    ``rule="map"`` picks, for each click count, the photon number with the
    highest likelihood under a uniform prior on ``0..m_max`` (ties go to the
    smaller number). ``rule="direct"`` reports the click count itself.
    ``max_resolvable`` is the largest M with success probability >= 0.5 for
    every photon number up to M, or -1 if even the vacuum fails.
    """
    if m_max is None:
        m_max = min(2 * cfg.n, M_MAX_CAP)
    if int(m_max) != m_max or not 0 <= m_max <= M_MAX_CAP:
        raise ConfigError(f"m_max must be an integer in 0..{M_MAX_CAP}")
    m_max = int(m_max)
    matrix = np.array([click_pmf_fock(cfg, m).probs for m in range(m_max + 1)])
    if rule == "map":
        decision = matrix.argmax(axis=0)
    elif rule == "direct":
        decision = np.minimum(np.arange(cfg.n + 1), m_max)
    else:
        raise ConfigError(f"unknown classification rule {rule!r}")
    success = np.array([matrix[m, decision == m].sum() for m in range(m_max + 1)])
    failing = np.flatnonzero(success < SUCCESS_THRESHOLD)
    max_resolvable = int(failing[0]) - 1 if failing.size else m_max
    return FockClassification(decision, success, max_resolvable, matrix)
