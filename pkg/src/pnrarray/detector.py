"""Click statistics of an n-element multiplexed click detector.

An input pulse is spread uniformly over ``n`` time-bins, each read by a
click/no-click detector with efficiency ``eta`` and dark-count probability
``p_d`` per bin. For a Poissonian pulse the click count is binomial,

    x ~ Binomial(n, q),    q = 1 - (1 - p_d) * exp(-mu * eta / n),

and for a Fock state of ``m`` photons the distribution follows from
inclusion-exclusion over the set of empty bins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import ConfigError

__all__ = [
    "DetectorConfig",
    "ClickPMF",
    "click_probability",
    "click_pmf_poisson",
    "click_pmf_fock",
    "click_moments",
    "variance_maximizing_mu",
]

#: Normalisation tolerance enforced on every ClickPMF.
PMF_ATOL = 1e-12


@dataclass(frozen=True)
class DetectorConfig:
    """Homogeneous detector array.

    Parameters
    ----------
    n : int
        Number of effective elements (time-bins).
    eta : float
        Overall quantum efficiency, in [0, 1].
    p_d : float
        Dark-count probability per bin per pulse, in [0, 1).
    """

    n: int = 16
    eta: float = 0.49
    p_d: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "p_d", float(self.p_d))
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if not 0.0 <= self.p_d < 1.0:
            raise ConfigError(f"p_d must lie in [0, 1), got {self.p_d}")

    def replace(self, **changes) -> "DetectorConfig":
        fields = {"n": self.n, "eta": self.eta, "p_d": self.p_d}
        fields.update(changes)
        return DetectorConfig(**fields)


@dataclass(frozen=True)
class ClickPMF:
    """Probability mass over click counts ``x = 0..n``."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("probs must be a 1-d array of length n + 1 >= 2")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(math.fsum(p) - 1.0) > PMF_ATOL:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return self.probs.size - 1

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, x):
        return self.probs[x]

    def mean(self) -> float:
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def variance(self) -> float:
        x = np.arange(self.probs.size)
        mean = self.mean()
        return float(np.dot((x - mean) ** 2, self.probs))

    def tv_distance(self, other) -> float:
        """Total-variation distance to another PMF or a raw array."""
        q = other.probs if isinstance(other, ClickPMF) else np.asarray(other, float)
        if q.shape != self.probs.shape:
            raise ValueError("PMFs have different support")
        return 0.5 * float(np.abs(self.probs - q).sum())


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not mu >= 0.0:
        raise ConfigError(f"mu must be a nonnegative number, got {mu}")
    return mu


def click_probability(cfg: DetectorConfig, mu: float) -> float:
    """Probability that a single bin clicks for a Poissonian input of mean ``mu``."""
    mu = _check_mu(mu)
    # q = 1 - (1 - p_d) exp(-mu eta / n), written to keep precision at small q
    return float(-np.expm1(np.log1p(-cfg.p_d) - mu * cfg.eta / cfg.n))


def click_pmf_poisson(cfg: DetectorConfig, mu: float) -> ClickPMF:
    """Click-count distribution for a Poissonian pulse of mean photon number ``mu``.

    Evaluated through the binomial form with log-domain coefficients, which
    stays finite for ``mu * eta >> n`` where the product form overflows.
    """
    mu = _check_mu(mu)
    n = cfg.n
    q = click_probability(cfg, mu)
    log_miss = np.log1p(-cfg.p_d) - mu * cfg.eta / n  # log(1 - q)
    x = np.arange(n + 1)
    log_coef = gammaln(n + 1) - gammaln(x + 1) - gammaln(n - x + 1)
    logp = log_coef + xlogy(x, q) + (n - x) * log_miss
    if q == 1.0:
        logp = np.where(x == n, 0.0, -np.inf)
    probs = np.exp(logp)
    # rounding in exp/gammaln leaves ~1e-15 of slack
    probs /= math.fsum(probs)
    return ClickPMF(probs)


@lru_cache(maxsize=4096)
def _fock_probs(n: int, eta: float, p_d: float, m: int) -> tuple:
    # Exact rational evaluation of the alternating sum. Floats convert to
    # Fraction without rounding, so the only error is the final division.
    e = Fraction(eta)
    keep = 1 - Fraction(p_d)
    scale = Fraction(1, n**m)
    out = []
    for x in range(n + 1):
        total = Fraction(0)
        for l in range(x + 1):
            empty = n - x + l
            term = math.comb(x, l) * keep**empty * (n - empty * e) ** m
            total += -term if l % 2 else term
        value = math.comb(n, x) * total * scale
        if value < 0:
            raise ArithmeticError(f"negative probability {float(value)} at x={x}")
        out.append(value)
    if sum(out) != 1:
        raise ArithmeticError("Fock click distribution does not normalise")
    return tuple(float(v) for v in out)


def click_pmf_fock(cfg: DetectorConfig, m: int) -> ClickPMF:
    """Click-count distribution when exactly ``m`` photons enter the array."""
    if isinstance(m, bool) or int(m) != m or m < 0:
        raise ConfigError(f"m must be a nonnegative integer, got {m!r}")
    probs = np.array(_fock_probs(cfg.n, cfg.eta, cfg.p_d, int(m)))
    # float conversion of each entry can leave the sum a few ulp off
    probs /= math.fsum(probs)
    return ClickPMF(probs)


def click_moments(cfg: DetectorConfig, mu: float) -> tuple[float, float]:
    """Mean and variance of the click count for a Poissonian input."""
    q = click_probability(cfg, mu)
    return cfg.n * q, cfg.n * q * (1.0 - q)


def variance_maximizing_mu(cfg: DetectorConfig) -> float:
    """Mean photon number at which the click-count variance peaks.

    Only defined without dark counts, where the peak sits at
    ``mu * eta = n ln 2`` (each bin clicks with probability 1/2).
    """
    if cfg.eta <= 0.0:
        raise ConfigError("variance peak is undefined for zero efficiency")
    if cfg.p_d != 0.0:
        raise ConfigError("closed form for the variance peak assumes p_d = 0")
    return cfg.n * math.log(2.0) / cfg.eta
