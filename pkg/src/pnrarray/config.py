"""YAML run configuration shared by the command-line tools.

Every section is optional; missing keys fall back to the reference setup
(16 bins, eta = 0.49, no dark counts, 10^6 pulses, 150 ns bin spacing).
See ``configs/reference.yaml`` for the complete, commented default file.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .detector import DetectorConfig
from .errors import ConfigError
from .ingest import DEFAULT_LATENCY_NS, DEFAULT_PERIOD_NS, TriggerConfig
from .montecarlo import SimDetector, Source, uniform_detector
from .multiplexer import DETECTION_WINDOW_NS, CouplerSpec, MultiplexerSpec, bin_weights

__all__ = ["RunConfig", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    # optional per-bin overrides for simulation; None means homogeneous
    bin_etas: tuple | None = None
    weights: str = "uniform"  # or "multiplexer"
    delta_lambda_nm: float = 0.0
    multiplexer: MultiplexerSpec = field(default_factory=MultiplexerSpec)
    source: Source = field(default_factory=lambda: Source.poisson(5.0))
    n_pulses: int = 1_000_000
    seed: int = 2021
    workers: int = 1
    period_ns: float = DEFAULT_PERIOD_NS
    window_ns: float = DETECTION_WINDOW_NS
    latency_ns: float = DEFAULT_LATENCY_NS
    od_list: tuple = (5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    mu0: float = 150.0 / 0.49
    m_max: int | None = None
    classify_rule: str = "map"
    delta_lambda_range: tuple = (-10.0, 10.0, 21)

    def __post_init__(self) -> None:
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ConfigError("n_pulses must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.weights not in ("uniform", "multiplexer"):
            raise ConfigError("weights must be 'uniform' or 'multiplexer'")
        if self.weights == "multiplexer" and self.multiplexer.n_bins != self.detector.n:
            raise ConfigError("multiplexer bin count differs from detector n")
        if self.bin_etas is not None and len(self.bin_etas) != self.detector.n:
            raise ConfigError("bin_etas needs one entry per bin")
        if not self.mu0 > 0:
            raise ConfigError("mu0 must be positive")
        if not np.all(np.isfinite(self.od_list)) or len(self.od_list) == 0:
            raise ConfigError("od_list must hold finite values")
        if len(self.delta_lambda_range) != 3:
            raise ConfigError("delta_lambda_range is (start, stop, points)")
        num = self.delta_lambda_range[2]
        if int(num) != num or num < 1:
            raise ConfigError("delta_lambda_range needs an integer point count")

    def sim_detector(self) -> SimDetector:
        det = uniform_detector(self.detector)
        weights, etas = det.weights, det.etas
        if self.weights == "multiplexer":
            weights = bin_weights(self.multiplexer, self.delta_lambda_nm).fractions
        if self.bin_etas is not None:
            etas = np.asarray(self.bin_etas, dtype=float)
        return SimDetector(weights, etas, det.p_ds)

    def trigger(self) -> TriggerConfig:
        return TriggerConfig.from_multiplexer(
            self.multiplexer, self.latency_ns, self.period_ns, self.window_ns
        )

    def delta_lambda_grid(self) -> np.ndarray:
        lo, hi, num = self.delta_lambda_range
        return np.linspace(float(lo), float(hi), int(num))

    def with_overrides(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Effective parameters, all defaults resolved."""
        mux = self.multiplexer
        return {
            "detector": dataclasses.asdict(self.detector),
            "bin_etas": None if self.bin_etas is None else list(self.bin_etas),
            "weights": self.weights,
            "delta_lambda_nm": self.delta_lambda_nm,
            "multiplexer": {
                "stages": mux.stages,
                "loop_delays_ns": list(mux.loop_delays_ns),
                "fiber_loss_db_per_km": mux.fiber_loss_db_per_km,
                "avg_path_m": mux.avg_path_m,
                "input_port": mux.input_port,
                "coupler": dataclasses.asdict(mux.coupler),
                "routing": [list(r) for r in mux.routing],
            },
            "source": {"kind": self.source.kind, "value": self.source.value},
            "n_pulses": self.n_pulses,
            "seed": self.seed,
            "workers": self.workers,
            "trigger": {
                "period_ns": self.period_ns,
                "window_ns": self.window_ns,
                "latency_ns": self.latency_ns,
            },
            "sweep": {"od_list": list(self.od_list), "mu0": self.mu0},
            "classify": {"m_max": self.m_max, "rule": self.classify_rule},
            "bandwidth": {"delta_lambda_range": list(self.delta_lambda_range)},
        }


_SECTIONS = {
    "detector", "multiplexer", "source", "simulation", "trigger",
    "sweep", "classify", "bandwidth",
}


def _take(section: dict, name: str, allowed: set) -> dict:
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    return dict(section)


def _source(raw: dict) -> Source:
    kind = raw.get("kind", "poisson")
    if kind == "poisson":
        return Source.poisson(raw.get("mu", 5.0))
    if kind == "fock":
        return Source.fock(raw.get("m", 1))
    raise ConfigError(f"unknown source kind {kind!r}")


def config_from_dict(raw: dict | None) -> RunConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    unknown = set(raw) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
    try:
        det = _take(raw.get("detector"), "detector", {"n", "eta", "p_d", "bin_etas", "weights", "delta_lambda_nm"})
        mux = _take(raw.get("multiplexer"), "multiplexer", {f.name for f in dataclasses.fields(MultiplexerSpec)})
        src = _take(raw.get("source"), "source", {"kind", "mu", "m"})
        sim = _take(raw.get("simulation"), "simulation", {"n_pulses", "seed", "workers"})
        trig = _take(raw.get("trigger"), "trigger", {"period_ns", "window_ns", "latency_ns"})
        sweep = _take(raw.get("sweep"), "sweep", {"od_list", "mu0"})
        cls = _take(raw.get("classify"), "classify", {"m_max", "rule"})
        bw = _take(raw.get("bandwidth"), "bandwidth", {"delta_lambda_range"})

        kwargs = {}
        for key in ("bin_etas", "weights", "delta_lambda_nm"):
            if key in det:
                kwargs[key] = det.pop(key)
        if kwargs.get("bin_etas") is not None:
            kwargs["bin_etas"] = tuple(kwargs["bin_etas"])
        kwargs["detector"] = DetectorConfig(**det)
        if "coupler" in mux:
            mux["coupler"] = CouplerSpec(**mux["coupler"])
        if "loop_delays_ns" in mux:
            mux["loop_delays_ns"] = tuple(mux["loop_delays_ns"])
        kwargs["multiplexer"] = MultiplexerSpec(**mux)
        if src:
            kwargs["source"] = _source(src)
        kwargs.update(sim)
        kwargs.update(trig)
        if "od_list" in sweep:
            kwargs["od_list"] = tuple(float(v) for v in sweep["od_list"])
        if "mu0" in sweep:
            kwargs["mu0"] = float(sweep["mu0"])
        if "m_max" in cls:
            kwargs["m_max"] = cls["m_max"]
        if "rule" in cls:
            kwargs["classify_rule"] = cls["rule"]
        if "delta_lambda_range" in bw:
            kwargs["delta_lambda_range"] = tuple(bw["delta_lambda_range"])
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw)
