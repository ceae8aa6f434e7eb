"""Command-line entry point: ``pnrarray <command> [options]``.

Commands write their results into ``--out`` (default: current directory).
Exit codes: 0 success, 2 invalid configuration or input, 3 I/O failure,
4 statistical degeneracy (e.g. a saturated sample).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import PNRError, StatisticalError, SaturatedError
from .estimation import (
    ClickSample,
    attenuation_fit,
    fock_classify,
    mle_mu,
)
from .ingest import bin_events, parse_timetags, read_click_counts, write_click_counts
from .montecarlo import Source, run_experiment
from .multiplexer import bin_ports, bin_weights, effective_array_size

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_STATISTICS = 0, 2, 3, 4


def _clean(obj):
    """Make numpy scalars/arrays JSON-ready; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def write_json(path: Path, payload: dict) -> None:
    # float repr is the shortest string that round-trips exactly
    path.write_text(json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n", encoding="utf-8")


def write_histogram_csv(path: Path, histogram) -> None:
    lines = ["x,count"] + [f"{x},{int(c)}" for x, c in enumerate(histogram)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sample(path: Path, n_bins: int) -> ClickSample:
    """Load a histogram CSV (``x,count`` header) or a one-count-per-line file."""
    text = path.read_text(encoding="utf-8")
    if text.startswith("x,count"):
        rows = list(csv.reader(io.StringIO(text)))[1:]
        hist = np.zeros(n_bins + 1, dtype=np.int64)
        for x, c in rows:
            if int(x) > n_bins:
                raise PNRError(f"click count {x} exceeds n={n_bins}")
            hist[int(x)] = int(c)
        return ClickSample(hist)
    return ClickSample.from_counts(read_click_counts(text), n_bins)


def _estimate_payload(cfg: RunConfig, sample: ClickSample) -> dict:
    est = mle_mu(cfg.detector, sample)
    return {
        "mu_hat": est.mu_hat,
        "std": est.std,
        "crb_floor": est.crb_floor,
        "resolution": est.resolution,
        "N": est.n_pulses,
        "mean_clicks": est.mean_clicks,
        "clamped": est.clamped,
    }


def cmd_simulate(cfg: RunConfig, out: Path) -> dict:
    start = time.perf_counter()
    result = run_experiment(cfg.sim_detector(), cfg.source, cfg.n_pulses, cfg.seed, cfg.workers)
    runtime = time.perf_counter() - start
    write_histogram_csv(out / "histogram.csv", result.histogram)
    summary = {"inputs": cfg.to_dict(), "seed": cfg.seed, "runtime_s": runtime,
               "histogram": result.histogram}
    try:
        summary["estimate"] = _estimate_payload(cfg, result.sample)
    except StatisticalError as exc:
        summary["estimate"] = {"error": str(exc)}
    write_json(out / "summary.json", summary)
    return summary


def cmd_estimate(cfg: RunConfig, sample_path: Path, out: Path) -> dict:
    sample = read_sample(sample_path, cfg.detector.n)
    payload = {"inputs": cfg.to_dict(), "sample": str(sample_path)}
    payload.update(_estimate_payload(cfg, sample))
    write_json(out / "estimate.json", payload)
    return payload


def cmd_sweep(cfg: RunConfig, out: Path) -> dict:
    """Simulate an attenuation sweep, estimate every point and fit the decade slope.

    Point ``i`` is simulated at ``mu0 * 10**-(od_i - min(od))`` with seed
    ``seed + i``. Saturated points are kept in the table but left out of the fit.
    """
    det = cfg.sim_detector()
    od_ref = min(cfg.od_list)
    rows, fit_points = [], []
    for i, od in enumerate(cfg.od_list):
        mu = cfg.mu0 * 10.0 ** (-(od - od_ref))
        res = run_experiment(det, Source.poisson(mu), cfg.n_pulses, cfg.seed + i, cfg.workers)
        row = {"od": od, "mu_true": mu, "mu_hat": float("nan"), "std": float("nan"),
               "resolution": float("nan"), "mean_clicks": float("nan"), "saturated": 0}
        try:
            est = mle_mu(cfg.detector, res.sample)
        except SaturatedError:
            row["saturated"] = 1
            row["mean_clicks"] = float(cfg.detector.n)
        else:
            row.update(mu_hat=est.mu_hat, std=est.std, resolution=est.resolution,
                       mean_clicks=est.mean_clicks)
            if est.mu_hat > 0:
                fit_points.append((od, est.mu_hat))
        rows.append(row)

    fields = ["od", "mu_true", "mu_hat", "std", "resolution", "mean_clicks", "saturated"]
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for r in rows:
            writer.writerow([repr(float(r[f])) if f != "saturated" else r[f] for f in fields])
    fit = attenuation_fit(fit_points)
    payload = {
        "inputs": cfg.to_dict(),
        "amplitude": fit.amplitude,
        "decade_slope": fit.decade_slope,
        "residuals": fit.residuals,
        "n_fit_points": len(fit_points),
        "rows": rows,
    }
    write_json(out / "sweep.json", payload)
    return payload


def cmd_classify(cfg: RunConfig, out: Path) -> dict:
    cls = fock_classify(cfg.detector, cfg.m_max, cfg.classify_rule)
    n = cfg.detector.n
    with open(out / "classify_matrix.csv", "w", encoding="utf-8") as fh:
        fh.write("m," + ",".join(f"x{x}" for x in range(n + 1)) + "\n")
        for m, row in enumerate(cls.matrix):
            fh.write(f"{m}," + ",".join(repr(float(p)) for p in row) + "\n")
    payload = {
        "inputs": cfg.to_dict(),
        "rule": cfg.classify_rule,
        "decision_map": {str(x): int(m) for x, m in enumerate(cls.decision_map)},
        "success_probs": cls.success_probs,
        "max_resolvable": cls.max_resolvable,
    }
    write_json(out / "classify.json", payload)
    return payload


def cmd_bandwidth(cfg: RunConfig, out: Path) -> dict:
    spec = cfg.multiplexer
    grid = cfg.delta_lambda_grid()
    n_bins = spec.n_bins
    table = []
    for dl in grid:
        w = bin_weights(spec, dl)
        table.append([dl, *w.fractions, effective_array_size(spec, dl)])
    header = ["delta_lambda_nm"] + [f"bin{i + 1:02d}" for i in range(n_bins)] + ["effective_size"]
    with open(out / "bandwidth.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in table:
            fh.write(",".join(repr(float(v)) for v in row[:-1]) + f",{int(row[-1])}\n")
    coeffs = bin_weights(spec, 0.0).linear_coeffs
    with open(out / "bandwidth_coeffs.csv", "w", encoding="utf-8") as fh:
        fh.write("bin,fiber,delay_ns,linear_coeff\n")
        for i, ((fiber, delay), c) in enumerate(zip(bin_ports(spec), coeffs)):
            fh.write(f"{i + 1},{fiber},{delay!r},{float(c)!r}\n")
    payload = {
        "inputs": cfg.to_dict(),
        "delta_lambda_nm": grid,
        "effective_size": [int(r[-1]) for r in table],
        "linear_coeffs": coeffs,
    }
    write_json(out / "bandwidth.json", payload)
    return payload


def cmd_ingest(cfg: RunConfig, tags_path: Path, out: Path) -> dict:
    records = parse_timetags(tags_path.read_bytes())
    binned = bin_events(records, cfg.trigger())
    with open(out / "sample.csv", "w", encoding="utf-8", newline="") as fh:
        write_click_counts(binned.counts, fh)
    payload = {
        "inputs": cfg.to_dict(),
        "timetags": str(tags_path),
        "n_triggers": int(binned.counts.size),
        "n_events": binned.n_events,
        "assigned_events": binned.assigned,
        "stray_events": binned.stray,
    }
    detector_cfg = cfg.detector
    if binned.n_bins != detector_cfg.n:
        detector_cfg = detector_cfg.replace(n=binned.n_bins)
    try:
        payload["estimate"] = _estimate_payload(
            RunConfig(detector=detector_cfg, multiplexer=cfg.multiplexer), binned.sample
        )
    finally:
        write_json(out / "ingest.json", payload)
    return payload


def _range(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected START:STOP:POINTS")
    return float(parts[0]), float(parts[1]), int(parts[2])


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")

    parser = argparse.ArgumentParser(
        prog="pnrarray",
        description="Simulate, estimate and classify with temporal-array photon-number-resolving detectors.",
        epilog="Exit codes: 0 ok, 2 bad configuration or input, 3 I/O error, 4 statistical degeneracy.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo click histogram")
    p.add_argument("--mu", type=float, help="Poisson mean photon number")
    p.add_argument("--fock", type=int, help="use a Fock source with this photon number")
    p.add_argument("--n-pulses", type=int)

    p = sub.add_parser("estimate", parents=[common], help="estimate mu from a click sample")
    p.add_argument("sample", type=Path, help="histogram CSV or one-count-per-line file")

    p = sub.add_parser("sweep", parents=[common], help="attenuation sweep with decade-slope fit")
    p.add_argument("--od-list", type=_floats, help="comma-separated optical densities")
    p.add_argument("--mu0", type=float, help="mean photon number at the smallest OD")
    p.add_argument("--n-pulses", type=int)

    p = sub.add_parser("classify", parents=[common], help="single-shot Fock classification")
    p.add_argument("--m-max", type=int)
    p.add_argument("--rule", choices=["map", "direct"])

    p = sub.add_parser("bandwidth", parents=[common], help="per-bin power versus wavelength")
    p.add_argument("--delta-lambda-range", type=_range, help="START:STOP:POINTS in nm")

    p = sub.add_parser("ingest", parents=[common], help="bin a time-tag file into clicks")
    p.add_argument("timetags", type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {"seed": args.seed}
        if args.command in ("simulate", "sweep"):
            overrides["n_pulses"] = args.n_pulses
        if args.command == "simulate":
            if args.fock is not None:
                overrides["source"] = Source.fock(args.fock)
            elif args.mu is not None:
                overrides["source"] = Source.poisson(args.mu)
        elif args.command == "sweep":
            overrides["od_list"] = args.od_list
            overrides["mu0"] = args.mu0
        elif args.command == "classify":
            overrides["m_max"] = args.m_max
            overrides["classify_rule"] = args.rule
        elif args.command == "bandwidth":
            overrides["delta_lambda_range"] = args.delta_lambda_range
        cfg = cfg.with_overrides(**overrides)
        args.out.mkdir(parents=True, exist_ok=True)

        if args.command == "simulate":
            cmd_simulate(cfg, args.out)
        elif args.command == "estimate":
            cmd_estimate(cfg, args.sample, args.out)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.out)
        elif args.command == "classify":
            cmd_classify(cfg, args.out)
        elif args.command == "bandwidth":
            cmd_bandwidth(cfg, args.out)
        elif args.command == "ingest":
            cmd_ingest(cfg, args.timetags, args.out)
    except StatisticalError as exc:
        print(f"pnrarray {args.command}: {exc}", file=sys.stderr)
        return EXIT_STATISTICS
    except (PNRError, ValueError) as exc:
        print(f"pnrarray {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"pnrarray {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
