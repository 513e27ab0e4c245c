"""Command-line front end.

Subcommands: ``calibrate`` refreshes the composite-beam calibration cache,
``estimate`` and ``design`` run single random instances of the gain
estimator and the multicast design, ``fig1``/``fig2`` run full Monte Carlo
campaigns from a config file, and ``oracle`` runs small-instance
exhaustive checks.  Exit codes: 0 success, 1 invalid config or refused
request, 2 usage errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .baselines import (
    SearchSpaceError,
    exhaustive_beamformer_oracle,
    matched_filter_bound,
)
from .channel import ChannelStats, LinkParams, channel_vector, sample_channel
from .harness import (
    ExperimentConfig,
    emit_results,
    run_gain_error_experiment,
    run_minsnr_experiment,
)
from .multicast import (
    DesignConfig,
    min_snr_objective,
    quantized_angle_set,
    run_algorithm2,
)
from .training import CalibrationTable, build_codebook, run_algorithm1

__all__ = ["main", "entry_point"]

DEFAULT_CACHE = "composite_calibration.jsonl"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwmcast",
        description="Composite-beam gain estimation and sub-array multicast "
        "beamforming simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="build or refresh the calibration cache")
    p.add_argument("--n-antennas", type=int, default=64)
    p.add_argument("--q-samples", type=int, default=4000)
    p.add_argument("--grid-size", type=int, default=256)
    p.add_argument("--variance-mode", choices=("complex", "magnitude"),
                   default="magnitude")
    p.add_argument("--cache", default=DEFAULT_CACHE)

    p = sub.add_parser("estimate", help="single-instance gain estimation demo")
    p.add_argument("--n-antennas", type=int, default=64)
    p.add_argument("--users", type=int, default=3)
    p.add_argument("--snr-db", type=float, default=18.0)
    p.add_argument("--q-samples", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache", default=None)

    p = sub.add_parser("design", help="single-instance multicast design demo")
    p.add_argument("--n-antennas", type=int, default=64)
    p.add_argument("--users", type=int, default=3)
    p.add_argument("--snr-db", type=float, default=18.0)
    p.add_argument("--entry-bits", type=int, default=6)
    p.add_argument("--factor-bits", type=int, default=4)
    p.add_argument("--i-max", type=int, default=30)
    p.add_argument("--q-samples", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache", default=None)

    for name in ("fig1", "fig2"):
        p = sub.add_parser(name, help=f"run the {name} campaign")
        p.add_argument("--config", default="default",
                       help="path to a JSON config, or 'default'")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", default=".")
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("oracle", help="small-instance exhaustive check")
    p.add_argument("--n-antennas", type=int, default=8)
    p.add_argument("--entry-bits", type=int, default=3)
    p.add_argument("--factor-bits", type=int, default=3)
    p.add_argument("--users", type=int, default=2)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _sample_instance(n_antennas, n_users, snr_db, seed, q_samples, cache):
    """One random multi-user instance with per-user gain/AoD estimates."""
    rng = np.random.default_rng(seed)
    power = 10.0 ** (snr_db / 10.0)
    link = LinkParams(power, 1.0)
    stats = ChannelStats()
    cb = build_codebook(n_antennas)
    if cache:
        calib = CalibrationTable(cache).get_or_compute(
            n_antennas, q_samples, "magnitude"
        )
    else:
        from .training import calibrate_composite

        calib = calibrate_composite(n_antennas, q_samples,
                                    variance_mode="magnitude")
    channels, est_gains, est_aods = [], [], []
    for _ in range(n_users):
        ch = sample_channel(stats, n_antennas, 2, rng)
        gain, aod = run_algorithm1(ch, cb, link, calib, rng)
        channels.append(ch)
        est_gains.append(gain)
        est_aods.append(aod)
    return channels, est_gains, est_aods, link


def _cmd_calibrate(args) -> int:
    table = CalibrationTable(args.cache)
    calib = table.get_or_compute(
        args.n_antennas, args.q_samples, args.variance_mode, args.grid_size
    )
    print(
        f"N={calib.n_antennas} Q={calib.q_samples} mode={calib.variance_mode} "
        f"eta1={calib.eta1:.6f} eta2={calib.eta2:.6f} Z={calib.z_norm:.6f}"
    )
    print(f"cache: {table.path}")
    return 0


def _cmd_estimate(args) -> int:
    channels, est_gains, est_aods, _ = _sample_instance(
        args.n_antennas, args.users, args.snr_db, args.seed,
        args.q_samples, args.cache,
    )
    print("user  true_gain  est_gain   true_aod   est_aod")
    for k, ch in enumerate(channels):
        print(
            f"{k:4d}  {abs(ch.los.coeff):9.4f}  {est_gains[k]:8.4f}  "
            f"{ch.los.aod:9.4f}  {est_aods[k]:8.4f}"
        )
    return 0


def _cmd_design(args) -> int:
    channels, est_gains, est_aods, link = _sample_instance(
        args.n_antennas, args.users, args.snr_db, args.seed,
        args.q_samples, args.cache,
    )
    cfg = DesignConfig(
        n_antennas=args.n_antennas,
        entry_bits=args.entry_bits,
        factor_bits=args.factor_bits,
        i_max=args.i_max,
        power=link.power,
    )
    noise_stds = [1.0] * args.users
    design = run_algorithm2(est_gains, est_aods, noise_stds, cfg)
    unquant = run_algorithm2(
        est_gains, est_aods, noise_stds,
        DesignConfig(**{**cfg.__dict__, "quantize": False}),
    )
    h_true = np.stack([channel_vector(ch) for ch in channels])
    r_true = min_snr_objective(h_true, design.f_rf, link.power, 1.0)
    r_true_unq = min_snr_objective(h_true, unquant.f_rf, link.power, 1.0)
    print(f"sub-array sizes: {list(design.layout.sizes)} "
          f"(sum={sum(design.layout.sizes)})")
    print(f"phase factors:   {[round(t, 4) for t in design.phases.thetas]}")
    print(f"design objective (estimated channels): "
          f"{design.phases.objective:.6g}")
    print(f"true-channel min-SNR quantized:   {r_true:.6g} "
          f"({10 * math.log10(r_true):.2f} dB)")
    print(f"true-channel min-SNR unquantized: {r_true_unq:.6g} "
          f"({10 * math.log10(r_true_unq):.2f} dB)")
    print(f"objective evaluations: {design.eval_count}")
    return 0


def _cmd_campaign(args, kind: str) -> int:
    if args.config == "default":
        cfg = ExperimentConfig.default(kind)
    else:
        cfg = ExperimentConfig.from_json(args.config)
        if cfg.kind != kind:
            raise ValueError(
                f"config kind {cfg.kind!r} does not match subcommand {kind!r}"
            )
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    runner = (
        run_gain_error_experiment if kind == "gain-error" else run_minsnr_experiment
    )
    stats, records = runner(cfg, n_jobs=args.jobs)
    name = "fig1" if kind == "gain-error" else "fig2"
    paths = emit_results(stats, records, Path(args.out) / name)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    power = 10.0 ** (args.snr_db / 10.0)
    stats = ChannelStats()
    channels = [
        channel_vector(sample_channel(stats, args.n_antennas, 2, rng))
        for _ in range(args.users)
    ]
    h = np.stack(channels)
    entry_set = quantized_angle_set(args.entry_bits)
    oracle = exhaustive_beamformer_oracle(h, entry_set, power, 1.0)
    bound = matched_filter_bound(h, power, 1.0)
    print(f"candidates evaluated: {oracle.evaluations}")
    print(f"oracle min-SNR: {oracle.best_value:.6g} "
          f"({10 * math.log10(oracle.best_value):.2f} dB)")
    print(f"matched-filter bound: {bound:.6g} "
          f"({10 * math.log10(bound):.2f} dB)")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "calibrate": _cmd_calibrate,
        "estimate": _cmd_estimate,
        "design": _cmd_design,
        "fig1": lambda a: _cmd_campaign(a, "gain-error"),
        "fig2": lambda a: _cmd_campaign(a, "min-snr"),
        "oracle": _cmd_oracle,
    }
    try:
        return handlers[args.command](args)
    except (SearchSpaceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
