"""Command-line front end.

Exit codes: 0 success, 2 invalid input or usage, 3 domain/estimation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, EstimationError, OpaWitnessError, ValidationError
from .fock_core import PhotonNumberDistribution, moments
from .hbt import ClickStatistics, HbtConfig, infer_probabilities
from .opa import GainSetting, amplified_mean, asymptotic_moments, intensity_distribution, sample_pulses
from .pipeline import analyze, ingest_pulse_csv, sweep_brightness, sweep_to_csv
from .states import (
    HeraldedSourceConfig,
    apply_loss,
    heralded_spdc,
    make_coherent,
    make_fock,
    make_thermal,
    make_vacuum,
)
from .witnesses import (
    BISECT_TOL,
    CURVE_KINDS,
    CURVE_R_MAX,
    CURVE_TABLE_POINTS,
    boundary_curve,
    classify_moments,
    classify_probabilities,
)

DEFAULT_GAIN = 6.5


def parse_state(spec: str) -> tuple[PhotonNumberDistribution, dict]:
    """Parse ``vacuum``, ``fock:N``, ``thermal:MEAN``, ``coherent:MEAN``,
    ``probs:P0,P1,...``, ``heralded:PAIRS,ETA_S[,ETA_I]`` or ``file:PATH``."""
    kind, _, arg = spec.partition(":")
    extra: dict = {}
    try:
        if kind == "vacuum":
            return make_vacuum(), extra
        if kind == "fock":
            return make_fock(int(arg)), extra
        if kind == "thermal":
            return make_thermal(float(arg)), extra
        if kind == "coherent":
            return make_coherent(float(arg)), extra
        if kind == "probs":
            return PhotonNumberDistribution([float(v) for v in arg.split(",")]), extra
        if kind == "heralded":
            vals = [float(v) for v in arg.split(",")]
            if len(vals) not in (2, 3):
                raise ValidationError("heralded state needs PAIRS,ETA_S[,ETA_I]")
            dist, p_h = heralded_spdc(HeraldedSourceConfig(*vals))
            extra["herald_probability"] = p_h
            return dist, extra
        if kind == "file":
            return PhotonNumberDistribution.from_json(Path(arg).read_text()), extra
    except ValueError as exc:
        if isinstance(exc, OpaWitnessError):
            raise
        raise ValidationError(f"bad state spec {spec!r}: {exc}") from exc
    raise ValidationError(f"unknown state kind {kind!r}")


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _kv_csv(obj: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k in sorted(obj):
        v = obj[k]
        w.writerow([k, json.dumps(v) if isinstance(v, (dict, list)) else v])
    return buf.getvalue()


def _render(obj: dict, fmt: str) -> str:
    return _kv_csv(obj) if fmt == "csv" else _json(obj)


def _state_dist(args):
    dist, extra = parse_state(args.state)
    if args.loss is not None:
        dist = apply_loss(dist, args.loss)
        extra["loss"] = args.loss
    return dist, extra


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------
def cmd_simulate_state(args) -> int:
    dist, extra = _state_dist(args)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "prob"])
        for n, p in enumerate(dist.probs):
            w.writerow([n, repr(float(p))])
        _emit(buf.getvalue(), args.out)
        return 0
    ms = moments(dist)
    obj = {
        "probs": [float(p) for p in dist.probs],
        "p0": dist.p0,
        "p1": dist.p1,
        "p2plus": dist.p2plus,
        "m": ms.m,
        "s2": ms.s2,
        "g2_pre": ms.g2_pre,
        **extra,
    }
    _emit(_json(obj), args.out)
    return 0


def cmd_amplify(args) -> int:
    dist, extra = _state_dist(args)
    gain = GainSetting(args.gain)
    if args.distribution:
        dens = intensity_distribution(dist, gain, step=args.step)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "density"])
        for n, d in zip(dens.grid, dens.density):
            w.writerow([repr(float(n)), repr(float(d))])
        _emit(buf.getvalue(), args.out)
        return 0
    ms = moments(dist)
    amp = asymptotic_moments(ms)
    obj = {
        "gain": gain.G,
        "asymptotic_ok": gain.asymptotic_ok,
        "amplified_mean": amplified_mean(ms.m, gain),
        "vacuum_mean": amplified_mean(0.0, gain),
        "mu_rel": amp.mu_rel,
        "sigma2_rel": amp.sigma2_rel,
        "g2_post": amp.g2_post,
        **extra,
    }
    _emit(_render(obj, args.format), args.out)
    return 0


def cmd_sample(args) -> int:
    dist, _ = _state_dist(args)
    herald = np.ones(args.pulses, dtype=bool) if args.herald else None
    rec = sample_pulses(dist, GainSetting(args.gain), args.pulses, args.scale, seed=args.seed, herald=herald)
    if args.out:
        rec.to_csv(args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pulse_index", "counts"] + (["herald"] if herald is not None else []))
        for i, c in enumerate(rec.counts):
            w.writerow([i, repr(float(c))] + ([1] if herald is not None else []))
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_hbt_infer(args) -> int:
    stats = ClickStatistics(args.q1, args.q2, args.pulses)
    cfg = HbtConfig(args.t, args.pa, args.pb)
    est = infer_probabilities(stats, cfg)
    if args.tprime is not None:
        est = est.loss_corrected(args.tprime)
    obj = {"p0": est.p0, "p1": est.p1, "p2plus": est.p2plus, "physical": est.physical}
    if args.pulses:
        obj.update(sigma_p0=est.sigma_p0, sigma_p1=est.sigma_p1, sigma_p2plus=est.sigma_p2plus)
    _emit(_render(obj, args.format), args.out)
    return 0


def cmd_witness(args) -> int:
    if args.mu_rel is not None and args.g2 is not None:
        verdict = classify_moments(args.mu_rel, args.g2, args.sigma_mu, args.sigma_g2)
        point = {"mu_rel": args.mu_rel, "g2": args.g2}
    elif args.p0 is not None and args.p1 is not None:
        verdict = classify_probabilities(args.p0, args.p1, args.sigma_p0, args.sigma_p1)
        point = {"p0": args.p0, "p1": args.p1}
    else:
        raise ValidationError("give either --mu-rel and --g2, or --p0 and --p1")
    _emit(_render({**verdict.to_dict(), "point": point}, args.format), args.out)
    return 0


def cmd_curves(args) -> int:
    kinds = CURVE_KINDS if args.kind == "all" else (args.kind,)
    text = "".join(
        boundary_curve(k, args.r_max, args.points).to_csv_text(header=(i == 0)) for i, k in enumerate(kinds)
    )
    _emit(text, args.out)
    return 0


def cmd_analyze(args) -> int:
    signal = ingest_pulse_csv(args.signal)
    vacuum = ingest_pulse_csv(args.vacuum)
    report = analyze(signal, vacuum, n_boot=args.boot, seed=args.seed, conditioned=not args.unconditioned)
    report_dict = report.to_dict()
    report_dict["inputs"]["gain"] = args.gain
    _emit(_render(report_dict, args.format), args.out)
    return 0


SWEEP_DEFAULTS = {
    "eta_signal": 0.51,
    "eta_idler": HeraldedSourceConfig(0.0, 1.0).eta_idler,
    "dark_prob": 0.0,
    "extra_loss": 1.0,
    "mode": "analytic",
    "n_pulses": 100_000,
    "n_boot": 200,
}


def cmd_sweep(args) -> int:
    try:
        cfg = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{args.config}: {exc}") from exc
    if not isinstance(cfg, dict) or "brightness" not in cfg:
        raise ValidationError("sweep config must be a JSON object with a 'brightness' list")
    merged = {**SWEEP_DEFAULTS, **cfg}
    base = HeraldedSourceConfig(0.0, float(merged["eta_signal"]), float(merged["eta_idler"]), float(merged["dark_prob"]))
    rows = sweep_brightness(
        base,
        [float(b) for b in merged["brightness"]],
        extra_loss=float(merged["extra_loss"]),
        gain=float(merged.get("gain", args.gain)),
        mode=merged["mode"],
        n_pulses=int(merged["n_pulses"]),
        seed=int(merged.get("seed", args.seed)),
        n_boot=int(merged["n_boot"]),
    )
    if args.format == "json" and args.format_given:
        _emit(_json({"rows": rows}), args.out)
    else:
        _emit(sweep_to_csv(rows), args.out)
    return 0


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------
def _global_flags(parser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="root RNG seed (default 0)")
    parser.add_argument("--gain", type=float, default=d(DEFAULT_GAIN), help="parametric gain G (default 6.5)")
    parser.add_argument("--format", choices=("csv", "json"), default=d("json"), help="output format")
    parser.add_argument("--out", default=d(None), help="output path (default stdout)")


def _version_text() -> str:
    return (
        f"opawitness {__version__} "
        f"(curve table {CURVE_TABLE_POINTS} points over r in [0, {CURVE_R_MAX:g}]; "
        f"bisection tolerance {BISECT_TOL:g})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opawitness",
        description="Photon-number statistics and NC/NG witnesses for amplified states.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=_version_text())
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    state_help = "vacuum | fock:N | thermal:MEAN | coherent:MEAN | probs:P0,P1,... | heralded:PAIRS,ETA_S[,ETA_I] | file:PATH"

    p = add("simulate-state", cmd_simulate_state, "Build an input state and print its probabilities and moments.")
    p.add_argument("--state", required=True, help=state_help)
    p.add_argument("--loss", type=float, help="apply binomial loss with this transmittance")

    p = add("amplify", cmd_amplify, "High-gain moments, or the intensity distribution, of an amplified state.")
    p.add_argument("--state", required=True, help=state_help)
    p.add_argument("--loss", type=float, help="apply binomial loss with this transmittance")
    p.add_argument("--distribution", action="store_true", help="emit the N,density table instead of moments")
    p.add_argument("--step", type=float, default=5e-4, help="quadrature grid resolution")

    p = add("sample", cmd_sample, "Simulate detected intensities of amplified pulses as pulse_index,counts CSV.")
    p.add_argument("--state", required=True, help=state_help)
    p.add_argument("--loss", type=float, help="apply binomial loss with this transmittance")
    p.add_argument("--pulses", type=int, default=35000, help="number of pulses")
    p.add_argument("--scale", type=float, default=1.0, help="detection efficiency scale in (0, 1]")
    p.add_argument("--herald", action="store_true", help="add a herald column set to 1")

    p = add("hbt-infer", cmd_hbt_infer, "Photon-number probabilities from HBT click rates.")
    p.add_argument("--q1", type=float, required=True, help="probability of exactly one click")
    p.add_argument("--q2", type=float, required=True, help="probability of a double click")
    p.add_argument("--t", type=float, required=True, help="beam splitter transmittance")
    p.add_argument("--pa", type=float, required=True, help="efficiency of detector A (transmitted port)")
    p.add_argument("--pb", type=float, required=True, help="efficiency of detector B (reflected port)")
    p.add_argument("--tprime", type=float, help="correct for extra loss with this transmittance")
    p.add_argument("--pulses", type=int, help="number of pulses behind the rates (enables errors)")

    p = add("witness", cmd_witness, "Classify a (mu_rel, g2) or (p0, p1) point.")
    p.add_argument("--mu-rel", type=float)
    p.add_argument("--g2", type=float)
    p.add_argument("--sigma-mu", type=float, default=0.0)
    p.add_argument("--sigma-g2", type=float, default=0.0)
    p.add_argument("--p0", type=float)
    p.add_argument("--p1", type=float)
    p.add_argument("--sigma-p0", type=float, default=0.0)
    p.add_argument("--sigma-p1", type=float, default=0.0)

    p = add("curves", cmd_curves, "Emit boundary curves as kind,param,x,y CSV.")
    p.add_argument("--kind", default="all", help=f"all, or one of {', '.join(CURVE_KINDS)} (suffix optional)")
    p.add_argument("--r-max", type=float, default=CURVE_R_MAX)
    p.add_argument("--points", type=int, default=1000)

    p = add("analyze", cmd_analyze, "Analyze signal pulses against an amplified-vacuum reference.")
    p.add_argument("--signal", required=True, help="signal pulse CSV")
    p.add_argument("--vacuum", required=True, help="amplified vacuum pulse CSV")
    p.add_argument("--boot", type=int, default=1000, help="bootstrap resamples")
    p.add_argument("--unconditioned", action="store_true", help="ignore the herald column")

    p = add("sweep", cmd_sweep, "Brightness sweep of the heralded-state model.")
    p.add_argument("--config", required=True, help="JSON with 'brightness' and optional model settings")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.format_given = "--format" in argv
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stderr.close()
        return 0
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, EstimationError, OpaWitnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
