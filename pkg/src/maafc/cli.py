"""Command line entry point: ``maafc <subcommand> [options]``.

Failures exit with status 1 and print one JSON line to stderr, e.g.
``{"error": "ValueError", "message": "..."}``.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .codec import CodeSpec, bpsk_map, build_generator, encode
from .decoder import GAUSS, decode, write_trace_csv
from .density import DeScenario, de_run, write_trajectory_csv
from .harness import (
    CURVE_COLUMNS,
    _Runner,
    _write_csv,
    ber_curve,
    load_config,
    run_ber_point,
    sweep_snr,
)
from .weights import GaussFitSpec, coded_symbol_pmf, design_weights, gaussianity_residual

CHECK_MODES = {"exact": "exact", "gauss": GAUSS}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--threads", type=int, help="worker threads for Monte Carlo batches")
    p.add_argument("--check-mode", choices=sorted(CHECK_MODES), help="check-node update")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="maafc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-weights", parents=[common], help="search for a Gaussian-like weight set")
    p.add_argument("--f", type=int, default=8)
    p.add_argument("--d", type=int, default=None, help="coded-symbol degree (default f)")
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--i-max", type=int, default=15)
    p.add_argument("--mode", choices=["matched_variance", "standard_normal"], default="matched_variance")
    p.add_argument("--replacement", action="store_true")
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--steps", type=int, default=400)

    p = sub.add_parser("encode", parents=[common], help="build a generator matrix from a code spec")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--bits", help="message as a 0/1 string; also writes coded symbols")
    p.add_argument("--symbols-out", help="CSV path for coded symbols (with --bits)")

    for name, help_text in (
        ("simulate", "BER at one operating point"),
        ("de", "density-evolution trajectory"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--m", type=int, help="received symbols")
        g.add_argument("--inverse-rate", type=float, help="m / (users * k)")
        if name == "simulate":
            p.add_argument("--trace", help="write a per-iteration decoder trace of frame 0 to this CSV")

    sub.add_parser("sweep-snr", parents=[common], help="minimum symbols and sum-rate per SNR")
    sub.add_parser("ber-curve", parents=[common], help="BER versus inverse sum-rate")
    return parser


def _experiment(args):
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    over = {"master_seed": args.seed, "threads": args.threads}
    if args.check_mode:
        over["check_mode"] = CHECK_MODES[args.check_mode]
    return load_config(doc, **over)


def _emit(args, text: str):
    if args.out:
        try:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _m_from(args, cfg):
    if args.m is not None:
        return args.m
    return max(1, int(round(args.inverse_rate * cfg.n_users * cfg.k)))


def cmd_design_weights(args):
    spec = GaussFitSpec(args.delta, args.epsilon, args.i_max, args.mode)
    ws = design_weights(
        args.f,
        args.d,
        spec,
        args.seed or 0,
        replacement=args.replacement,
        restarts=args.restarts,
        steps=args.steps,
    )
    d = args.f if args.d is None else args.d
    res = gaussianity_residual(coded_symbol_pmf(ws, d, args.replacement), spec)
    print(json.dumps({"residual": res}), file=sys.stderr)
    _emit(args, ws.to_json() + "\n")


def cmd_encode(args):
    if not args.config:
        raise ValueError("encode needs --config with a code spec")
    with open(args.config) as fh:
        spec = CodeSpec.from_json(fh.read())
    g = build_generator(spec, args.rows)
    _emit(args, g.to_text())
    if args.bits:
        if not args.symbols_out:
            raise ValueError("--bits requires --symbols-out")
        u = encode(g, bpsk_map([int(c) for c in args.bits.strip()]))
        _write_csv(args.symbols_out, ["row", "u"], [[i, float(v)] for i, v in enumerate(u)])


def cmd_simulate(args):
    cfg = _experiment(args)
    m = _m_from(args, cfg)
    pt = run_ber_point(cfg, m)
    rows = [
        [pt.inverse_sum_rate, m, pt.snr_db, j + 1, float(u.h), u.d, pt.ber_sim[j], pt.ber_de[j],
         pt.bit_errors[j], pt.bits_per_user, pt.frames, pt.resolved[j], pt.mean_llr[j], pt.de_mean[j]]
        for j, u in enumerate(cfg.users)
    ]
    _emit(args, _write_csv(None, CURVE_COLUMNS, rows))
    if args.trace:
        code, y, truth = _Runner(cfg).frame(0, m)
        res = decode(code, y, cfg.decoder, truth=truth)
        write_trace_csv(args.trace, res.trace)


def cmd_de(args):
    cfg = _experiment(args)
    m = _m_from(args, cfg)
    traj, _ = de_run(DeScenario.from_scenario(cfg.nominal_scenario(), m))
    _emit(args, write_trajectory_csv(None, traj))


def cmd_sweep_snr(args):
    cfg = _experiment(args)
    _, text = sweep_snr(cfg)
    _emit(args, text)


def cmd_ber_curve(args):
    cfg = _experiment(args)
    _, text = ber_curve(cfg)
    _emit(args, text)


COMMANDS = {
    "design-weights": cmd_design_weights,
    "encode": cmd_encode,
    "simulate": cmd_simulate,
    "de": cmd_de,
    "sweep-snr": cmd_sweep_snr,
    "ber-curve": cmd_ber_curve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
