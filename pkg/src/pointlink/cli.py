"""Command-line interface.

Subcommands: synth (generate a dataset), train, eval (SNR sweep), stats
(constellation usage), metrics (score two cloud files).  Reports land as
CSV/JSON plus a rendered PNG figure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report
from .cloudio import load_cloud
from .config import load_config
from .dataset import load_dataset, make_dataset, save_dataset, split_dataset
from .evaluate import constellation_stats, evaluate
from .geometry import estimate_normals
from .metrics import MetricReport, score
from .rng import RandomSource
from .train import load_trained, save_trained, train


def _add_config_args(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config field")


def _config_from_args(args):
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    return load_config(args.config, overrides)


def _cmd_synth(args) -> int:
    source = RandomSource(args.seed)
    kinds = (args.kind,) if args.kind != "mixed" else None
    clouds = (make_dataset(args.count, args.n, source, kinds=kinds)
              if kinds else make_dataset(args.count, args.n, source))
    paths = save_dataset(args.out, clouds, fmt=args.format)
    print(f"wrote {len(paths)} clouds to {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_args(args)
    clouds = load_dataset(args.data)
    train_split, _, _ = split_dataset(clouds, RandomSource(cfg.seed).derive("split"))
    init_state = None
    if args.init:
        from .checkpoint import load_checkpoint
        init_state, _ = load_checkpoint(args.init)
    system, record = train(cfg, train_split, init_state=init_state,
                           log=print if not args.quiet else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_trained(out / "model.ckpt", system, record)
    record.save(out / "run_record.json")
    report.plot_loss_curve(out / "loss_curve.png", record)
    print(f"checkpoint, run record, and loss curve written to {out}")
    return 0


def _snr_list(raw: str):
    return [float(s) for s in raw.split(",") if s.strip()]


def _cmd_eval(args) -> int:
    system, _ = load_trained(args.checkpoint)
    clouds = load_dataset(args.data)
    if args.split == "test":
        _, _, clouds = split_dataset(
            clouds, RandomSource(system.cfg.seed).derive("split"))
    summaries = evaluate(system, clouds, _snr_list(args.snr),
                         trials=args.trials, channel_kind=args.channel,
                         seed=args.seed)
    out = Path(args.out)
    csv_path = report.write_csv(out / "eval.csv", summaries[0].CSV_HEADER,
                                (s.csv_row() for s in summaries))
    report.plot_psnr_vs_snr(out / "eval.png", summaries)
    for s in summaries:
        print(s.csv_row())
    print(f"wrote {csv_path} and companion figure")
    return 0


def _cmd_stats(args) -> int:
    system, _ = load_trained(args.checkpoint)
    clouds = load_dataset(args.data)
    stats = constellation_stats(system, clouds, args.snr,
                                with_noise=not args.no_noise, seed=args.seed)
    out = Path(args.out)
    csv_path = report.write_csv(out / "constellation.csv", stats.CSV_HEADER,
                                stats.csv_rows())
    report.plot_constellation(out / "constellation.png", stats)
    print(f"entropy: {stats.entropy_bits:.3f} bits")
    print(f"wrote {csv_path} and companion figure")
    return 0


def _cmd_metrics(args) -> int:
    ref = estimate_normals(load_cloud(args.reference))
    rec = estimate_normals(load_cloud(args.reconstruction))
    rep = score(ref, rec, n_send=0, n_mod=0, peak=args.peak)
    print(MetricReport.CSV_HEADER)
    print(rep.csv_row())
    if args.out:
        report.write_csv(args.out, MetricReport.CSV_HEADER, [rep.csv_row()])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointlink",
        description="learned point-cloud tokens over simulated noisy channels")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic shape dataset")
    p.add_argument("--kind", default="mixed",
                   choices=["mixed", "sphere", "cube-surface", "torus", "plane"])
    p.add_argument("--n", type=int, default=256, help="points per cloud")
    p.add_argument("--count", type=int, default=32, help="number of clouds")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="ply", choices=["ply", "bin"])
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train the end-to-end link")
    _add_config_args(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--init", help="warm-start checkpoint (e.g. AWGN model)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint over an SNR sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--snr", default="0,5,10,15", help="comma-separated dB list")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--channel", choices=["awgn", "rayleigh"])
    p.add_argument("--split", default="test", choices=["test", "all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="constellation usage of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--snr", type=float, default=10.0)
    p.add_argument("--no-noise", action="store_true",
                   help="disable Gumbel sampling (deterministic symbols)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("metrics", help="score two point-cloud files")
    p.add_argument("reference")
    p.add_argument("reconstruction")
    p.add_argument("--peak", type=float, help="peak value P (default: from reference)")
    p.add_argument("--out", help="also write the CSV row to a file")
    p.set_defaults(func=_cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
