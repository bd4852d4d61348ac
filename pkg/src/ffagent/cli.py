"""``ffagent`` command line: generate | train | run | compare.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .evaluation import comparison_csv, read_comparison_csv, write_comparison_csv
from .experiment import evaluate, split_dataset
from .qnet import QNetwork, WeightsFormatError, load_weights, save_weights
from .runtime import RuntimeConfig, SelectionResult, run_policy
from .stream import DatasetError, generate_synthetic, load_dataset, read_features, save_dataset
from .trainer import NumericError, TrainingLog, train

log = logging.getLogger("ffagent")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class DataError(RuntimeError):
    pass


def _config(args) -> ExperimentConfig:
    return load_config(args.config, args.set or ())


def _splits(cfg: ExperimentConfig, videos):
    if cfg.evaluation.test_fraction == 0 or len(videos) < 2:
        return list(videos), list(videos)
    return split_dataset(videos, cfg.evaluation.test_fraction, cfg.evaluation.seed)


def _load_net(path, cfg: ExperimentConfig, input_dim: int | None = None) -> QNetwork:
    try:
        net = load_weights(path, activation=cfg.qnet.get("activation", "relu"), expected_input_dim=input_dim)
    except FileNotFoundError:
        raise DataError(f"{path}: weights file not found") from None
    if net.config.output_dim != cfg.actions.size:
        raise DataError(f"{path}: network has {net.config.output_dim} outputs, action space has {cfg.actions.size}")
    return net


def cmd_generate(args) -> int:
    cfg = _config(args)
    videos = generate_synthetic(cfg.synthetic)
    out = Path(args.out)
    try:
        manifest = save_dataset(videos, out)
    except OSError as exc:
        raise DataError(f"{out}: cannot write dataset ({exc})") from None
    if load_dataset(manifest) != videos:
        raise DataError(f"{manifest}: written dataset does not reload identically")
    log.info("wrote %d videos to %s", len(videos), out)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    videos = load_dataset(args.data)
    train_set, _ = _splits(cfg, videos)
    qcfg = cfg.qnet_config(videos[0].feature_dim)
    try:
        net, tlog = train(train_set, qcfg, cfg.training)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    out = Path(args.out)
    save_weights(net, out)
    log_path = Path(args.log) if args.log else out.with_suffix(out.suffix + ".log.csv")
    tlog.write_csv(log_path)
    reloaded = load_weights(out, activation=qcfg.activation)
    if any(not np.array_equal(a, b) for a, b in zip(reloaded.params, net.params)):
        raise DataError(f"{out}: weights do not reload identically")
    if len(TrainingLog.read_csv(log_path)) != len(tlog):
        raise DataError(f"{log_path}: log does not reload")
    log.info("trained %d epochs, %d updates; weights -> %s, log -> %s", cfg.training.epochs, len(tlog), out, log_path)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    feats = read_features(args.features)
    net = _load_net(args.weights, cfg, feats.shape[1])
    rt = cfg.runtime
    rt = RuntimeConfig(
        present_halfwidth=rt.present_halfwidth if args.halfwidth is None else args.halfwidth,
        start_index=rt.start_index if args.start is None else args.start,
        budget=rt.budget if args.budget is None else args.budget,
    )
    try:
        result = run_policy(feats, net, cfg.actions, rt)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    text = result.to_json()
    SelectionResult.from_json(text)
    sys.stdout.write(text + "\n")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    videos = load_dataset(args.data)
    _, test_set = _splits(cfg, videos)
    net = _load_net(args.weights, cfg, videos[0].feature_dim)
    try:
        rows, _ = evaluate(test_set, net, cfg.training, cfg.runtime, cfg.evaluation, cfg.evaluation.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if args.out:
        write_comparison_csv(rows, args.out)
        if len(read_comparison_csv(args.out)) != len(rows):
            raise DataError(f"{args.out}: comparison CSV does not reload")
    else:
        sys.stdout.write(comparison_csv(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ffagent", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", "-c", required=config_required, help="experiment TOML file")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable)")

    p = sub.add_parser("generate", help="write a synthetic dataset")
    common(p)
    p.add_argument("--out", "-o", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the Q-network")
    common(p)
    p.add_argument("--data", "-d", required=True, help="dataset directory or manifest")
    p.add_argument("--out", "-o", required=True, help="weights file to write")
    p.add_argument("--log", help="training log CSV (default: <out>.log.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="fast-forward one feature stream")
    common(p)
    p.add_argument("--weights", "-w", required=True)
    p.add_argument("--features", "-f", required=True, help="features CSV, one row per frame")
    p.add_argument("--start", type=int)
    p.add_argument("--halfwidth", type=int)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="coverage table for ffnet and baselines")
    common(p)
    p.add_argument("--data", "-d", required=True)
    p.add_argument("--weights", "-w", required=True)
    p.add_argument("--out", "-o", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, WeightsFormatError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
