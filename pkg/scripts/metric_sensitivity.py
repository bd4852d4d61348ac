"""Re-score one trained agent under the alternative coverage readings.

Trains once, then evaluates the same test split with (a) the default
ground-truth coverage, (b) short segments dropped from the denominator and
(c) the selection-side precision reading. Prints coverage at each requested
hit number per method and reading.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from ffagent.config import load_config
from ffagent.experiment import evaluate, split_dataset
from ffagent.stream import generate_synthetic
from ffagent.trainer import train

DEFAULT_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "default.toml"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", "-c", default=str(DEFAULT_CONFIG))
    ap.add_argument("--set", action="append", default=[])
    ap.add_argument("--hits", type=int, nargs="+", default=[1, 5, 10, 15, 20])
    args = ap.parse_args(argv)

    cfg = load_config(args.config, args.set)
    videos = generate_synthetic(cfg.synthetic)
    train_set, test_set = split_dataset(videos, cfg.evaluation.test_fraction, cfg.evaluation.seed)
    net, _ = train(train_set, cfg.qnet_config(cfg.synthetic.feature_dim), cfg.training)

    readings = {
        "ground_truth": replace(cfg.evaluation, hit_numbers=tuple(args.hits)),
        "exclude_short": replace(cfg.evaluation, hit_numbers=tuple(args.hits), exclude_short=True),
        "selection": replace(cfg.evaluation, hit_numbers=tuple(args.hits), reference="selection"),
    }
    print("reading,method," + ",".join(f"hit{h}" for h in args.hits))
    for name, ecfg in readings.items():
        rows, _ = evaluate(test_set, net, cfg.training, cfg.runtime, ecfg, ecfg.seed)
        by_method: dict[str, list[str]] = {}
        for r in rows:
            by_method.setdefault(r.method, []).append(f"{r.mean_coverage:.3f}")
        for method, values in by_method.items():
            print(f"{name},{method}," + ",".join(values))


if __name__ == "__main__":
    main()
