"""Experiment configuration file.

One TOML file with sections ``[synthetic]``, ``[reward]``, ``[actions]``,
``[qnet]``, ``[training]``, ``[runtime]`` and ``[evaluation]``; keys mirror the
dataclass fields. ``[actions]`` takes either ``size`` or an explicit ``jumps``
list, plus ``mode``.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .experiment import EvaluationConfig
from .qnet import QNetworkConfig
from .reward import ActionSpace, RewardConfig
from .runtime import RuntimeConfig
from .stream import SyntheticConfig
from .trainer import TrainingConfig


class ConfigError(ValueError):
    pass


SECTIONS = ("synthetic", "reward", "actions", "qnet", "training", "runtime", "evaluation")
_QNET_KEYS = ("hidden_dims", "activation", "init_scale", "seed", "learning_rate")


@dataclass
class ExperimentConfig:
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    actions: ActionSpace = field(default_factory=ActionSpace)
    qnet: dict = field(default_factory=dict)  # QNetworkConfig fields minus the data-dependent sizes
    training: TrainingConfig = field(default_factory=TrainingConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def qnet_config(self, input_dim: int) -> QNetworkConfig:
        return QNetworkConfig(input_dim=input_dim, output_dim=self.actions.size, **self.qnet)


def _build(cls, section: str, values: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"[{section}]: unknown key(s) {sorted(unknown)}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def parse_override(text: str) -> tuple[str, str, object]:
    """``section.key=value`` with the value parsed as a TOML literal (bare
    words fall back to strings)."""
    try:
        lhs, rhs = text.split("=", 1)
        section, key = lhs.strip().split(".", 1)
    except ValueError:
        raise ConfigError(f"override {text!r} is not of the form section.key=value") from None
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()
    return section, key, value


def config_from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}")
    get = lambda name: dict(raw.get(name, {}))  # noqa: E731

    synthetic = _build(SyntheticConfig, "synthetic", get("synthetic"))
    reward = _build(RewardConfig, "reward", get("reward"))
    act = get("actions")
    if "size" in act and "jumps" in act:
        raise ConfigError("[actions]: give either size or jumps, not both")
    if "size" in act:
        act["jumps"] = list(range(1, int(act.pop("size")) + 1))
    actions = _build(ActionSpace, "actions", act)
    qnet = get("qnet")
    bad = set(qnet) - set(_QNET_KEYS)
    if bad:
        raise ConfigError(f"[qnet]: unknown or data-derived key(s) {sorted(bad)}")
    try:
        QNetworkConfig(input_dim=1, output_dim=actions.size, **qnet)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[qnet]: {exc}") from None
    training = _build(TrainingConfig, "training", {**get("training"), "reward": reward, "actions": actions})
    runtime = _build(RuntimeConfig, "runtime", get("runtime"))
    evaluation = _build(EvaluationConfig, "evaluation", get("evaluation"))
    return ExperimentConfig(synthetic, reward, actions, qnet, training, runtime, evaluation)


def load_config(path=None, overrides=()) -> ExperimentConfig:
    raw: dict = {}
    if path is not None:
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"{path}: config file not found") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for item in overrides:
        section, key, value = parse_override(item) if isinstance(item, str) else item
        raw.setdefault(section, {})[key] = value
    return config_from_dict(raw)
