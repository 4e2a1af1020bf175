"""Flat key = value configuration shared by the CLI subcommands.

Unknown keys are errors so that typos fail loudly.  Every default is visible
via the CLI's --print-config.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO, Union

from .agent import AgentConfig, StopRule
from .criteria import CriteriaParams
from .harness import TestConfig
from .puck import Bounds, EnvParams
from .qtable import LearningParams

DEFAULTS: dict[str, Union[int, float]] = {
    # environment
    "beta": 0.3,
    "gravity": 9.8,
    "mass": 1.0,
    "dt": 0.02,
    "force": 3.0,
    "x_limit": 2.4,
    "fail_reward": -1.0,
    # observed state-space bounds
    "x_min": -2.4,
    "x_max": 2.4,
    "v_min": -5.5,
    "v_max": 5.5,
    # distance metric (reciprocal scaling per dimension)
    "x_extent": 4.8,
    "v_extent": 11.0,
    # learning
    "gamma": 0.99,
    "alpha": 0.5,
    "min_updates": 3,
    "enough_samples": 10,
    # criteria
    "epsilon": 0.05,
    "delta": 0.05,
    "max_steps": 200,
    # agent
    "fe_period": 5,
    "merge_period": 10,
    "repush_probability": 0.1,
    "stack_start_probability": 0.5,
    # generation stop rule
    "success_trial_steps": 100_000,
    "success_trials": 10,
    "max_trials": 100_000,
    "max_total_steps": 5_000_000,
    # tester
    "batch_size": 50,
    "trial_cap": 100_000,
    "measure_every_steps": 2_000,
    "measure_every_trials": 20,
    "runs": 10,
    "max_train_steps": 100_000,
    "train_trial_cap": 10_000,
    # analysis
    "resolution": 0.01,
}

_INT_KEYS = {
    "min_updates", "enough_samples", "max_steps", "fe_period", "merge_period",
    "success_trial_steps", "success_trials", "max_trials", "max_total_steps", "batch_size",
    "trial_cap", "measure_every_steps", "measure_every_trials", "runs",
    "max_train_steps", "train_trial_cap",
}


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    def env_params(self) -> EnvParams:
        v = self.values
        return EnvParams(beta=v["beta"], gravity=v["gravity"], mass=v["mass"],
                         dt=v["dt"], force=v["force"], x_limit=v["x_limit"],
                         fail_reward=v["fail_reward"])

    def bounds(self) -> Bounds:
        v = self.values
        return Bounds(v["x_min"], v["x_max"], v["v_min"], v["v_max"])

    def scale(self) -> tuple[float, float]:
        return (1.0 / self.values["x_extent"], 1.0 / self.values["v_extent"])

    def learning(self) -> LearningParams:
        v = self.values
        return LearningParams(gamma=v["gamma"], alpha_fixed=v["alpha"],
                              min_updates=v["min_updates"],
                              enough_samples=v["enough_samples"])

    def criteria(self) -> CriteriaParams:
        v = self.values
        return CriteriaParams(epsilon=v["epsilon"], delta=v["delta"],
                              max_steps=v["max_steps"])

    def agent_config(self, seed: int) -> AgentConfig:
        v = self.values
        return AgentConfig(criteria=self.criteria(), learning=self.learning(),
                           fe_period=v["fe_period"], merge_period=v["merge_period"],
                           repush_probability=v["repush_probability"],
                           stack_start_probability=v["stack_start_probability"],
                           seed=seed)

    def stop_rule(self) -> StopRule:
        v = self.values
        return StopRule(max_total_steps=v["max_total_steps"],
                        max_trials=v["max_trials"],
                        success_trial_steps=v["success_trial_steps"],
                        success_trials=v["success_trials"])

    def test_config(self) -> TestConfig:
        v = self.values
        return TestConfig(batch_size=v["batch_size"], trial_cap=v["trial_cap"],
                          measure_every_steps=v["measure_every_steps"],
                          measure_every_trials=v["measure_every_trials"],
                          runs=v["runs"], max_train_steps=v["max_train_steps"],
                          train_trial_cap=v["train_trial_cap"])


def parse_config(source: TextIO, defaults: dict | None = None) -> Config:
    values = dict(defaults or DEFAULTS)
    for line_no, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value, got {raw.strip()!r}")
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if key not in values:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        try:
            values[key] = int(text) if key in _INT_KEYS else float(text)
        except ValueError as exc:
            raise ConfigError(f"line {line_no}: bad value for {key}: {text!r}") from exc
    return Config(values)


def load_config(path: str | None) -> Config:
    if path is None:
        return Config(dict(DEFAULTS))
    with open(path) as fh:
        return parse_config(fh)


def print_config(config: Config, sink: TextIO) -> None:
    for key in DEFAULTS:
        sink.write(f"{key} = {config.values[key]}\n")
