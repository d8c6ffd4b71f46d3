"""Flat INI-style run configuration with typed defaults.

Values come from the built-in defaults, then the config file, then
``--set section.key=value`` overrides, then explicit subcommand flags.
"""

from __future__ import annotations

import configparser
import hashlib
import json


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


DEFAULTS: dict[str, dict[str, tuple]] = {
    "data": {
        "dataset": (str, "cifar10"),
        "n": (int, 20000),
        "validity_n": (int, 10240),
        "test_fraction": (float, 0.2),
    },
    "predictor": {
        "metric": (str, "cycles"),
        "epochs": (int, 80),
        "lr": (float, 1e-3),
        "batch_size": (int, 128),
    },
    "validnet": {
        "epochs": (int, 150),
        "lr": (float, 1e-3),
        "batch_size": (int, 128),
    },
    "rl": {
        "setting": (str, "composite"),
        "algo": (str, "ppo"),
        "steps": (int, 300000),
        "n_test": (int, 50),
        "n_val": (int, 20),
        "evaluator": (str, "simulator"),
        "hpo_trials": (int, 40),
        "hpo_steps": (int, 20000),
    },
    "codesign": {
        "lam": (float, 10.0),
        "kappa": (float, 0.5),
        "iterations": (int, 300),
        "lr": (float, 0.05),
        "seeds": (_ints, (0, 1, 2)),
        "betas": (_floats, tuple(10.0 ** x for x in range(-7, 8))),
        "hwgen_lambdas": (_floats, tuple(10.0 ** x for x in range(-4, 3))),
        "hwgen_train": (int, 2000),
        "hwgen_test": (int, 200),
        "hwgen_epochs": (int, 60),
    },
    "study": {
        "triples": (int, 20),
        "steps": (int, 64),
        "distributions": (int, 100),
        "samples": (int, 100),
    },
}


class Settings:
    def __init__(self):
        self.values = {sec: {k: default for k, (_, default) in keys.items()} for sec, keys in DEFAULTS.items()}

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set_text(self, section: str, key: str, text: str, origin: str = "config"):
        if section not in DEFAULTS:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        if key not in DEFAULTS[section]:
            raise ConfigError(f"{origin}: unknown key {key!r} in [{section}]")
        parse = DEFAULTS[section][key][0]
        try:
            self.values[section][key] = parse(text.strip())
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad value for {section}.{key}: {text!r}") from exc

    def set(self, section: str, key: str, value):
        if value is not None:
            self.values[section][key] = value

    def load_file(self, path) -> str:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                text = fh.read()
            parser.read_string(text, source=str(path))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from None
        for section in parser.sections():
            for key, value in parser.items(section):
                self.set_text(section, key, value, origin=str(path))
        return text

    def apply_overrides(self, items):
        for item in items or ():
            name, sep, value = item.partition("=")
            section, dot, key = name.partition(".")
            if not sep or not dot:
                raise ConfigError(f"override must look like section.key=value, got {item!r}")
            self.set_text(section, key, value, origin="--set")

    def to_json(self) -> dict:
        return {sec: {k: list(v) if isinstance(v, tuple) else v for k, v in keys.items()}
                for sec, keys in self.values.items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()
