"""Deterministic simulator for TDD mmWave distribution networks."""

import json
import os

from ._core import (
    ConfigError,
    Scenario as _Scenario,
    airtime_us,
    default_slot_starts,
    path_loss_db,
    propagation_delay_us,
    tpc_update,
)

__all__ = [
    "ConfigError",
    "Scenario",
    "airtime_us",
    "default_slot_starts",
    "path_loss_db",
    "propagation_delay_us",
    "tpc_update",
]


class Scenario:
    """A parsed and validated scenario file."""

    def __init__(self, core):
        self._core = core

    @classmethod
    def from_yaml(cls, text):
        return cls(_Scenario.from_yaml(text))

    @classmethod
    def load(cls, path):
        return cls(_Scenario.load(os.fspath(path)))

    def to_yaml(self):
        return self._core.to_yaml()

    @property
    def seed(self):
        return self._core.seed

    @seed.setter
    def seed(self, value):
        self._core.seed = value

    @property
    def duration_us(self):
        return self._core.duration_us

    @duration_us.setter
    def duration_us(self, value):
        self._core.duration_us = value

    def run(self, trace=None, metrics=None):
        """Full run. Returns a dict with exit_code, plan, and metrics or report."""
        return json.loads(self._core._run(os.fspath(trace or ""), os.fspath(metrics or "")))

    def plan(self):
        return json.loads(self._core._plan())

    def trace(self):
        """Runs the scenario and returns the trace as a list of records."""
        return [json.loads(line) for line in self._core._trace().splitlines()]
