# Copyright 2026 The palmgrip Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Simulated three-finger gripper with a rotating suction palm."""

import json
import os
from pathlib import Path

from . import _core
from ._core import (
    DomainError,
    Error,
    ParseError,
    ProtocolError,
    RangeError,
    StateError,
    ValidationError,
)

__all__ = [
    "World",
    "builtin_objects",
    "default_config",
    "fingertip_position",
    "normalize_command",
    "normalize_telemetry",
    "set_data_dir",
    "data_dir",
    "Error",
    "ValidationError",
    "RangeError",
    "DomainError",
    "StateError",
    "ParseError",
    "ProtocolError",
]

_packaged = Path(__file__).resolve().parent / "data"
if "PALMGRIP_DATA_DIR" not in os.environ and (_packaged / "gripper_config.json").exists():
    _core.set_data_dir(str(_packaged))

set_data_dir = _core.set_data_dir
data_dir = _core.data_dir
fingertip_position = _core.fingertip_position


def builtin_objects():
    return json.loads(_core.builtin_objects())


def default_config():
    return json.loads(_core.default_config())


def normalize_command(message):
    """Parses and re-serializes one command. Accepts a dict or JSON text."""
    text = message if isinstance(message, str) else json.dumps(message)
    return json.loads(_core.normalize_command(text))


def normalize_telemetry(message):
    text = message if isinstance(message, str) else json.dumps(message)
    return json.loads(_core.normalize_telemetry(text))


class World:
    """Config, calibrated fingers and failure rules loaded from a data directory."""

    def __init__(self, data_dir=None):
        self._w = _core.World(str(data_dir) if data_dir else "")

    @property
    def config(self):
        return json.loads(self._w.config())

    def feasibility(self, obj, finger_type):
        return json.loads(self._w.feasibility(json.dumps(obj), finger_type))

    def convergence_height(self, finger_type):
        return self._w.convergence_height(finger_type)

    def run_trial(self, plan, seed=0):
        return json.loads(self._w.run_trial(json.dumps(plan), seed))

    def success_probability(self, plan):
        return self._w.success_probability(json.dumps(plan))

    def run_suite(self, mode="deterministic", seed=0, repetitions=5, jobs=1, format="json"):
        """Renders the suite report as text ("json", "csv" or "table")."""
        return self._w.run_suite(mode, seed, repetitions, jobs, format)
