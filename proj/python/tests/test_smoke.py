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

import json
import math
from pathlib import Path

import pytest

import palmgrip

GOLDEN = Path(__file__).resolve().parents[2] / "golden"


@pytest.fixture(scope="module")
def world():
    return palmgrip.World()


def test_builtin_objects():
    names = [o["name"] for o in palmgrip.builtin_objects()]
    assert len(names) == 5
    assert "tennis_ball" in names
    assert all(o["mass"] <= 80 for o in palmgrip.builtin_objects())


def test_fingertip_straight_down_is_finite():
    r, z = palmgrip.fingertip_position(90.0, "printed")
    assert math.isfinite(r) and math.isfinite(z)
    with pytest.raises(palmgrip.Error):
        palmgrip.fingertip_position(10.0, "wooden")


def test_feasibility_and_capacity(world):
    ball = next(o for o in palmgrip.builtin_objects() if o["name"] == "tennis_ball")
    assert world.feasibility(ball, "printed")["feasible"]
    heavy = dict(ball, mass=81.0)
    rep = world.feasibility(heavy, "printed")
    assert not rep["feasible"]
    assert rep["reason"] == "mass_exceeds_capacity"


def test_trial_and_probability(world):
    ball = next(o for o in palmgrip.builtin_objects() if o["name"] == "tennis_ball")
    plan = {"object": ball, "finger_type": "printed"}
    trial = world.run_trial(plan, seed=3)
    assert trial["overall_success"] is True
    assert world.success_probability(plan) == 1.0


def test_deterministic_suite_matches_golden(world):
    text = world.run_suite(format="json")
    golden = (GOLDEN / "deterministic_matrix.json").read_text()
    assert text == golden
    assert json.loads(text)["pairs"]


def test_protocol_normalization():
    cmd = palmgrip.normalize_command({"type": "vacuum", "on": True, "id": 3})
    assert cmd == {"id": 3, "type": "vacuum", "on": True}
    with pytest.raises(palmgrip.ProtocolError):
        palmgrip.normalize_command("{nope")


def test_invalid_plan_raises(world):
    ball = palmgrip.builtin_objects()[0]
    with pytest.raises(palmgrip.ValidationError):
        world.run_trial({"object": ball, "finger_type": "printed", "rotation_speed": 0})
