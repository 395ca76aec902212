#!/usr/bin/env python3
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

"""Regenerates the synthetic finger response curves in data/.

None of these numbers are measurements. The moulded set gets three slightly
different cubic-ish responses so calibration has something to align; the
printed set shares one linear curve.
"""
import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"
VOLTS = [i * 0.25 for i in range(21)]


def cubic(max_bend, linear_share):
    out = []
    for v in VOLTS:
        x = v / 5.0
        out.append([v, round(max_bend * (linear_share * x + (1 - linear_share) * x ** 3), 3)])
    return out


moulded = {
    "finger_type": "moulded_oval",
    "note": "synthetic curves, not measured",
    "target_bend_range": [0.0, 175.0],
    "curves": [
        {"finger": 0, "samples": cubic(185.0, 0.80)},
        {"finger": 1, "samples": cubic(178.0, 0.70)},
        {"finger": 2, "samples": cubic(192.0, 0.88)},
    ],
}
shared = [[v, round(160.0 * v / 5.0, 3)] for v in VOLTS]
printed = {
    "finger_type": "printed",
    "note": "synthetic curve shared by all three fingers, not measured",
    "target_bend_range": [0.0, 160.0],
    "curves": [{"finger": i, "samples": shared} for i in range(3)],
}

for name, doc in (("curves_moulded.json", moulded), ("curves_printed.json", printed)):
    curves = ",\n".join(
        '    {"finger": %d, "samples": %s}' % (c["finger"], json.dumps(c["samples"]))
        for c in doc["curves"])
    text = ('{\n  "finger_type": %s,\n  "note": %s,\n  "target_bend_range": %s,\n'
            '  "curves": [\n%s\n  ]\n}\n') % (
        json.dumps(doc["finger_type"]), json.dumps(doc["note"]),
        json.dumps(doc["target_bend_range"]), curves)
    (DATA / name).write_text(text)
