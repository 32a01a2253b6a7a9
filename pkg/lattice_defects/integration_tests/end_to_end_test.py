# Copyright 2024 The LatticeDefects Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import tensorflow as tf

import lattice_defects
from lattice_defects import cli
from lattice_defects.engine import scene as scene_module
from lattice_defects.test_utils import fixtures


def test_measure_then_recover_random_scenes():
    tf.get_logger().setLevel("ERROR")
    rng = np.random.default_rng(11)
    for _ in range(3):
        scene = fixtures.random_scene(rng)
        assert lattice_defects.validate_scene(scene) == []
        solution = lattice_defects.solve_forward(scene)
        measured = scene.replace(measurements=solution.to_measurement())

        result = lattice_defects.recover(measured)
        assert result.status == lattice_defects.RecoveryStatus.UNIQUE
        error = np.linalg.norm(result.best.values - scene.defects.values)
        assert error < 1e-8 * np.linalg.norm(scene.defects.values)


def test_command_line_workflow_is_reproducible(tmp_path):
    tf.get_logger().setLevel("ERROR")
    scene = fixtures.dense_scene(measured=False)
    scene_path = str(tmp_path / "scene.json")
    measured_path = str(tmp_path / "measured.json")
    scene_module.write_scene(scene_path, scene)
    args = ["forward", "--scene", scene_path, "--out", measured_path]
    assert cli.main(args) == 0

    outputs = []
    for name in ("first.json", "second.json"):
        out = str(tmp_path / name)
        args = ["invert", "--scene", measured_path, "--out", out, "--seed", "5"]
        assert cli.main(args) == 0
        with open(out) as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]

    result = lattice_defects.RecoveryResult.from_state(json.loads(outputs[0]))
    assert result.status == lattice_defects.RecoveryStatus.UNIQUE
    assert result.seed == 5
    error = np.linalg.norm(result.best.values - scene.defects.values)
    assert error < 1e-6
