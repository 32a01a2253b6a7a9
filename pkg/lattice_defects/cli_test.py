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
import pytest

from lattice_defects import cli
from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects.engine import brillouin
from lattice_defects.engine import forward
from lattice_defects.engine import report
from lattice_defects.engine import scene as scene_module
from lattice_defects.engine import truncation
from lattice_defects.test_utils import fixtures


def write(tmp_path, scene, name="scene.json"):
    return scene_module.write_scene(str(tmp_path / name), scene)


def read_json(fname):
    with open(fname) as f:
        return json.load(f)


def error_of(capsys):
    _, err = capsys.readouterr()
    return json.loads(err.strip().splitlines()[-1])


def test_forward_then_invert_recovers_defects(tmp_path):
    scene = fixtures.sparse_scene(measured=False)
    measured = str(tmp_path / "measured.json")
    result = str(tmp_path / "result.json")
    args = ["forward", "--scene", write(tmp_path, scene), "--out", measured]
    assert cli.main(args) == 0
    assert scene_module.read_scene(measured).measurements is not None

    assert cli.main(["invert", "--scene", measured, "--out", result]) == 0
    document = read_json(result)
    assert document["status"] == "UNIQUE"
    values = scene_module.DefectVector.from_config(
        document["candidates"][0]["defects"]
    ).values
    assert np.linalg.norm(values - scene.defects.values) < 1e-8


def test_invert_with_separate_measurements(tmp_path):
    scene = fixtures.sparse_scene()
    bare = write(tmp_path, scene.replace(measurements=None, defects=None))
    data = write(tmp_path, scene, "data.json")
    result = str(tmp_path / "result.json")
    args = ["invert", "--scene", bare, "--measurements", data, "--out", result]
    assert cli.main(args) == 0
    assert read_json(result)["status"] == "UNIQUE"


def test_tampered_measurements_are_inconsistent(tmp_path):
    scene = fixtures.sparse_scene()
    tampered = {
        j: u + np.linspace(0, 1e-3, len(u))
        for j, u in scene.measurements.values.items()
    }
    tampered = scene.replace(measurements=scene_module.Measurement(tampered))
    fname = write(tmp_path, tampered)
    result = str(tmp_path / "result.json")
    assert cli.main(["invert", "--scene", fname, "--out", result]) == 0
    document = read_json(result)
    assert document["status"] == "INCONSISTENT"
    assert document["candidates"] == []


def test_box_prior_removes_complex_candidate(tmp_path):
    fname = write(tmp_path, fixtures.sparse_scene())
    result = str(tmp_path / "result.json")
    args = ["invert", "--scene", fname, "--out", result, "--bound", "1.0"]
    assert cli.main(args) == 0
    document = read_json(result)
    assert document["status"] == "NO_CANDIDATE"
    assert document["candidates"] == []


def bounded_equation(freq_index, kernel_dim):
    return report.DataEquation(
        freq_index=freq_index,
        rhs=np.zeros(3),
        particular=np.zeros(2),
        kernel=np.eye(2)[:, :kernel_dim],
        rank=2 - kernel_dim,
        rank_tol=1e-10,
        residual=0.0,
        consistent=True,
        condition=1.0,
    )


def bounded_candidate(values, misfit=1e-12):
    return report.Candidate(
        defects=scene_module.DefectVector(list(values)),
        verification_residual=misfit,
    )


def test_box_prior_keeps_inconsistent_status():
    result = report.RecoveryResult(
        status=report.RecoveryStatus.INCONSISTENT,
        equations=[bounded_equation(1, 0)],
        candidates=[bounded_candidate([0.1, 0.2], misfit=0.5)],
    )
    result = cli._apply_bound(result, 1.0, config_module.Tolerances())
    assert result.status == report.RecoveryStatus.INCONSISTENT
    assert len(result.candidates) == 1


def test_box_prior_on_single_frequency_manifold_stays_manifold():
    result = report.RecoveryResult(
        status=report.RecoveryStatus.MANIFOLD,
        equations=[bounded_equation(1, 1)],
        candidates=[
            bounded_candidate([0.1, 0.2]),
            bounded_candidate([-1.0, 0.2]),
        ],
    )
    result = cli._apply_bound(result, 1.0, config_module.Tolerances())
    assert result.status == report.RecoveryStatus.MANIFOLD
    assert len(result.candidates) == 1


def test_box_prior_selects_one_intersection_cluster():
    result = report.RecoveryResult(
        status=report.RecoveryStatus.MANIFOLD,
        equations=[bounded_equation(1, 1), bounded_equation(2, 1)],
        candidates=[
            bounded_candidate([0.1, 0.2]),
            bounded_candidate([-1.0, 0.2]),
        ],
    )
    result = cli._apply_bound(result, 1.0, config_module.Tolerances())
    assert result.status == report.RecoveryStatus.UNIQUE
    assert np.allclose(result.candidates[0].values, [0.1, 0.2])


def test_box_prior_drops_unverified_candidates():
    result = report.RecoveryResult(
        status=report.RecoveryStatus.MANIFOLD,
        equations=[bounded_equation(1, 1), bounded_equation(2, 1)],
        candidates=[
            bounded_candidate([0.1, 0.2], misfit=0.5),
            bounded_candidate([0.3, 0.2]),
            bounded_candidate([0.4, 0.2], misfit=None),
        ],
    )
    result = cli._apply_bound(result, 1.0, config_module.Tolerances())
    assert result.status == report.RecoveryStatus.UNIQUE
    assert len(result.candidates) == 1
    assert np.allclose(result.candidates[0].values, [0.3, 0.2])


def test_field_without_defects_is_unperturbed(tmp_path):
    scene = fixtures.sparse_scene(measured=False).replace(defects=None)
    out = str(tmp_path / "field.txt")
    args = ["field", "--scene", write(tmp_path, scene), "--out", out]
    args += ["--radius", "3"]
    assert cli.main(args) == 0
    rows = np.loadtxt(out)
    assert rows.shape == (49, 4)
    sites = rows[:, :2].astype(int)
    values = rows[:, 2] + 1j * rows[:, 3]
    expected = forward.unperturbed_field(scene, 1, sites)
    assert np.allclose(values, expected, rtol=0, atol=1e-14)


def test_oracle_writes_grid_of_selected_frequency(tmp_path):
    scene = fixtures.sparse_scene(measured=False)
    out = str(tmp_path / "oracle.txt")
    args = ["oracle", "--scene", write(tmp_path, scene), "--out", out]
    args += ["--radius", "10", "--freq", "2"]
    assert cli.main(args) == 0
    rows = np.loadtxt(out)
    assert rows.shape == (21 * 21, 4)
    grid = truncation.brute_force_oracle(scene, radius=10)
    assert np.array_equal(rows[:, :2].astype(int), grid.sites())
    values = rows[:, 2] + 1j * rows[:, 3]
    expected = grid.values[2].reshape(-1)
    assert np.allclose(values, expected, rtol=1e-15, atol=0)
    assert not np.allclose(values, grid.values[1].reshape(-1))


def test_green_writes_requested_offsets(tmp_path):
    scene = fixtures.sparse_scene(measured=False)
    out = str(tmp_path / "green.txt")
    args = ["green", "--scene", write(tmp_path, scene), "--out", out]
    args += ["--offset", "0,0", "--offset", "1,2", "--order", "64"]
    assert cli.main(args) == 0
    table = brillouin.GreenTable(2, 1.0, quadrature_order=64).load(out)
    fs = scene.frequency(2)
    expected = brillouin.raw_quadrature([1, 2], fs, 1.0, 2, 64)
    assert abs(table.coeff([1, 2], fs) - expected) < 1e-12
    with open(out) as f:
        assert f.readline().startswith("# dimension 2")


def test_cloak_with_receiver_ring(tmp_path):
    out = str(tmp_path / "cloak.json")
    scene = fixtures.cloak_scene(ring_radius=4)
    args = ["cloak", "--scene", write(tmp_path, scene), "--out", out]
    args += ["--ring-radius", "3", "--seed", "0"]
    assert cli.main(args) == 0
    document = read_json(out)
    assert document["kind"] == "cloak"
    assert document["ring_radius"] == 3
    assert document["frequencies"][0]["receiver_deviation"] < 1e-8


def test_cloak_without_candidate_writes_outcome(tmp_path):
    out = str(tmp_path / "cloak.json")
    scene = fixtures.cloak_scene(omega_squares=(-1.0, -2.0))
    args = ["cloak", "--scene", write(tmp_path, scene), "--out", out]
    assert cli.main(args) == 0
    document = read_json(out)
    assert document["status"] == "NO_CANDIDATE"
    assert document["error"] == "NoCandidate"
    assert document["operation"] == "cloak.design_cloak"


def test_missing_scene_file_exits_1(tmp_path, capsys):
    args = ["invert", "--scene", str(tmp_path / "nope.json"), "--out", "x.json"]
    assert cli.main(args) == 1
    error = error_of(capsys)
    assert error["error"] == "InputError"
    assert error["operation"] == "inverse.recover"


def test_scene_file_not_utf8_exits_1(tmp_path, capsys):
    fname = tmp_path / "scene.json"
    fname.write_bytes(b'{"dimension": 1, \xff}')
    args = ["forward", "--scene", str(fname), "--out", str(tmp_path / "x.json")]
    assert cli.main(args) == 1
    error = error_of(capsys)
    assert error["error"] == "ParseError"
    assert "UTF-8" in error["message"]


def test_scene_path_is_directory_exits_1(tmp_path, capsys):
    args = ["forward", "--scene", str(tmp_path), "--out", str(tmp_path / "x.json")]
    assert cli.main(args) == 1
    error = error_of(capsys)
    assert error["error"] == "InputError"
    assert error["operation"] == "forward.solve_forward"


def test_invalid_scene_exits_1(tmp_path, capsys):
    scene = fixtures.line_scene(measured=False).replace(receivers=[(-3,), (-3,)])
    args = ["forward", "--scene", write(tmp_path, scene), "--out", "x.json"]
    assert cli.main(args) == 1
    error = error_of(capsys)
    assert error["error"] == "ValidationError"
    assert "duplicate site" in error["message"]


def test_unknown_flag_exits_1(capsys):
    assert cli.main(["forward", "--scene", "a", "--out", "b", "--speed", "3"]) == 1
    assert error_of(capsys)["error"] == "InputError"


def test_negative_tolerance_exits_1(tmp_path, capsys):
    fname = write(tmp_path, fixtures.sparse_scene())
    args = ["invert", "--scene", fname, "--out", "x.json", "--tol-rank-tol", "-1"]
    assert cli.main(args) == 1
    assert "rank_tol" in error_of(capsys)["message"]


def test_small_oracle_radius_exits_1(tmp_path, capsys):
    fname = write(tmp_path, fixtures.sparse_scene(measured=False))
    args = ["oracle", "--scene", fname, "--out", "x.txt", "--radius", "5"]
    assert cli.main(args) == 1
    assert "--radius" in error_of(capsys)["message"]


def test_frequency_index_out_of_range_exits_1(tmp_path, capsys):
    fname = write(tmp_path, fixtures.sparse_scene(measured=False))
    args = ["field", "--scene", fname, "--out", "x.txt", "--freq", "3"]
    assert cli.main(args) == 1
    assert "--freq" in error_of(capsys)["message"]


def test_passband_frequency_exits_2(tmp_path, capsys):
    scene = fixtures.sparse_scene(measured=False).replace(
        frequencies=[brillouin.FrequencySpec(np.sqrt(2), epsilon=1e-9)],
        sources=[scene_module.Source(1, (-4, 0), 1.0)],
    )
    args = ["forward", "--scene", write(tmp_path, scene), "--out", "x.json"]
    assert cli.main(args) == 2
    error = error_of(capsys)
    assert error["error"] == "NearSingularSymbol"
    assert error["operation"] == "forward.solve_forward"


def test_run_config_validation():
    with pytest.raises(errors.InputError, match="--order"):
        cli.RunConfig("green", "a", "b", quadrature_order=2)
    with pytest.raises(errors.InputError, match="--bound"):
        cli.RunConfig("invert", "a", "b", bound=-1.0)
    with pytest.raises(errors.InputError, match="Unknown command"):
        cli.RunConfig("plot", "a", "b")
    assert cli.RunConfig("oracle", "a", "b").radius == 40
    assert cli.RunConfig("invert", "a", "b").radius is None


def test_tolerance_flags_reach_config():
    args = cli.build_parser().parse_args(
        ["invert", "--scene", "a", "--out", "b", "--tol-num-starts", "4"]
    )
    config = cli.RunConfig.from_args(args)
    assert config.tolerances.num_starts == 4
    assert config.tolerances.rank_tol == 1e-10
