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

import numpy as np
import pytest

from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects.engine import forward
from lattice_defects.engine import intersection
from lattice_defects.engine import inverse
from lattice_defects.engine import report
from lattice_defects.engine import scene as scene_module
from lattice_defects.test_utils import fixtures


@pytest.fixture(scope="module")
def dense_problem(dense_scene):
    table = forward.make_table(dense_scene)
    systems = forward.assemble_systems(dense_scene, table)
    equations = inverse.data_equations(
        dense_scene, dense_scene.measurements, systems
    )
    return intersection.BilinearProblem(equations, systems)


@pytest.fixture(scope="module")
def dense_result(dense_scene):
    return intersection.intersect_manifolds(dense_scene, seed=0)


def test_objective_vanishes_at_true_defect(dense_scene, dense_problem):
    truth = dense_scene.defects.values
    coordinates = dense_problem.solve_coordinates(truth)
    assert len(coordinates) == 4
    objective = dense_problem.objective(truth, coordinates)
    assert objective < (1e-6 * dense_problem.scale) ** 2


def test_defect_update_at_true_coordinates(dense_scene, dense_problem):
    truth = dense_scene.defects.values
    coordinates = dense_problem.solve_coordinates(truth)
    updated = dense_problem.update_defects(coordinates, np.zeros(9), 1e-12)
    assert np.linalg.norm(updated - truth) < 1e-6


def test_start_near_truth_converges(dense_scene, dense_problem):
    truth = dense_scene.defects.values
    rng = np.random.default_rng(0)
    initial = truth + 1e-3 * rng.standard_normal(9)
    result = intersection.run_start(
        dense_problem, initial, config_module.Tolerances(), start_id=3
    )
    assert result.start_id == 3
    assert result.iterations >= 1
    assert np.linalg.norm(result.defects - truth) < 1e-6


def test_initial_points_start_from_particular_solutions(dense_problem):
    tolerances = config_module.Tolerances()
    points = intersection.initial_points(
        dense_problem.equations, dense_problem.systems, 6, 0, tolerances
    )
    assert len(points) == 6
    for deq, fsys, point in zip(
        dense_problem.equations, dense_problem.systems, points[:4]
    ):
        expected = inverse.manifold_point(deq, fsys, strict=False).values
        assert np.array_equal(point, np.where(np.isfinite(expected), expected, 0))
    again = intersection.initial_points(
        dense_problem.equations, dense_problem.systems, 6, 0, tolerances
    )
    assert all(np.array_equal(a, b) for a, b in zip(points, again))


def test_cluster_candidates_merges_close_points():
    def candidate(values):
        return report.Candidate(scene_module.DefectVector(values))

    candidates = [
        candidate([1.0, 0.0]),
        candidate([1.0 + 1e-9, 0.0]),
        candidate([0.0, 1.0]),
        candidate([1.0, 1e-8]),
    ]
    clusters = intersection.cluster_candidates(candidates, 1e-6)
    assert len(clusters) == 2
    assert clusters[0].cluster_size == 3
    assert clusters[1].cluster_size == 1
    assert clusters[0] is candidates[0]


def test_dense_scene_recovers_unique_defect(dense_scene, dense_result):
    assert dense_result.status == report.RecoveryStatus.UNIQUE
    assert len(dense_result.candidates) == 1
    best = dense_result.best
    assert np.linalg.norm(best.values - dense_scene.defects.values) < 1e-6
    assert best.verification_residual <= 1e-6
    assert all(r < 1e-6 for r in best.membership_residuals.values())
    assert best.free_indices == []


def test_same_seed_same_candidates(dense_scene, dense_result):
    again = intersection.intersect_manifolds(dense_scene, seed=0, threads=2)
    assert again.status == dense_result.status
    assert len(again.candidates) == len(dense_result.candidates)
    for a, b in zip(again.candidates, dense_result.candidates):
        assert np.allclose(a.values, b.values, rtol=0, atol=1e-12)


def test_inconsistent_measurement_error(dense_scene):
    tampered = {
        j: u + 1e-3 * np.arange(len(u))
        for j, u in dense_scene.measurements.values.items()
    }
    with pytest.raises(errors.NoCandidate, match="not attainable"):
        intersection.intersect_manifolds(
            dense_scene, scene_module.Measurement(tampered)
        )


def test_single_frequency_reports_manifold():
    scene = fixtures.dense_scene(omega_squares=(-1.0,))
    result = intersection.intersect_manifolds(scene, seed=2)
    assert result.status == report.RecoveryStatus.MANIFOLD
    assert result.seed == 2
    assert 1 <= len(result.candidates) <= 16
    for candidate in result.candidates:
        assert candidate.verification_residual <= 1e-6


def test_verbose_search_prints_progress(dense_scene, capsys):
    tolerances = config_module.Tolerances(num_starts=4)
    try:
        intersection.intersect_manifolds(
            dense_scene, tolerances=tolerances, verbose=2
        )
    except errors.NoCandidate:
        pass
    out, _ = capsys.readouterr()
    assert "Search: 4 starts" in out
    assert "Start 4/4" in out
    assert "Verified candidates:" in out
