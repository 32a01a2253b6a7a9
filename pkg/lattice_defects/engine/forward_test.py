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

from lattice_defects import errors
from lattice_defects.engine import brillouin
from lattice_defects.engine import forward
from lattice_defects.engine import scene as scene_module
from lattice_defects.test_utils import fixtures


def test_single_defect_interaction_matrix():
    scene = fixtures.line_scene(measured=False).replace(
        defect_sites=[(0,)], defects=[0.5]
    )
    table = forward.make_table(scene)
    fsys = forward.assemble_system(scene, 1, table)
    assert fsys.A.shape == (1, 1)
    assert fsys.A[0, 0] == table.coeff([0], scene.frequency(1))


def test_receivers_at_defect_sites_give_equal_matrices():
    scene = fixtures.sparse_scene(measured=False)
    scene = scene.replace(receivers=list(scene.defect_sites))
    fsys = forward.assemble_system(scene, 2)
    assert np.array_equal(fsys.A, fsys.C)


def test_system_matches_entrywise_quadrature():
    scene = fixtures.line_scene(measured=False)
    fsys = forward.assemble_system(scene, 1, forward.make_table(scene, 64))
    fs = scene.frequency(1)
    for p, r in enumerate(scene.receivers):
        for q, n in enumerate(scene.defect_sites):
            expected = brillouin.raw_quadrature(
                np.subtract(n, r), fs, 1.0, 1, 64
            )
            assert abs(fsys.C[p, q] - expected) < 1e-12


def test_gram_matrix_without_defects_is_identity():
    scene = fixtures.sparse_scene(measured=False)
    fsys = forward.assemble_system(scene, 1)
    G = forward.gram_matrix(fsys, scene_module.DefectVector.zeros(2))
    assert np.array_equal(G, np.eye(2))


def test_singular_gram_matrix_not_admissible():
    scene = fixtures.line_scene(measured=False)
    fsys = forward.assemble_system(scene, 1)
    # The first row of G vanishes up to rounding.
    singular = [1 / (fsys.omega_sq * fsys.A[0, 0]), 0.0]
    result = forward.is_admissible([fsys], singular)[0]
    assert not result.admissible
    assert result.ratio == pytest.approx(0, abs=1e-12)
    with pytest.raises(errors.NotAdmissible, match="frequency 1") as info:
        forward.interior_amplitudes(fsys, singular)
    assert info.value.freq_index == 1


def test_no_defect_forward_is_unperturbed_field():
    scene = fixtures.sparse_scene(defects=(0, 0), measured=False)
    table = forward.make_table(scene)
    solution = forward.solve_forward(scene, table=table)
    for frequency in scene.frequencies:
        expected = forward.unperturbed_field(
            scene, frequency, scene.receivers, table
        )
        assert np.allclose(solution.amplitudes[frequency.index], expected)


def test_forward_amplitudes_satisfy_interior_equation():
    scene = fixtures.sparse_scene(measured=False)
    table = forward.make_table(scene)
    solution = forward.solve_forward(
        scene, query_sites=scene.defect_sites, table=table
    )
    for frequency in scene.frequencies:
        j = frequency.index
        assert np.allclose(solution.amplitudes[j], solution.interior[j])
        fsys = forward.assemble_system(scene, frequency, table)
        G = forward.gram_matrix(fsys, scene.defects)
        assert np.allclose(G @ solution.interior[j], fsys.interior_source)


def test_data_equation_relation_at_receivers():
    scene = fixtures.sparse_scene(measured=False)
    table = forward.make_table(scene)
    solution = forward.solve_forward(scene, table=table)
    for frequency in scene.frequencies:
        j = frequency.index
        fsys = forward.assemble_system(scene, frequency, table)
        x = fsys.omega_sq * scene.defects.values * solution.interior[j]
        rhs = solution.amplitudes[j] - fsys.receiver_source
        assert np.allclose(fsys.C @ x, rhs, atol=1e-14)


def test_forward_is_independent_of_threads():
    scene = fixtures.dense_scene(measured=False)
    table = forward.make_table(scene)
    serial = forward.solve_forward(scene, table=table, threads=1)
    parallel = forward.solve_forward(scene, table=table, threads=4)
    for j in serial.amplitudes:
        assert np.array_equal(serial.amplitudes[j], parallel.amplitudes[j])


def test_receiver_misfit_of_true_defect_vanishes():
    scene = fixtures.sparse_scene()
    misfit = forward.receiver_misfit(scene, scene.defects, scene.measurements)
    assert misfit < 1e-14


def test_push_through_identity_holds():
    scene = fixtures.dense_scene(measured=False)
    for frequency in scene.frequencies:
        fsys = forward.assemble_system(scene, frequency)
        assert forward.push_through_residual(fsys, scene.defects) < 1e-12


def test_forward_solution_config():
    scene = fixtures.line_scene()
    config = forward.solve_forward(scene).get_config()
    assert config["query_sites"] == [[-3], [4], [6]]
    assert config["frequencies"][0]["admissible"]
    assert len(config["frequencies"][0]["amplitudes"]) == 3


def test_field_grid_without_defects_is_unperturbed(tmp_path):
    scene = fixtures.line_scene(defects=(0, 0), measured=False)
    table = forward.make_table(scene)
    sites, values = forward.field_grid(scene, radius=6, table=table)
    assert sites.tolist() == [[n] for n in range(-6, 7)]
    expected = forward.unperturbed_field(scene, 1, sites, table)
    assert np.allclose(values, expected)

    fname = str(tmp_path / "grid.txt")
    forward.write_grid(fname, sites, values)
    lines = open(fname).read().splitlines()
    assert len(lines) == 13
    assert lines[0].split()[0] == "-6"
    assert complex(*map(float, lines[0].split()[1:])) == values[0]


def test_field_grid_unknown_frequency_error():
    scene = fixtures.line_scene(measured=False)
    with pytest.raises(ValueError, match="out of range"):
        forward.field_grid(scene, radius=3, freq_index=2)
