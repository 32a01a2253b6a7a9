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
"""Truncated-lattice oracle for the forward problem.

The time-harmonic equation

    (2d - w_j^2 S_n^2) U_n - sum_{n' ~ n} U_n' = F_n^j

is solved directly on the box `[-radius, radius]^d` with zero values outside.
Off the passband the lattice Green function decays exponentially, so the
truncated solution converges to the infinite-lattice one as the box grows.
"""

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
import tensorflow as tf

from lattice_defects import errors
from lattice_defects import utils
from lattice_defects.engine import scene as scene_module


class OracleGrid(object):
    """Amplitudes of every frequency on a box `[-radius, radius]^d`.

    Args:
        radius: Integer, the half width of the box.
        dimension: Integer, the lattice dimension.
        values: Dictionary, frequency index to a complex array of shape
            `(2 radius + 1,) * d`; entry `[i_1, ..., i_d]` is site
            `(i_1 - radius, ..., i_d - radius)`.
    """

    def __init__(self, radius, dimension, values):
        self.radius = radius
        self.dimension = dimension
        self.values = values

    def sites(self):
        return np.asarray(
            scene_module.box_sites(
                [-self.radius] * self.dimension, [self.radius] * self.dimension
            ),
            dtype=int,
        )

    def at(self, freq_index, sites):
        """Values of one frequency at given sites inside the box."""
        sites = np.asarray(sites, dtype=int).reshape(-1, self.dimension)
        _check_inside(sites, self.radius)
        return self.values[freq_index][tuple((sites + self.radius).T)]


def _check_inside(sites, radius):
    if len(sites) and int(np.max(np.abs(sites))) > radius:
        raise ValueError(
            f"Site {sites[np.argmax(np.max(np.abs(sites), axis=1))].tolist()} "
            f"lies outside the box of radius {radius}."
        )


def _neighbor_matrix(dimension, radius):
    """Adjacency of the box sites, in C order of the grid indices."""
    width = 2 * radius + 1
    line = scipy.sparse.diags(
        [np.ones(width - 1), np.ones(width - 1)], [-1, 1], format="csr"
    )
    eye = scipy.sparse.identity(width, format="csr")
    total = None
    for axis in range(dimension):
        term = None
        for other in range(dimension):
            factor = line if other == axis else eye
            term = factor if term is None else scipy.sparse.kron(term, factor)
        total = term if total is None else total + term
    return total.tocsc()


def brute_force_oracle(scene, defects=None, radius=40, threads=None):
    """Solves the truncated problem of every frequency.

    Args:
        scene: A `Scene`.
        defects: Optional `DefectVector` or sequence of complex values.
            Defaults to `scene.defects`, or no defect at all.
        radius: Integer, the half width of the box.
        threads: Optional integer, the worker threads over frequencies.

    Returns:
        An `OracleGrid`.

    Raises:
        SingularTruncation: if a truncated system cannot be solved.
    """
    d = scene.dimension
    if defects is None:
        defects = scene.defects
    s = scene_module.as_defect_values(defects, scene.num_defects)
    sites = [scene.defect_array, scene.receiver_array]
    sites += [scene.site_array([src.site for src in scene.sources])]
    for block in sites:
        _check_inside(block, radius)

    shape = (2 * radius + 1,) * d
    size = int(np.prod(shape))
    adjacency = _neighbor_matrix(d, radius)
    slowness_sq = np.full(size, scene.background_slowness**2, dtype=complex)
    if scene.num_defects:
        flat = np.ravel_multi_index(tuple((scene.defect_array + radius).T), shape)
        slowness_sq[flat] += s

    def solve_one(frequency):
        diagonal = 2 * d - frequency.omega_sq * slowness_sq
        operator = (scipy.sparse.diags(diagonal, format="csc") - adjacency).tocsc()
        rhs = np.zeros(size, dtype=complex)
        source_sites, amplitudes = scene.sources_for(frequency.index)
        if len(amplitudes):
            flat = np.ravel_multi_index(tuple((source_sites + radius).T), shape)
            np.add.at(rhs, flat, amplitudes)
        if not np.any(rhs):
            return np.zeros(shape, dtype=complex)
        try:
            solution = scipy.sparse.linalg.splu(operator).solve(rhs)
        except RuntimeError as e:
            raise errors.SingularTruncation(
                f"Truncated system of frequency {frequency.index} (radius "
                f"{radius}) is singular: {e}"
            )
        if not np.all(np.isfinite(solution)):
            raise errors.SingularTruncation(
                f"Truncated system of frequency {frequency.index} (radius "
                f"{radius}) produced non-finite values."
            )
        return solution.reshape(shape)

    grids = utils.map_in_threads(solve_one, scene.frequencies, threads)
    values = {f.index: grid for f, grid in zip(scene.frequencies, grids)}
    return OracleGrid(radius, d, values)


def oracle_at_sites(scene, defects=None, sites=None, radius=40, threads=None):
    """Oracle values at sites together with a radius-doubling check.

    Args:
        scene: A `Scene`.
        defects: Optional defects, as in `brute_force_oracle`.
        sites: Optional list of sites. Defaults to the receivers.
        radius: Integer, the half width of the first box.
        threads: Optional integer.

    Returns:
        Tuple `(values, changes)`: dictionaries keyed by frequency index with
        the values at `radius` and the relative change of those values when
        the box is doubled.
    """
    if sites is None:
        sites = scene.receivers
    sites = scene.site_array(sites)
    coarse = brute_force_oracle(scene, defects, radius, threads)
    fine = brute_force_oracle(scene, defects, 2 * radius, threads)
    values, changes = {}, {}
    for frequency in scene.frequencies:
        j = frequency.index
        values[j] = coarse.at(j, sites)
        refined = fine.at(j, sites)
        scale = max(np.linalg.norm(refined), np.finfo(float).tiny)
        changes[j] = float(np.linalg.norm(values[j] - refined) / scale)
        if changes[j] > 1e-8:
            tf.get_logger().warning(
                f"Oracle of frequency {j} changed by {changes[j]:.3e} when the "
                f"radius was doubled from {radius}."
            )
    return values, changes
