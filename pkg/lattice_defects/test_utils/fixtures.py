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
"""Scenes shared by the tests."""

import numpy as np

from lattice_defects.engine import forward
from lattice_defects.engine import scene as scene_module


def omega_from_square(omega_sq):
    """The frequency with a given `omega^2` (principal square root)."""
    return complex(np.sqrt(complex(omega_sq)))


def with_measurements(scene, quadrature_order=None):
    """Fills `measurements` with the forward solution of `scene.defects`."""
    table = forward.make_table(scene, quadrature_order=quadrature_order)
    solution = forward.solve_forward(scene, table=table)
    return scene.replace(measurements=solution.to_measurement())


def line_scene(defects=(0.5, 0.25), omega_sq=-1.0, measured=True):
    """d = 1, two candidate sites and receivers on both sides."""
    scene = scene_module.Scene(
        dimension=1,
        background_slowness=1.0,
        frequencies=[omega_from_square(omega_sq)],
        sources=[scene_module.Source(1, (-5,), 1.0)],
        defect_sites=[(0,), (1,)],
        receivers=[(-3,), (4,), (6,)],
        defects=list(defects),
    )
    return with_measurements(scene) if measured else scene


def sparse_scene(defects=(0.5, 0.25 + 0.1j), measured=True):
    """d = 2, two isolated candidate sites seen by six receivers.

    Both receiver matrices have a trivial kernel.
    """
    sources = []
    for j in (1, 2):
        sources.append(scene_module.Source(j, (-4, 0), 1.0))
        sources.append(scene_module.Source(j, (2, 5), 0.5j))
    scene = scene_module.Scene(
        dimension=2,
        background_slowness=1.0,
        frequencies=[omega_from_square(-1.0), omega_from_square(-2.0)],
        sources=sources,
        defect_sites=[(0, 0), (3, 1)],
        receivers=[(-2, 2), (2, -2), (5, 3), (1, 4), (4, -1), (-1, -2)],
        defects=list(defects),
    )
    return with_measurements(scene) if measured else scene


DENSE_DEFECTS = (0.05, 0.1, 0.08, 0.03, 0.15, 0.06, 0.12, 0.04, 0.09)


def dense_scene(
    omega_squares=(-0.5, -1.0, -0.25, 10.0),
    defects=DENSE_DEFECTS,
    measured=True,
):
    """d = 2, the 3x3 footprint `[-1, 1]^2` inside a receiver ring of radius 2.

    Every receiver matrix has a non-trivial kernel: the discrete Helmholtz
    stencil centered at the origin radiates nothing outside the footprint.
    """
    sources = []
    for j in range(1, len(omega_squares) + 1):
        sources.append(scene_module.Source(j, (-4, 0), 1.0))
        sources.append(scene_module.Source(j, (3, 3), 0.5j))
    scene = scene_module.Scene(
        dimension=2,
        background_slowness=1.0,
        frequencies=[omega_from_square(w2) for w2 in omega_squares],
        sources=sources,
        defect_sites=scene_module.box_sites([-1, -1], [1, 1]),
        receivers=scene_module.ring_sites([0, 0], 2),
        defects=None if defects is None else list(defects),
    )
    return with_measurements(scene) if measured else scene


def cloak_scene(omega_squares=(-1.0,), ring_radius=3):
    """d = 2, the 3x3 footprint with a strong source right below it."""
    sources = [
        scene_module.Source(j, (0, -2), 10.0)
        for j in range(1, len(omega_squares) + 1)
    ]
    return scene_module.Scene(
        dimension=2,
        background_slowness=1.0,
        frequencies=[omega_from_square(w2) for w2 in omega_squares],
        sources=sources,
        defect_sites=scene_module.box_sites([-1, -1], [1, 1]),
        receivers=scene_module.ring_sites([0, 0], ring_radius),
    )


def random_scene(rng, num_defects=4, num_receivers=5, frequencies=(1j, 3 - 0.4j)):
    """A random admissible d = 2 scene with sites in `[-4, 4]^2`."""
    pool = scene_module.box_sites([-4, -4], [4, 4])
    chosen = rng.choice(len(pool), num_defects + num_receivers + 1, replace=False)
    sites = [pool[i] for i in chosen]
    defects = 0.2 * rng.random(num_defects) + 0.05j * rng.random(num_defects)
    sources = [
        scene_module.Source(j, sites[-1], complex(1.0 + rng.random()))
        for j in range(1, len(frequencies) + 1)
    ]
    return scene_module.Scene(
        dimension=2,
        background_slowness=1.0,
        frequencies=list(frequencies),
        sources=sources,
        defect_sites=sites[:num_defects],
        receivers=sites[num_defects:-1],
        defects=list(defects),
    )
