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
"""Process-wide switches and numerical defaults."""

import os

DEBUG = os.environ.get("LATTICE_DEFECTS_DEBUG", "1") != "0"


def default_quadrature_order(dimension):
    """Points per axis of the Brillouin-zone rule for a lattice dimension."""
    return 256 if dimension <= 2 else 64


def default_threads():
    """Worker threads used when no explicit thread count is given."""
    value = os.environ.get("LATTICE_DEFECTS_THREADS", "1")
    try:
        threads = int(value)
    except ValueError:
        raise ValueError(
            "Environment variable `LATTICE_DEFECTS_THREADS` should be a "
            f"positive integer. Received: {value}"
        )
    return max(threads, 1)


class Tolerances(object):
    """Thresholds shared by the forward, inverse and cloak computations.

    Every field can be overridden from the command line with
    `--tol-<name>` (underscores replaced by dashes).

    Args:
        symbol_floor: Float. Smallest accepted `|A_j(k)|` on the quadrature
            grid.
        adm_tol: Float. A defect is admissible at a frequency when the ratio
            of the smallest to the largest singular value of `G_j` exceeds it.
        rank_tol: Float. Relative singular value threshold of the receiver
            matrix rank.
        cons_tol: Float. Relative residual above which a data equation is
            inconsistent.
        ver_tol: Float. Relative receiver misfit accepted when a candidate is
            re-solved forward.
        den_tol: Float. Relative threshold below which a numerator or a
            denominator of the component-wise ratio counts as zero.
        im_tol: Float. Imaginary parts (and bound violations) tolerated by the
            box filter.
        cloak_tol: Float. Relative receiver deviation accepted for a cloak.
        cluster_tol: Float. Distance below which two candidates are
            the same point.
        step_tol: Float. Relative step length that stops the intersection
            solver.
        max_iter: Integer. Iterations per multi-start.
        num_starts: Integer. Multi-starts of the intersection solver.
        trivial_tol: Float. Defect vectors with a smaller max-norm count as
            "no defect" when designing cloaks.
    """

    def __init__(
        self,
        symbol_floor=1e-6,
        adm_tol=1e-10,
        rank_tol=1e-10,
        cons_tol=1e-8,
        ver_tol=1e-6,
        den_tol=1e-12,
        im_tol=1e-8,
        cloak_tol=1e-8,
        cluster_tol=1e-6,
        step_tol=1e-12,
        max_iter=200,
        num_starts=16,
        trivial_tol=1e-8,
    ):
        self.symbol_floor = symbol_floor
        self.adm_tol = adm_tol
        self.rank_tol = rank_tol
        self.cons_tol = cons_tol
        self.ver_tol = ver_tol
        self.den_tol = den_tol
        self.im_tol = im_tol
        self.cloak_tol = cloak_tol
        self.cluster_tol = cluster_tol
        self.step_tol = step_tol
        self.max_iter = int(max_iter)
        self.num_starts = int(num_starts)
        self.trivial_tol = trivial_tol
        for name, value in self.get_config().items():
            if not value > 0:
                raise ValueError(
                    f"Tolerance `{name}` should be positive. Received: {value}"
                )

    def get_config(self):
        return {
            "symbol_floor": self.symbol_floor,
            "adm_tol": self.adm_tol,
            "rank_tol": self.rank_tol,
            "cons_tol": self.cons_tol,
            "ver_tol": self.ver_tol,
            "den_tol": self.den_tol,
            "im_tol": self.im_tol,
            "cloak_tol": self.cloak_tol,
            "cluster_tol": self.cluster_tol,
            "step_tol": self.step_tol,
            "max_iter": self.max_iter,
            "num_starts": self.num_starts,
            "trivial_tol": self.trivial_tol,
        }

    @classmethod
    def from_config(cls, config):
        return cls(**config)

    def replace(self, **overrides):
        """Returns a copy with some fields overridden."""
        config = self.get_config()
        unknown = set(overrides) - set(config)
        if unknown:
            raise ValueError(f"Unknown tolerances: {sorted(unknown)}")
        config.update(overrides)
        return Tolerances.from_config(config)


def get_tolerances(tolerances=None):
    if tolerances is None:
        return Tolerances()
    if isinstance(tolerances, dict):
        return Tolerances.from_config(tolerances)
    if isinstance(tolerances, Tolerances):
        return tolerances
    raise ValueError(
        "`tolerances` not understood, expected None, dict or `Tolerances`, "
        f"found: {tolerances}"
    )
