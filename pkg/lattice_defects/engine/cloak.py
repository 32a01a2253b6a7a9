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
"""Defects that are invisible, or that mimic another field, at the receivers.

With zero data `u_j - sum_m c_m^j F_m^j = 0` the particular solution of the
data equation vanishes and the solution manifold reduces to

    s(t) = w_j^-2 (K_j t) / (A_j K_j t + sum_m a_m^j F_m^j),

every point of which leaves the receiver amplitudes equal to the unperturbed
field. A receiver ring around the footprint makes the design invisible from
the whole exterior.
"""

import collections

import numpy as np
import tensorflow as tf

from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects import utils
from lattice_defects.engine import forward
from lattice_defects.engine import intersection
from lattice_defects.engine import inverse
from lattice_defects.engine import scene as scene_module
from lattice_defects.engine import stateful


class DesignKind:
    CLOAK = "cloak"
    ILLUSION = "illusion"


class CloakDesign(stateful.Stateful):
    """A verified defect design.

    Args:
        kind: `DesignKind.CLOAK` or `DesignKind.ILLUSION`.
        defects: A `DefectVector`.
        receiver_deviations: Dictionary, frequency index to the norm of the
            receiver deviation from the reference field (the unperturbed
            field of a cloak, the target of an illusion).
        relative_deviations: Dictionary, frequency index to the receiver
            deviation divided by the norm of the reference field.
        interior_deviations: Dictionary, frequency index to the largest
            `|U(design) - U(unperturbed)|` over the defect sites.
        ratios: Dictionary, frequency index to the singular value ratio of
            `G_j`.
        coordinates: Optional list of complex arrays, the kernel coordinates
            the design was built from.
        ring_radius: Optional integer, the radius of the receiver ring.
        seed: Optional integer, the seed of the random draws.
    """

    def __init__(
        self,
        kind=DesignKind.CLOAK,
        defects=None,
        receiver_deviations=None,
        relative_deviations=None,
        interior_deviations=None,
        ratios=None,
        coordinates=None,
        ring_radius=None,
        seed=None,
    ):
        self.kind = kind
        self.defects = defects
        self.receiver_deviations = dict(receiver_deviations or {})
        self.relative_deviations = dict(relative_deviations or {})
        self.interior_deviations = dict(interior_deviations or {})
        self.ratios = dict(ratios or {})
        self.coordinates = coordinates
        self.ring_radius = ring_radius
        self.seed = seed

    @property
    def interior_deviation(self):
        return max(self.interior_deviations.values(), default=0.0)

    @property
    def receiver_deviation(self):
        return max(self.receiver_deviations.values(), default=0.0)

    @property
    def relative_receiver_deviation(self):
        return max(self.relative_deviations.values(), default=0.0)

    def summary(self):
        print(f"{self.kind.capitalize()} design")
        print(f"Nonzero defects: {int(np.count_nonzero(self.defects.values))}")
        for j in sorted(self.receiver_deviations):
            print(
                f"Frequency {j}: receiver deviation "
                f"{self.receiver_deviations[j]:.3e} "
                f"(relative {self.relative_deviations[j]:.3e}), interior deviation "
                f"{self.interior_deviations[j]:.3e}"
            )

    def get_state(self):
        coordinates = None
        if self.coordinates is not None:
            coordinates = [
                [utils.complex_to_pair(v) for v in t] for t in self.coordinates
            ]
        return {
            "kind": self.kind,
            "defects": self.defects.get_config(),
            "frequencies": [
                {
                    "freq_index": j,
                    "receiver_deviation": float(self.receiver_deviations[j]),
                    "relative_receiver_deviation": float(
                        self.relative_deviations[j]
                    ),
                    "interior_deviation": float(self.interior_deviations[j]),
                    "singular_value_ratio": float(self.ratios[j]),
                }
                for j in sorted(self.receiver_deviations)
            ],
            "coordinates": coordinates,
            "ring_radius": self.ring_radius,
            "seed": self.seed,
        }

    def set_state(self, state):
        self.kind = state["kind"]
        self.defects = scene_module.DefectVector.from_config(state["defects"])
        frequencies = state["frequencies"]
        self.receiver_deviations = {
            f["freq_index"]: f["receiver_deviation"] for f in frequencies
        }
        self.relative_deviations = {
            f["freq_index"]: f["relative_receiver_deviation"] for f in frequencies
        }
        self.interior_deviations = {
            f["freq_index"]: f["interior_deviation"] for f in frequencies
        }
        self.ratios = {
            f["freq_index"]: f["singular_value_ratio"] for f in frequencies
        }
        self.coordinates = None
        if state["coordinates"] is not None:
            self.coordinates = [
                np.asarray([utils.pair_to_complex(p) for p in t], dtype=complex)
                for t in state["coordinates"]
            ]
        self.ring_radius = state["ring_radius"]
        self.seed = state["seed"]

    @classmethod
    def from_state(cls, state):
        design = cls()
        design.set_state(state)
        return design


def with_receiver_ring(scene, radius, center=None):
    """Replaces the receivers of a scene by the ring of sup-norm `radius`."""
    if center is None:
        center = [0] * scene.dimension
    return scene.replace(receivers=scene_module.ring_sites(center, radius))


def invisible_manifold(scene, freq_index=1, table=None, tolerances=None):
    """The manifold of defects invisible at the receivers of one frequency.

    Returns:
        Tuple `(deq, fsys)`: a `DataEquation` with zero right-hand side and
        zero particular solution, and the `FrequencySystem` it belongs to.
        Pass them to `inverse.manifold_point` to evaluate `s(t)`.
    """
    tolerances = config_module.get_tolerances(tolerances)
    fsys = forward.assemble_system(scene, freq_index, table)
    deq = inverse.solve_data_equation(
        fsys.C,
        np.zeros(scene.num_receivers, dtype=complex),
        rank_tol=tolerances.rank_tol,
        cons_tol=tolerances.cons_tol,
        freq_index=fsys.freq_index,
    )
    return deq, fsys


# Receiver deviations are absolute norms `|u_j(design) - reference_j|`; relative
# deviations divide them by `|reference_j|`.
DesignCheck = collections.namedtuple(
    "DesignCheck",
    [
        "receiver_deviations",
        "relative_deviations",
        "interior_deviations",
        "ratios",
    ],
)


def _relative(difference, reference):
    scale = max(np.linalg.norm(reference), np.finfo(float).tiny)
    return float(np.linalg.norm(difference) / scale)


def verify_design(scene, defects, reference, table=None, tolerances=None):
    """Forward-solves a design against a reference receiver field.

    Args:
        scene: A `Scene`.
        defects: A `DefectVector` or sequence of complex values.
        reference: A `Measurement`, the receiver field the design should
            produce.
        table: Optional `GreenTable`.
        tolerances: Optional `Tolerances`.

    Returns:
        A `DesignCheck` of dictionaries keyed by frequency index.

    Raises:
        NotAdmissible: if the design is not admissible at some frequency.
    """
    solution = forward.solve_forward(
        scene, defects, table=table, tolerances=tolerances
    )
    receiver_deviations, relative_deviations, interior_deviations = {}, {}, {}
    for frequency in scene.frequencies:
        j = frequency.index
        fsys = forward.assemble_system(scene, frequency, table)
        target = np.asarray(reference[j])
        difference = solution.amplitudes[j] - target
        receiver_deviations[j] = float(np.linalg.norm(difference))
        relative_deviations[j] = _relative(difference, target)
        change = solution.interior[j] - fsys.interior_source
        interior_deviations[j] = float(np.max(np.abs(change), initial=0.0))
    return DesignCheck(
        receiver_deviations=receiver_deviations,
        relative_deviations=relative_deviations,
        interior_deviations=interior_deviations,
        ratios=solution.ratios,
    )


def _satisfies(values, bound, real, im_tol):
    if bound is not None:
        return bool(inverse.box_filter([values], bound, im_tol))
    if real:
        return bool(np.all(np.abs(np.imag(values)) <= im_tol))
    return True


def _is_real_system(deq, fsys):
    # Real coordinates then give real defects.
    return not (
        np.any(deq.kernel.imag)
        or np.any(fsys.A.imag)
        or np.any(fsys.interior_source.imag)
        or fsys.omega_sq.imag
    )


def _design_monochromatic(
    scene, t, bound, real, seed, max_draws, table, tolerances, ring_radius
):
    deq, fsys = invisible_manifold(scene, 1, table, tolerances)
    reference = inverse.unperturbed_measurement(scene, [fsys])

    def build(coordinates):
        point = inverse.manifold_point(
            deq, fsys, coordinates, den_tol=tolerances.den_tol
        )
        check = verify_design(scene, point.values, reference, table, tolerances)
        deviation = check.receiver_deviations[fsys.freq_index]
        if deviation >= tolerances.cloak_tol:
            raise errors.NumericalError(
                f"The design deviates by {deviation:.3e} at the receivers."
            )
        return CloakDesign(
            kind=DesignKind.CLOAK,
            defects=point.defects,
            **check._asdict(),
            coordinates=[point.t],
            ring_radius=ring_radius,
            seed=seed,
        )

    if t is not None or deq.kernel_dim == 0:
        if deq.kernel_dim == 0:
            tf.get_logger().info(
                "The receiver matrix has a trivial kernel: only the zero defect "
                "is invisible on this footprint."
            )
        return build(t)

    rng = np.random.default_rng(seed)
    scale = inverse.coordinate_scale(deq, fsys)
    real_draws = (real or bound is not None) and _is_real_system(deq, fsys)
    for _ in range(max_draws):
        coordinates = inverse.random_coordinates(
            rng, deq.kernel_dim, scale, real=real_draws
        )
        try:
            design = build(coordinates)
        except errors.NumericalError:
            continue
        if _satisfies(design.defects.values, bound, real, tolerances.im_tol):
            return design
    raise errors.NoCandidate(
        f"None of {max_draws} random kernel draws gave an admissible design "
        "within the constraints."
    )


def design_cloak(
    scene,
    t=None,
    bound=None,
    real=False,
    seed=0,
    max_draws=100,
    table=None,
    tolerances=None,
    threads=None,
    verbose=0,
    ring_radius=None,
):
    """Designs a nonzero defect invisible at the receivers of every frequency.

    A single frequency has an explicit construction from kernel coordinates
    `t` (random draws when omitted). Several frequencies require a nonzero
    point on the intersection of the invisible manifolds.

    Args:
        scene: A `Scene`.
        t: Optional complex array of kernel coordinates (single frequency).
        bound: Optional positive float. Designs must be real and in
            `[0, bound]`.
        real: Boolean, whether designs must be real.
        seed: Integer, the seed of the random draws.
        max_draws: Integer, random draws tried before giving up.
        table: Optional `GreenTable`.
        tolerances: Optional `Tolerances`.
        threads: Optional integer.
        verbose: Integer, the verbosity of multi-frequency searches.
        ring_radius: Optional integer recorded in the design.

    Returns:
        A verified `CloakDesign`.

    Raises:
        OffManifold: if the given `t` maps to a pole.
        NotAdmissible: if the design for the given `t` is not admissible.
        NoCandidate: if no design satisfies the constraints.
    """
    tolerances = config_module.get_tolerances(tolerances)
    table = table or forward.make_table(scene, tolerances=tolerances)
    if scene.num_frequencies == 1:
        return _design_monochromatic(
            scene, t, bound, real, seed, max_draws, table, tolerances, ring_radius
        )

    systems = forward.assemble_systems(scene, table, threads)
    reference = inverse.unperturbed_measurement(scene, systems)
    result = intersection.intersect_manifolds(
        scene,
        reference,
        table=table,
        tolerances=tolerances,
        seed=seed,
        threads=threads,
        verbose=verbose,
        systems=systems,
        exclude_trivial=True,
    )
    for candidate in result.candidates:
        if not _satisfies(candidate.values, bound, real, tolerances.im_tol):
            continue
        check = verify_design(
            scene, candidate.values, reference, table, tolerances
        )
        if max(check.receiver_deviations.values()) < tolerances.cloak_tol:
            return CloakDesign(
                kind=DesignKind.CLOAK,
                defects=candidate.defects,
                **check._asdict(),
                ring_radius=ring_radius,
                seed=seed,
            )
    raise errors.NoCandidate(
        "No nonzero defect is invisible at every frequency within the "
        "constraints."
    )


def design_illusion(scene, target, t=None, table=None, tolerances=None):
    """Designs a defect whose receiver amplitudes equal a target field.

    Args:
        scene: A `Scene` with a single frequency.
        target: A `Measurement` or a complex `(R,)` array.
        t: Optional complex array of kernel coordinates. Defaults to zeros.
        table: Optional `GreenTable`.
        tolerances: Optional `Tolerances`.

    Returns:
        A verified `CloakDesign` of kind `ILLUSION`.

    Raises:
        NoCandidate: if no defect on the footprint produces the target.
        OffManifold: if `t` maps to a pole.
        NotAdmissible: if the design is not admissible.
    """
    if scene.num_frequencies != 1:
        raise ValueError(
            "Illusions are designed for a single frequency. "
            f"Received: {scene.num_frequencies} frequencies."
        )
    tolerances = config_module.get_tolerances(tolerances)
    table = table or forward.make_table(scene, tolerances=tolerances)
    if not isinstance(target, scene_module.Measurement):
        target = scene_module.Measurement({1: np.asarray(target, dtype=complex)})
    fsys = forward.assemble_system(scene, 1, table)
    deq = inverse.solve_data_equation(
        fsys.C,
        inverse.data_rhs(scene, target, fsys.frequency, fsys),
        rank_tol=tolerances.rank_tol,
        cons_tol=tolerances.cons_tol,
        freq_index=1,
    )
    if not deq.consistent:
        raise errors.NoCandidate(
            "The target field is not attainable by any defect on the footprint "
            f"(residual {deq.residual:.3e})."
        )
    point = inverse.manifold_point(deq, fsys, t, den_tol=tolerances.den_tol)
    check = verify_design(scene, point.values, target, table, tolerances)
    deviation = check.relative_deviations[1]
    if deviation > tolerances.ver_tol:
        raise errors.NumericalError(
            f"The illusion deviates by {deviation:.3e} (relative) from the target."
        )
    return CloakDesign(
        kind=DesignKind.ILLUSION,
        defects=point.defects,
        **check._asdict(),
        coordinates=[point.t],
    )
