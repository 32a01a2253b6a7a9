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
"""Intersection of the solution manifolds of several frequencies.

A defect `s` lies on every manifold iff for each frequency there are kernel
coordinates `t_j` with

    r_j(s, t_j) = num_j - w_j^2 s * den_j = 0,
    num_j = K_j t_j + x_j,    den_j = A_j num_j + sum_m a_m^j F_m^j.

The residual is linear in `t_j` for fixed `s` and linear in `s` for fixed
`t_j`. Each multi-start alternates both linear solves and then tries a joint
Gauss-Newton step on `sum_j |r_j|^2`, kept only when it lowers the objective.
"""

import collections
import traceback

import numpy as np
import scipy.linalg
import tensorflow as tf

from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects import utils
from lattice_defects.engine import display as display_module
from lattice_defects.engine import forward
from lattice_defects.engine import inverse
from lattice_defects.engine import report

StartResult = collections.namedtuple(
    "StartResult", ["start_id", "defects", "objective", "iterations", "converged"]
)


class BilinearProblem(object):
    """The stacked residuals `r_j` of a list of frequencies.

    Args:
        equations: List of `DataEquation`.
        systems: List of `FrequencySystem`, aligned with `equations`.
    """

    def __init__(self, equations, systems):
        self.equations = equations
        self.systems = systems
        self.num_defects = systems[0].num_defects
        self._terms = []
        for deq, fsys in zip(equations, systems):
            self._terms.append(
                (
                    fsys.omega_sq,
                    deq.kernel,
                    deq.particular,
                    fsys.A @ deq.kernel,
                    fsys.A @ deq.particular + fsys.interior_source,
                )
            )
        self.scale = float(
            np.sqrt(
                sum(
                    np.linalg.norm(x) ** 2 + np.linalg.norm(den0) ** 2
                    for _, _, x, _, den0 in self._terms
                )
            )
        )

    def numerators_and_denominators(self, coordinates):
        pairs = []
        for (_, K, x, AK, den0), t in zip(self._terms, coordinates):
            pairs.append((K @ t + x, AK @ t + den0))
        return pairs

    def residuals(self, s, coordinates):
        return [
            num - w2 * s * den
            for (w2, _, _, _, _), (num, den) in zip(
                self._terms, self.numerators_and_denominators(coordinates)
            )
        ]

    def objective(self, s, coordinates):
        return float(
            sum(np.linalg.norm(r) ** 2 for r in self.residuals(s, coordinates))
        )

    def solve_coordinates(self, s):
        """Best kernel coordinates of every frequency for a fixed `s`."""
        coordinates = []
        for w2, K, x, AK, den0 in self._terms:
            if K.shape[1] == 0:
                coordinates.append(np.zeros(0, dtype=complex))
                continue
            M = K - w2 * s[:, np.newaxis] * AK
            coordinates.append(scipy.linalg.lstsq(M, w2 * s * den0 - x)[0])
        return coordinates

    def weights(self, coordinates):
        """`sum_j |w_j^2 den_j|^2`, component-wise."""
        total = np.zeros(self.num_defects)
        for (w2, *_), (_, den) in zip(
            self._terms, self.numerators_and_denominators(coordinates)
        ):
            total += np.abs(w2 * den) ** 2
        return total

    def update_defects(self, coordinates, s, den_tol):
        """Best `s` for fixed kernel coordinates.

        Components with a vanishing weight keep their current value.
        """
        top = np.zeros(self.num_defects, dtype=complex)
        bottom = np.zeros(self.num_defects)
        for (w2, *_), (num, den) in zip(
            self._terms, self.numerators_and_denominators(coordinates)
        ):
            top += np.conj(w2 * den) * num
            bottom += np.abs(w2 * den) ** 2
        updated = np.array(s, dtype=complex)
        regular = bottom > (den_tol * max(self.scale, 1.0)) ** 2
        updated[regular] = top[regular] / bottom[regular]
        return updated

    def gauss_newton_step(self, s, coordinates):
        """Joint least-squares step over `s` and every `t_j`."""
        N = self.num_defects
        sizes = [K.shape[1] for _, K, _, _, _ in self._terms]
        J = np.zeros((N * len(self._terms), N + sum(sizes)), dtype=complex)
        pairs = self.numerators_and_denominators(coordinates)
        offset = N
        for j, ((w2, K, _, AK, _), (_, den)) in enumerate(zip(self._terms, pairs)):
            rows = slice(j * N, (j + 1) * N)
            J[rows, :N] = -w2 * np.diag(den)
            J[rows, offset : offset + sizes[j]] = K - w2 * s[:, np.newaxis] * AK
            offset += sizes[j]
        r = np.concatenate(self.residuals(s, coordinates))
        delta = scipy.linalg.lstsq(J, -r)[0]
        new_s = s + delta[:N]
        new_coordinates = []
        offset = N
        for t, size in zip(coordinates, sizes):
            new_coordinates.append(t + delta[offset : offset + size])
            offset += size
        return new_s, new_coordinates


def run_start(problem, initial, tolerances, start_id=0):
    """Alternating solves with Gauss-Newton acceleration from one start.

    Returns:
        A `StartResult`.
    """
    s = np.asarray(initial, dtype=complex)
    coordinates = problem.solve_coordinates(s)
    objective = problem.objective(s, coordinates)
    floor = (tolerances.step_tol * max(problem.scale, 1.0)) ** 2
    converged = False
    iteration = 0
    for iteration in range(1, tolerances.max_iter + 1):
        new_s = problem.update_defects(coordinates, s, tolerances.den_tol)
        new_coordinates = problem.solve_coordinates(new_s)
        new_objective = problem.objective(new_s, new_coordinates)

        gn_s, gn_coordinates = problem.gauss_newton_step(new_s, new_coordinates)
        if np.all(np.isfinite(gn_s)):
            gn_coordinates = problem.solve_coordinates(gn_s)
            gn_objective = problem.objective(gn_s, gn_coordinates)
            if gn_objective < new_objective:
                new_s, new_coordinates, new_objective = (
                    gn_s,
                    gn_coordinates,
                    gn_objective,
                )

        if not np.all(np.isfinite(new_s)):
            raise errors.NumericalError(f"Start {start_id} diverged.")
        step = np.linalg.norm(new_s - s)
        s, coordinates, objective = new_s, new_coordinates, new_objective
        if step < tolerances.step_tol * max(1.0, np.linalg.norm(s)) or (
            objective <= floor
        ):
            converged = True
            break
    return StartResult(start_id, s, objective, iteration, converged)


def initial_points(equations, systems, num_starts, seed, tolerances):
    """The multi-start points.

    The first starts are the `t = 0` points of each frequency, the others
    are random manifold points of the frequencies in turn. Start `i` draws
    from its own generator seeded with `(seed, i)`.
    """
    points = []
    for i in range(max(num_starts, len(equations))):
        j = i % len(equations)
        deq, fsys = equations[j], systems[j]
        t = None
        if i >= len(equations) and deq.kernel_dim:
            rng = np.random.default_rng([seed, i])
            scale = inverse.coordinate_scale(deq, fsys)
            t = inverse.random_coordinates(rng, deq.kernel_dim, scale)
        point = inverse.manifold_point(
            deq, fsys, t, den_tol=tolerances.den_tol, strict=False
        )
        values = np.where(np.isfinite(point.values), point.values, 0.0)
        points.append(values)
    return points


def cluster_candidates(candidates, cluster_tol):
    """Greedy clustering of candidates by Euclidean distance.

    Candidates are visited in order; one joins the first cluster whose
    representative is closer than `cluster_tol`, or founds a new cluster.

    Returns:
        List of representatives with `cluster_size` set.
    """
    representatives = []
    for candidate in candidates:
        for rep in representatives:
            if np.linalg.norm(rep.values - candidate.values) < cluster_tol:
                rep.cluster_size += 1
                break
        else:
            candidate.cluster_size = 1
            representatives.append(candidate)
    return representatives


def _free_indices(problem, s, tolerances):
    coordinates = problem.solve_coordinates(s)
    weights = problem.weights(coordinates)
    floor = (tolerances.den_tol * max(problem.scale, 1.0)) ** 2
    return [int(i) for i in np.flatnonzero(weights <= floor)]


def _single_frequency(
    scene, measurement, systems, equations, table, tolerances, seed
):
    deq, fsys = equations[0], systems[0]
    points = inverse.sample_manifold(
        deq, fsys, tolerances.num_starts, seed=seed, tolerances=tolerances
    )
    candidates = []
    for point in points:
        candidate = inverse.verify_candidate(
            scene, point.values, measurement, systems, equations, table, tolerances
        )
        candidate.free_indices = point.free_indices
        if (
            candidate.verification_residual is not None
            and candidate.verification_residual <= tolerances.ver_tol
        ):
            candidates.append(candidate)
    if not candidates:
        raise errors.NoCandidate(
            f"No admissible point of the manifold of frequency {deq.freq_index} "
            "reproduces the measurements."
        )
    status = (
        report.RecoveryStatus.MANIFOLD
        if deq.kernel_dim
        else report.RecoveryStatus.UNIQUE
    )
    return report.RecoveryResult(
        status=status,
        equations=equations,
        candidates=candidates,
        seed=seed,
        message=(
            f"A single frequency leaves a manifold of dimension {deq.kernel_dim}; "
            f"{len(candidates)} sampled points are reported."
        ),
    )


def intersect_manifolds(
    scene,
    measurement=None,
    table=None,
    tolerances=None,
    seed=0,
    threads=None,
    verbose=0,
    systems=None,
    exclude_trivial=False,
):
    """Searches the defects lying on the manifolds of all frequencies.

    Args:
        scene: A `Scene`.
        measurement: Optional `Measurement`. Defaults to `scene.measurements`.
        table: Optional `GreenTable`.
        tolerances: Optional `Tolerances`.
        seed: Integer, the seed of the random multi-starts.
        threads: Optional integer, the worker threads over starts.
        verbose: Integer, 0 is silent, 1 prints a summary, 2 every start.
        systems: Optional list of `FrequencySystem`, reused when given.
        exclude_trivial: Boolean, whether to discard candidates with every
            component below `trivial_tol` in magnitude.

    Returns:
        A `RecoveryResult` with status `UNIQUE` when the verified candidates
        form a single cluster and `MANIFOLD` otherwise.

    Raises:
        NoCandidate: if the data equations are inconsistent or no start
            converges to a verified candidate.
    """
    tolerances = config_module.get_tolerances(tolerances)
    if measurement is None:
        measurement = scene.measurements
    table = table or forward.make_table(scene, tolerances=tolerances)
    if systems is None:
        systems = forward.assemble_systems(scene, table, threads)
    equations = inverse.data_equations(scene, measurement, systems, tolerances)
    inconsistent = [deq.freq_index for deq in equations if not deq.consistent]
    if inconsistent:
        raise errors.NoCandidate(
            f"The measurements of frequencies {inconsistent} are not attainable "
            "by any defect on the candidate footprint."
        )
    if len(equations) == 1 and not exclude_trivial:
        return _single_frequency(
            scene, measurement, systems, equations, table, tolerances, seed
        )

    problem = BilinearProblem(equations, systems)
    starts = initial_points(
        equations, systems, tolerances.num_starts, seed, tolerances
    )
    display = display_module.Display(len(starts), verbose=verbose)
    display.on_search_begin(equations)

    def run_one(item):
        start_id, initial = item
        try:
            return run_start(problem, initial, tolerances, start_id)
        except (errors.NumericalError, np.linalg.LinAlgError, ValueError):
            if config_module.DEBUG:
                traceback.print_exc()
            return StartResult(start_id, None, None, 0, False)

    results = utils.map_in_threads(run_one, list(enumerate(starts)), threads)

    candidates = []
    for result in results:
        display.on_start_end(
            result.start_id, result.objective, result.iterations, result.converged
        )
        if result.defects is None:
            continue
        if not result.converged:
            tf.get_logger().warning(
                f"Start {result.start_id} did not converge in "
                f"{tolerances.max_iter} iterations."
            )
        trivial = np.max(np.abs(result.defects)) <= tolerances.trivial_tol
        if exclude_trivial and trivial:
            continue
        candidate = inverse.verify_candidate(
            scene, result.defects, measurement, systems, equations, table, tolerances
        )
        if (
            candidate.verification_residual is None
            or candidate.verification_residual > tolerances.ver_tol
        ):
            continue
        candidate.free_indices = _free_indices(problem, result.defects, tolerances)
        candidates.append(candidate)

    candidates.sort(key=lambda c: c.verification_residual)
    clusters = cluster_candidates(candidates, tolerances.cluster_tol)
    display.on_search_end(len(clusters))
    tf.get_logger().info(
        f"{len(candidates)} of {len(starts)} starts verified, "
        f"{len(clusters)} clusters."
    )
    if not clusters:
        raise errors.NoCandidate(
            f"None of the {len(starts)} starts converged to a defect that "
            "reproduces the measurements."
        )
    status = (
        report.RecoveryStatus.UNIQUE
        if len(clusters) == 1
        else report.RecoveryStatus.MANIFOLD
    )
    return report.RecoveryResult(
        status=status,
        equations=equations,
        candidates=clusters,
        seed=seed,
        message=f"{len(clusters)} clusters from {len(starts)} starts.",
    )
