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
"""Characterization of the defects consistent with receiver amplitudes.

For every frequency the receiver amplitudes determine a vector `x_j` up to
the kernel of the receiver matrix `C_j` through the data equation

    C_j x = u_j - sum_m c_m^j F_m^j.

Each solution maps to a defect by the component-wise ratio

    s = w_j^-2 (x + x_j) / (A_j x + A_j x_j + sum_m a_m^j F_m^j),

and a defect explains the data of every frequency iff it lies on all of these
solution manifolds and is admissible.
"""

import numpy as np
import scipy.linalg
import tensorflow as tf

from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects import utils
from lattice_defects.engine import forward
from lattice_defects.engine import report
from lattice_defects.engine import scene as scene_module

REGULAR = "REGULAR"
FREE = "FREE"
POLE = "POLE"


def data_rhs(scene, measurement, frequency, fsys=None, table=None):
    """Right-hand side `b_j` of the data equation.

    Args:
        scene: A `Scene`.
        measurement: A `Measurement`.
        frequency: A `FrequencySpec` of the scene or its index.
        fsys: Optional `FrequencySystem` of that frequency.
        table: Optional `GreenTable`.

    Returns:
        Complex `(R,)` array, `u_j` minus the unperturbed receiver field.
    """
    if fsys is None:
        fsys = forward.assemble_system(scene, frequency, table)
    u = np.asarray(measurement[fsys.freq_index], dtype=complex)
    if len(u) != scene.num_receivers:
        raise ValueError(
            f"Measurement of frequency {fsys.freq_index} has {len(u)} values, "
            f"expected {scene.num_receivers}."
        )
    return u - fsys.receiver_source


def solve_data_equation(C, rhs, rank_tol=1e-10, cons_tol=1e-8, freq_index=None):
    """Solves `C x = rhs` with a rank-revealing SVD.

    Args:
        C: Complex `(R, N)` array.
        rhs: Complex `(R,)` array.
        rank_tol: Float. Singular values below `rank_tol * sigma_max` count
            as zero.
        cons_tol: Float. The system is inconsistent when the residual exceeds
            `cons_tol * (|rhs| + 1)`.
        freq_index: Optional integer stored in the result.

    Returns:
        A `DataEquation` with the minimum-norm solution and a kernel basis.
    """
    C = np.asarray(C, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    N = C.shape[1]
    # Real data keep a real kernel basis, so real coordinates give real defects.
    if not np.any(C.imag) and not np.any(rhs.imag):
        C, rhs = C.real, rhs.real
    if C.size == 0:
        U = np.eye(C.shape[0], dtype=complex)
        sv = np.zeros(0)
        V = np.eye(N, dtype=complex)
    else:
        U, sv, Vh = scipy.linalg.svd(C, full_matrices=True)
        V = Vh.conj().T
    rank = int(np.sum(sv > rank_tol * sv[0])) if len(sv) and sv[0] > 0 else 0

    coefficients = (U[:, :rank].conj().T @ rhs) / sv[:rank]
    particular = (V[:, :rank] @ coefficients).astype(complex)
    kernel = V[:, rank:].astype(complex)
    residual = float(np.linalg.norm(C @ particular - rhs))
    consistent = residual <= cons_tol * (np.linalg.norm(rhs) + 1)
    condition = float(sv[0] / sv[rank - 1]) if rank else float("inf")
    return report.DataEquation(
        freq_index=freq_index,
        rhs=rhs.astype(complex),
        particular=particular,
        kernel=kernel,
        rank=rank,
        rank_tol=rank_tol,
        residual=residual,
        consistent=bool(consistent),
        condition=condition,
    )


def data_equations(scene, measurement, systems, tolerances=None):
    """`solve_data_equation` for every frequency of a scene."""
    tolerances = config_module.get_tolerances(tolerances)
    return [
        solve_data_equation(
            fsys.C,
            data_rhs(scene, measurement, fsys.frequency, fsys),
            rank_tol=tolerances.rank_tol,
            cons_tol=tolerances.cons_tol,
            freq_index=fsys.freq_index,
        )
        for fsys in systems
    ]


class ManifoldPoint(object):
    """One point of the solution manifold of a frequency.

    Args:
        t: Complex `(k_j,)` array, the kernel coordinates.
        numerator: Complex `(N,)` array, `x + x_j`.
        denominator: Complex `(N,)` array, `A_j (x + x_j) + sum a_m F_m`.
        values: Complex `(N,)` array, the defect perturbations. Entries of
            `FREE` components hold the default value, `POLE` ones are NaN.
        classes: List of `REGULAR`, `FREE` or `POLE`, one per component.
    """

    def __init__(self, t, numerator, denominator, values, classes):
        self.t = t
        self.numerator = numerator
        self.denominator = denominator
        self.values = values
        self.classes = classes

    @property
    def free_indices(self):
        return [i for i, c in enumerate(self.classes) if c == FREE]

    @property
    def pole_indices(self):
        return [i for i, c in enumerate(self.classes) if c == POLE]

    @property
    def on_manifold(self):
        return not self.pole_indices

    @property
    def defects(self):
        return scene_module.DefectVector(self.values)


def manifold_point(deq, fsys, t=None, free_value=0.0, den_tol=1e-12, strict=True):
    """Evaluates the component-wise ratio at kernel coordinates `t`.

    Args:
        deq: A `DataEquation`.
        fsys: The `FrequencySystem` of the same frequency.
        t: Optional complex `(k_j,)` array. Defaults to zeros.
        free_value: Complex, the value given to components whose numerator
            and denominator both vanish.
        den_tol: Float, the relative threshold of a vanishing entry.
        strict: Boolean. If True, a `POLE` component raises `OffManifold`.

    Returns:
        A `ManifoldPoint`.
    """
    k = deq.kernel_dim
    t = np.zeros(k, dtype=complex) if t is None else np.asarray(t, dtype=complex)
    t = t.reshape(-1)
    if len(t) != k:
        raise ValueError(f"Expected {k} kernel coordinates, found {len(t)}.")
    numerator = deq.kernel @ t + deq.particular
    denominator = fsys.A @ numerator + fsys.interior_source
    scale = max(
        np.max(np.abs(numerator), initial=0.0),
        np.max(np.abs(denominator), initial=0.0),
        np.max(np.abs(fsys.interior_source), initial=0.0),
        np.finfo(float).tiny,
    )
    threshold = den_tol * scale
    small_num = np.abs(numerator) <= threshold
    small_den = np.abs(denominator) <= threshold

    classes = []
    values = np.empty(len(numerator), dtype=complex)
    for i in range(len(numerator)):
        if not small_den[i]:
            classes.append(REGULAR)
            values[i] = numerator[i] / (fsys.omega_sq * denominator[i])
        elif small_num[i]:
            classes.append(FREE)
            values[i] = free_value
        else:
            classes.append(POLE)
            values[i] = np.nan
    point = ManifoldPoint(t, numerator, denominator, values, classes)
    if strict and point.pole_indices:
        raise errors.OffManifold(
            f"Kernel coordinates map to a pole of frequency {fsys.freq_index} "
            f"at components {point.pole_indices}.",
            poles=point.pole_indices,
        )
    return point


def _membership_system(s, deq, fsys):
    # Residual is `M t + r0`, linear in the kernel coordinates.
    w2 = fsys.omega_sq
    M = deq.kernel - w2 * s[:, np.newaxis] * (fsys.A @ deq.kernel)
    r0 = deq.particular - w2 * s * (
        fsys.A @ deq.particular + fsys.interior_source
    )
    return M, r0


def _least_squares(M, rhs):
    if M.shape[1] == 0:
        return np.zeros(0, dtype=complex)
    return scipy.linalg.lstsq(M, rhs)[0]


def membership_residual(defects, deq, fsys, return_coordinates=False):
    """Distance of a defect from the solution manifold of one frequency.

    Returns the minimum over `y` in the kernel of
    `|(y + x_j) - w_j^2 S (A_j y + A_j x_j + sum a_m F_m)|`.

    Args:
        defects: A `DefectVector` or sequence of complex values.
        deq: A `DataEquation`.
        fsys: The `FrequencySystem` of the same frequency.
        return_coordinates: Boolean, whether to also return the minimizing
            kernel coordinates.

    Returns:
        Float, or tuple `(residual, t)`.
    """
    s = scene_module.as_defect_values(defects, fsys.num_defects)
    M, r0 = _membership_system(s, deq, fsys)
    t = _least_squares(M, -r0)
    residual = float(np.linalg.norm(M @ t + r0))
    if return_coordinates:
        return residual, t
    return residual


def kernel_coordinates(defects, deq, fsys, tolerances=None):
    """Inverts the parametrization of the manifold at an admissible defect.

    The kernel element is `y_j = w_j^2 S G_j^-1 sum a_m F_m - x_j`.

    Returns:
        Tuple `(t, remainder)`: the coordinates of the projection of `y_j` on
        the kernel basis and the norm of the part of `y_j` outside the kernel
        (zero when the defect lies on the manifold).
    """
    s = scene_module.as_defect_values(defects, fsys.num_defects)
    w, _ = forward.interior_amplitudes(fsys, s, tolerances)
    y = fsys.omega_sq * s * w - deq.particular
    t = deq.kernel.conj().T @ y
    remainder = float(np.linalg.norm(y - deq.kernel @ t))
    return t, remainder


def injectivity_check(deq, fsys, t1, t2, value_tol=1e-10, coordinate_tol=1e-8):
    """Whether a pair of coordinates is consistent with an injective map.

    Returns False only when both coordinates give the same defect (within
    `value_tol`) while the coordinates themselves differ (beyond
    `coordinate_tol`).
    """
    s1 = manifold_point(deq, fsys, t1).values
    s2 = manifold_point(deq, fsys, t2).values
    if np.linalg.norm(s1 - s2) >= value_tol:
        return True
    difference = np.asarray(t1, dtype=complex) - np.asarray(t2, dtype=complex)
    return bool(np.linalg.norm(difference) < coordinate_tol)


def coordinate_scale(deq, fsys):
    """Typical size of kernel coordinates for random draws."""
    return max(
        np.linalg.norm(deq.particular),
        np.linalg.norm(fsys.interior_source),
        np.finfo(float).eps,
    )


def random_coordinates(rng, size, scale, real=False):
    """Gaussian kernel coordinates, complex unless `real`."""
    if real:
        return scale * rng.standard_normal(size).astype(complex)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_manifold(deq, fsys, count, seed=None, scale=None, tolerances=None):
    """Draws random admissible points of the solution manifold.

    Args:
        deq: A `DataEquation`.
        fsys: The `FrequencySystem` of the same frequency.
        count: Integer, the number of points wanted.
        seed: Optional integer seed.
        scale: Optional float, the spread of the coordinates. Defaults to
            `coordinate_scale(deq, fsys)`.
        tolerances: Optional `Tolerances`.

    Returns:
        List of at most `count` POLE-free `ManifoldPoint`s with admissible
        defects. A trivial kernel yields the single point `t = 0`.
    """
    tolerances = config_module.get_tolerances(tolerances)
    if deq.kernel_dim == 0:
        point = manifold_point(deq, fsys, den_tol=tolerances.den_tol, strict=False)
        return [point] if point.on_manifold else []
    rng = np.random.default_rng(seed)
    scale = coordinate_scale(deq, fsys) if scale is None else scale
    points = []
    for _ in range(10 * count):
        if len(points) == count:
            break
        t = random_coordinates(rng, deq.kernel_dim, scale)
        point = manifold_point(
            deq, fsys, t, den_tol=tolerances.den_tol, strict=False
        )
        if not point.on_manifold:
            continue
        admissibility = forward.is_admissible([fsys], point.values, tolerances)[0]
        if admissibility.admissible:
            points.append(point)
    return points


def box_filter(candidates, bound, im_tol=1e-8):
    """Keeps candidates that are real and within `[0, bound]`.

    Args:
        candidates: List of `Candidate`, `DefectVector` or arrays.
        bound: Positive float `B`.
        im_tol: Float, the tolerance on imaginary parts and on the bounds.

    Returns:
        The sub-list of candidates with every component real within `im_tol`
        and its real part in `[-im_tol, B + im_tol]`.
    """
    if not bound > 0:
        raise ValueError(f"`bound` should be positive. Received: {bound}")
    kept = []
    for candidate in candidates:
        values = np.asarray(getattr(candidate, "values", candidate), dtype=complex)
        if not np.all(np.isfinite(values)):
            continue
        if np.any(np.abs(values.imag) > im_tol):
            continue
        if np.any(values.real < -im_tol) or np.any(values.real > bound + im_tol):
            continue
        kept.append(candidate)
    return kept


def verify_candidate(
    scene, values, measurement, systems, equations, table, tolerances
):
    """Builds a `Candidate` with membership and forward residuals.

    The verification residual is None when the defect is not admissible.
    """
    memberships = {
        deq.freq_index: membership_residual(values, deq, fsys)
        for deq, fsys in zip(equations, systems)
    }
    try:
        misfit = forward.receiver_misfit(
            scene, values, measurement, table=table, tolerances=tolerances
        )
    except errors.NotAdmissible:
        misfit = None
    return report.Candidate(
        defects=scene_module.DefectVector(values),
        membership_residuals=memberships,
        verification_residual=misfit,
    )


def _inconsistent_result(equations, seed=None):
    bad = [deq.freq_index for deq in equations if not deq.consistent]
    return report.RecoveryResult(
        status=report.RecoveryStatus.INCONSISTENT,
        equations=equations,
        seed=seed,
        message=(
            f"No defect on the candidate footprint explains the measurements of "
            f"frequencies {bad}."
        ),
    )


def recover_unique(
    scene,
    measurement=None,
    table=None,
    tolerances=None,
    threads=None,
    systems=None,
):
    """Recovers the defect from a frequency with a trivial kernel.

    Args:
        scene: A `Scene`.
        measurement: Optional `Measurement`. Defaults to `scene.measurements`.
        table: Optional `GreenTable`.
        tolerances: Optional `Tolerances`.
        threads: Optional integer.
        systems: Optional list of `FrequencySystem`, reused when given.

    Returns:
        A `RecoveryResult` with status `UNIQUE`, or `INCONSISTENT` when the
        data cannot be explained.

    Raises:
        NoUniqueFrequency: if every receiver matrix has a non-trivial kernel.
    """
    tolerances = config_module.get_tolerances(tolerances)
    measurement = _measurement(scene, measurement)
    table = table or forward.make_table(scene, tolerances=tolerances)
    if systems is None:
        systems = forward.assemble_systems(scene, table, threads)
    equations = data_equations(scene, measurement, systems, tolerances)

    trivial = [i for i, deq in enumerate(equations) if deq.kernel_dim == 0]
    if not trivial:
        raise errors.NoUniqueFrequency(
            "Every receiver matrix has a non-trivial kernel "
            f"(dimensions {[deq.kernel_dim for deq in equations]})."
        )
    if not all(deq.consistent for deq in equations):
        return _inconsistent_result(equations)

    chosen = trivial[0]
    deq, fsys = equations[chosen], systems[chosen]
    tf.get_logger().info(f"Unique recovery from frequency {deq.freq_index}.")
    point = manifold_point(deq, fsys, den_tol=tolerances.den_tol)
    candidate = verify_candidate(
        scene, point.values, measurement, systems, equations, table, tolerances
    )
    candidate.free_indices = point.free_indices
    misfit = candidate.verification_residual
    if misfit is None or misfit > tolerances.ver_tol:
        result = _inconsistent_result(equations)
        result.candidates = [candidate]
        result.message = (
            f"The defect recovered from frequency {deq.freq_index} does not "
            f"reproduce the measurements (misfit {misfit})."
        )
        return result
    return report.RecoveryResult(
        status=report.RecoveryStatus.UNIQUE,
        equations=equations,
        candidates=[candidate],
        message=f"Recovered from frequency {deq.freq_index}.",
    )


def _measurement(scene, measurement):
    if measurement is None:
        measurement = scene.measurements
    if measurement is None:
        raise errors.InputError("The scene carries no `measurements`.")
    return measurement


def recover(
    scene,
    measurement=None,
    table=None,
    tolerances=None,
    seed=0,
    threads=None,
    verbose=0,
):
    """Runs the complete inverse analysis of a measurement.

    Inconsistent data give an `INCONSISTENT` result. Otherwise the defect is
    recovered directly when some receiver matrix has a trivial kernel, and by
    intersecting the solution manifolds of all frequencies when none has.

    Returns:
        A `RecoveryResult`. Analyses without a verified candidate return
        status `NO_CANDIDATE` instead of raising.
    """
    from lattice_defects.engine import intersection

    tolerances = config_module.get_tolerances(tolerances)
    measurement = _measurement(scene, measurement)
    table = table or forward.make_table(scene, tolerances=tolerances)
    systems = forward.assemble_systems(scene, table, threads)
    equations = data_equations(scene, measurement, systems, tolerances)
    if not all(deq.consistent for deq in equations):
        return _inconsistent_result(equations, seed=seed)
    if any(deq.kernel_dim == 0 for deq in equations):
        result = recover_unique(
            scene, measurement, table, tolerances, threads, systems=systems
        )
        result.seed = seed
        return result
    try:
        return intersection.intersect_manifolds(
            scene,
            measurement,
            table=table,
            tolerances=tolerances,
            seed=seed,
            threads=threads,
            verbose=verbose,
            systems=systems,
        )
    except errors.NoCandidate as e:
        return report.RecoveryResult(
            status=report.RecoveryStatus.NO_CANDIDATE,
            equations=equations,
            seed=seed,
            message=str(e),
        )


def as_measurement(values):
    """Wraps a dictionary of receiver vectors as a `Measurement`."""
    if isinstance(values, scene_module.Measurement):
        return values
    return scene_module.Measurement(values)


def unperturbed_measurement(scene, systems):
    """Receiver amplitudes of the scene without any defect."""
    return scene_module.Measurement(
        {fsys.freq_index: fsys.receiver_source for fsys in systems}
    )


def sites_summary(scene, indices):
    """Candidate sites of a list of defect indices."""
    return [list(scene.defect_sites[i]) for i in utils.to_list(indices)]
