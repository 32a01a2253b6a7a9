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
"""Interaction matrices and the forward problem.

For one frequency `w_j` and defect perturbations `s` on the candidate sites
`n_1..n_N`, the interior amplitudes `w_j = (U_{n_l}^j)_l` solve

    G_j w_j = sum_m F_m^j a_m^j,    G_j = I - w_j^2 A_j diag(s),

and the amplitude at any site `p` is

    U_p^j = w_j^2 sum_l a^j_{n_l - p} s_l (w_j)_l + sum_m F_m^j a^j_{m - p}.
"""

import collections

import numpy as np
import scipy.linalg

from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects import utils
from lattice_defects.engine import brillouin
from lattice_defects.engine import scene as scene_module

Admissibility = collections.namedtuple(
    "Admissibility", ["freq_index", "admissible", "ratio"]
)


class FrequencySystem(object):
    """The matrices of one frequency, filled from Green coefficients.

    Args:
        frequency: A `FrequencySpec`.
        A: Complex `(N, N)` array, `A[p, q] = a_{n_q - n_p}`.
        C: Complex `(R, N)` array, `C[p, q] = a_{n_q - r_p}`.
        a_src: Complex `(N, S)` array, column `m` is `a_m^j`.
        c_src: Complex `(R, S)` array, column `m` is `c_m^j`.
        amplitudes: Complex `(S,)` array, the source amplitudes `F_m^j`.
    """

    def __init__(self, frequency, A, C, a_src, c_src, amplitudes):
        self.frequency = frequency
        self.A = A
        self.C = C
        self.a_src = a_src
        self.c_src = c_src
        self.amplitudes = amplitudes

    @property
    def freq_index(self):
        return self.frequency.index

    @property
    def omega_sq(self):
        return self.frequency.omega_sq

    @property
    def interior_source(self):
        """`sum_m a_m^j F_m^j`, the unperturbed field on the candidate sites."""
        return self.a_src @ self.amplitudes

    @property
    def receiver_source(self):
        """`sum_m c_m^j F_m^j`, the unperturbed field at the receivers."""
        return self.c_src @ self.amplitudes

    @property
    def num_defects(self):
        return self.A.shape[0]


def make_table(scene, quadrature_order=None, tolerances=None):
    """A `GreenTable` matching the lattice of a scene."""
    tolerances = config_module.get_tolerances(tolerances)
    return brillouin.GreenTable(
        scene.dimension,
        scene.background_slowness,
        quadrature_order=quadrature_order,
        symbol_floor=tolerances.symbol_floor,
    )


def _frequency(scene, frequency):
    if isinstance(frequency, brillouin.FrequencySpec):
        return frequency
    return scene.frequency(int(frequency))


def assemble_system(scene, frequency, table=None):
    """Fills the matrices of one frequency.

    Args:
        scene: A `Scene`.
        frequency: A `FrequencySpec` of the scene or its 1-based index.
        table: Optional `GreenTable`. A new one is made when omitted.

    Returns:
        A `FrequencySystem`.
    """
    frequency = _frequency(scene, frequency)
    table = table or make_table(scene)
    defects = scene.defect_array
    receivers = scene.receiver_array
    source_sites, amplitudes = scene.sources_for(frequency.index)
    return FrequencySystem(
        frequency=frequency,
        A=table.block(defects, defects, frequency),
        C=table.block(receivers, defects, frequency),
        a_src=table.block(defects, source_sites, frequency),
        c_src=table.block(receivers, source_sites, frequency),
        amplitudes=amplitudes,
    )


def assemble_systems(scene, table=None, threads=None):
    """`assemble_system` for every frequency, in scene order."""
    table = table or make_table(scene)
    table.prefetch(scene.frequencies, threads=threads)
    return utils.map_in_threads(
        lambda f: assemble_system(scene, f, table), scene.frequencies, threads
    )


def gram_matrix(fsys, defects):
    """Returns `G_j = I - w_j^2 A_j diag(s)`."""
    s = scene_module.as_defect_values(defects, fsys.num_defects)
    return np.eye(fsys.num_defects) - fsys.omega_sq * fsys.A * s[np.newaxis, :]


def admissibility_ratio(G):
    """Smallest over largest singular value of `G`."""
    if G.size == 0:
        return 1.0
    singular_values = scipy.linalg.svdvals(G)
    largest = singular_values[0]
    if largest == 0:
        return 0.0
    return float(singular_values[-1] / largest)


def is_admissible(systems, defects, tolerances=None):
    """Tests the invertibility of every `G_j`.

    Args:
        systems: List of `FrequencySystem`.
        defects: A `DefectVector` or a sequence of complex values.
        tolerances: Optional `Tolerances`; `adm_tol` is used.

    Returns:
        List of `Admissibility` named tuples `(freq_index, admissible, ratio)`.
    """
    tolerances = config_module.get_tolerances(tolerances)
    results = []
    for fsys in utils.to_list(systems):
        ratio = admissibility_ratio(gram_matrix(fsys, defects))
        results.append(
            Admissibility(fsys.freq_index, ratio > tolerances.adm_tol, ratio)
        )
    return results


def interior_amplitudes(fsys, defects, tolerances=None):
    """Solves `G_j w_j = sum_m a_m^j F_m^j` for the candidate-site amplitudes.

    Raises:
        NotAdmissible: if `G_j` is numerically singular.
    """
    tolerances = config_module.get_tolerances(tolerances)
    G = gram_matrix(fsys, defects)
    ratio = admissibility_ratio(G)
    if not ratio > tolerances.adm_tol:
        raise errors.NotAdmissible(
            f"The defect is not admissible at frequency {fsys.freq_index}: "
            f"singular value ratio {ratio:.3e} <= {tolerances.adm_tol:.1e}.",
            freq_index=fsys.freq_index,
        )
    if G.size == 0:
        return np.zeros(0, dtype=complex), ratio
    return scipy.linalg.solve(G, fsys.interior_source), ratio


def push_through_residual(fsys, defects):
    """Relative mismatch of `(I - UV)^-1 U` and `U (I - VU)^-1`.

    `U = w_j^2 diag(s)` and `V = A_j`. Both sides are equal whenever `G_j` is
    invertible; the recovery of the defect from a manifold point relies on it.
    """
    s = scene_module.as_defect_values(defects, fsys.num_defects)
    U = fsys.omega_sq * np.diag(s)
    V = fsys.A
    eye = np.eye(fsys.num_defects)
    lhs = scipy.linalg.solve(eye - U @ V, U)
    rhs = U @ scipy.linalg.inv(eye - V @ U)
    scale = max(np.linalg.norm(lhs), np.finfo(float).tiny)
    return float(np.linalg.norm(lhs - rhs) / scale)


def unperturbed_field(scene, frequency, sites, table=None):
    """`sum_m F_m^j a^j_{m - p}` at each of `sites`."""
    frequency = _frequency(scene, frequency)
    table = table or make_table(scene)
    source_sites, amplitudes = scene.sources_for(frequency.index)
    sites = scene.site_array(sites)
    return table.block(sites, source_sites, frequency) @ amplitudes


class ForwardSolution(object):
    """Amplitudes `U_p^j` of every frequency at a list of query sites.

    Args:
        query_sites: Integer array of shape `(P, d)`.
        amplitudes: Dictionary, frequency index to complex `(P,)` array.
        interior: Dictionary, frequency index to the candidate-site
            amplitudes `w_j`.
        ratios: Dictionary, frequency index to the singular value ratio of
            `G_j`.
    """

    def __init__(self, query_sites, amplitudes, interior, ratios):
        self.query_sites = query_sites
        self.amplitudes = amplitudes
        self.interior = interior
        self.ratios = ratios

    @property
    def admissible(self):
        # Only admissible solutions are ever constructed.
        return {j: True for j in self.ratios}

    def to_measurement(self):
        return scene_module.Measurement(self.amplitudes)

    def get_config(self):
        return {
            "query_sites": self.query_sites.tolist(),
            "frequencies": [
                {
                    "freq_index": j,
                    "admissible": True,
                    "singular_value_ratio": self.ratios[j],
                    "amplitudes": [
                        utils.complex_to_pair(v) for v in self.amplitudes[j]
                    ],
                }
                for j in sorted(self.amplitudes)
            ],
        }


def solve_forward(
    scene,
    defects=None,
    query_sites=None,
    table=None,
    tolerances=None,
    threads=None,
):
    """Solves the time-harmonic problem of every frequency.

    Args:
        scene: A `Scene`.
        defects: Optional `DefectVector` or sequence of complex values.
            Defaults to `scene.defects`, or no defect at all.
        query_sites: Optional list of sites. Defaults to the receivers, in
            which case the result is the model prediction of `u_j`.
        table: Optional `GreenTable`.
        tolerances: Optional `Tolerances`.
        threads: Optional integer, the worker threads over frequencies.

    Returns:
        A `ForwardSolution`.

    Raises:
        NotAdmissible: if some `G_j` is numerically singular.
    """
    tolerances = config_module.get_tolerances(tolerances)
    table = table or make_table(scene, tolerances=tolerances)
    if defects is None:
        defects = scene.defects
    s = scene_module.as_defect_values(defects, scene.num_defects)
    if query_sites is None:
        query_sites = scene.receivers
    query = scene.site_array(query_sites)
    table.prefetch(scene.frequencies, threads=threads)

    def solve_one(frequency):
        fsys = assemble_system(scene, frequency, table)
        w, ratio = interior_amplitudes(fsys, s, tolerances)
        source_sites, amplitudes = scene.sources_for(frequency.index)
        scattered = table.block(query, scene.defect_array, frequency) @ (s * w)
        incident = table.block(query, source_sites, frequency) @ amplitudes
        return w, ratio, fsys.omega_sq * scattered + incident

    results = utils.map_in_threads(solve_one, scene.frequencies, threads)
    amplitudes, interior, ratios = {}, {}, {}
    for frequency, (w, ratio, values) in zip(scene.frequencies, results):
        amplitudes[frequency.index] = values
        interior[frequency.index] = w
        ratios[frequency.index] = ratio
    return ForwardSolution(query, amplitudes, interior, ratios)


def receiver_misfit(scene, defects, measurement, table=None, tolerances=None):
    """Largest relative receiver misfit of a defect over the frequencies.

    Returns:
        Float, `max_j |u_j(defects) - u_j| / max(|u_j|, tiny)`.
    """
    solution = solve_forward(scene, defects, table=table, tolerances=tolerances)
    worst = 0.0
    for j, predicted in solution.amplitudes.items():
        target = np.asarray(measurement[j])
        scale = max(np.linalg.norm(target), np.finfo(float).tiny)
        worst = max(worst, float(np.linalg.norm(predicted - target) / scale))
    return worst


def field_grid(scene, defects=None, radius=10, freq_index=1, table=None):
    """Amplitudes of one frequency on the box `[-radius, radius]^d`.

    Returns:
        Tuple `(sites, values)`: integer `(P, d)` array and complex `(P,)`
        array, sites in lexicographic order.
    """
    sites = scene_module.box_sites(
        [-radius] * scene.dimension, [radius] * scene.dimension
    )
    scene.frequency(freq_index)  # Validates the index.
    solution = solve_forward(scene, defects, query_sites=sites, table=table)
    return solution.query_sites, solution.amplitudes[freq_index]


def write_grid(fname, sites, values):
    """Writes `x [y [z]] re im` rows, one per site."""
    lines = []
    for site, value in zip(np.asarray(sites), np.asarray(values)):
        fields = [str(int(n)) for n in site]
        fields += [utils.format_float(value.real), utils.format_float(value.imag)]
        lines.append(" ".join(fields))
    return utils.write_text(fname, "\n".join(lines) + "\n")
