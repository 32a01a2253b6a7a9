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
"""Lattice symbol and Green coefficients over the Brillouin zone.

The Green coefficient of offset `n` at frequency `w_j` is the zone average

    a_n = (2 pi)^-d  int_[-pi, pi]^d  exp(i n.k) / A_j(k) dk,
    A_j(k) = 2d - (w_j s)^2 - 2 sum_i cos(k_i).

The average is taken with the equal-weight periodic (trapezoid) rule. For a
frequency off the passband the integrand is analytic and periodic, so the
rule converges geometrically. All the coefficients of one frequency are
obtained at once with an inverse FFT of `1 / A_j` sampled on the grid.
"""

import threading

import numpy as np
import tensorflow as tf

from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects import utils


class FrequencySpec(object):
    """One time-harmonic frequency of a scene.

    Args:
        omega: Complex. The angular frequency, possibly `alpha - i beta` with
            `beta >= 0` for attenuated sources.
        index: Integer, 1-based position of the frequency in its scene.
        epsilon: Non-negative float. Extra shift `omega - i epsilon` towards
            the lower half plane, used to reach passband frequencies.
    """

    def __init__(self, omega, index=1, epsilon=0.0):
        self.omega = complex(omega)
        self.index = int(index)
        self.epsilon = float(epsilon)
        if self.index < 1:
            raise ValueError(f"`index` should be >= 1. Received: {index}")
        if self.epsilon < 0:
            raise ValueError(f"`epsilon` should be >= 0. Received: {epsilon}")

    @property
    def value(self):
        """The effective complex frequency."""
        return self.omega - 1j * self.epsilon

    @property
    def omega_sq(self):
        return self.value**2

    def in_passband(self, dimension):
        """Whether `omega^2` lies in the real interval `[0, 4d]`."""
        w2 = self.omega_sq
        scale = max(1.0, abs(w2))
        if abs(w2.imag) > 1e-14 * scale:
            return False
        return -1e-14 * scale <= w2.real <= 4 * dimension + 1e-14 * scale

    def get_config(self):
        config = {"omega": utils.complex_to_pair(self.omega)}
        if self.epsilon:
            config["epsilon"] = self.epsilon
        return config

    @classmethod
    def from_config(cls, config, index=1):
        return cls(
            omega=utils.pair_to_complex(config["omega"]),
            index=index,
            epsilon=config.get("epsilon", 0.0),
        )

    def __eq__(self, other):
        if not isinstance(other, FrequencySpec):
            return False
        return (
            self.omega == other.omega
            and self.index == other.index
            and self.epsilon == other.epsilon
        )

    def __hash__(self):
        return hash((self.omega, self.index, self.epsilon))

    def __repr__(self):
        return f"FrequencySpec(omega={self.value}, index={self.index})"


def symbol_A(k, frequency, background_slowness, dimension=None):
    """Evaluates `A_j(k) = 2d - (w_j s)^2 - 2 sum_i cos(k_i)`.

    Args:
        k: Array-like of shape `(..., d)`, wave vectors in `[-pi, pi]^d`.
        frequency: A `FrequencySpec`.
        background_slowness: Float, the uniform slowness `s`.
        dimension: Optional integer, checked against the last axis of `k`.

    Returns:
        Complex scalar or array of shape `k.shape[:-1]`.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = k.reshape(1)
    d = k.shape[-1]
    if dimension is not None and d != dimension:
        raise ValueError(
            f"Expected wave vectors of length {dimension}, found length {d}."
        )
    ws = frequency.value * background_slowness
    value = 2 * d - ws**2 - 2 * np.cos(k).sum(axis=-1)
    if np.ndim(value) == 0:
        return complex(value)
    return value


def zone_nodes(order):
    """Nodes `-pi + 2 pi l / order` of the periodic rule on one axis."""
    return -np.pi + 2 * np.pi * np.arange(order) / order


def symbol_grid(frequency, background_slowness, dimension, order):
    """`A_j` sampled on the tensor-product grid, shape `(order,) * d`."""
    cosines = 2 * np.cos(zone_nodes(order))
    total = np.zeros((1,) * dimension)
    for axis in range(dimension):
        shape = [1] * dimension
        shape[axis] = order
        total = total + cosines.reshape(shape)
    ws = frequency.value * background_slowness
    return (2 * dimension - ws**2) - total


def raw_quadrature(offset, frequency, background_slowness, dimension, order):
    """Direct equal-weight sum of `exp(i n.k) / A_j(k)` over the grid.

    This is the same rule as `GreenTable` evaluates with an FFT; it is kept
    as an independent check of the cached values.
    """
    offset = np.asarray(offset, dtype=int).reshape(-1)
    if len(offset) != dimension:
        raise ValueError(
            f"Expected an offset of length {dimension}, found: {offset.tolist()}"
        )
    nodes = zone_nodes(order)
    phase = np.zeros((1,) * dimension)
    for axis in range(dimension):
        shape = [1] * dimension
        shape[axis] = order
        phase = phase + offset[axis] * nodes.reshape(shape)
    A = symbol_grid(frequency, background_slowness, dimension, order)
    return complex(np.mean(np.exp(1j * phase) / A))


def closed_form_1d(offset, c):
    """One-dimensional Green coefficient in closed form.

    For `d = 1` and `c = 2 - w^2 s^2` off `[-2, 2]`, `a_n = r^|n| / (c - 2r)`
    where `r` is the root of `r^2 - c r + 1 = 0` inside the unit disk.
    """
    c = complex(c)
    root = np.sqrt(c * c - 4)
    r = (c - root) / 2
    if abs(r) >= 1:
        r = (c + root) / 2
    return complex(r ** abs(int(offset)) / (c - 2 * r))


def canonical_offset(offset):
    """The sign-free key of an offset; `a_n` is even in every component."""
    return tuple(abs(int(n)) for n in offset)


class GreenTable(object):
    """Cache of the Green coefficients `a_n^j` of one lattice.

    Coefficients are keyed by the frequency index `j` and the canonical
    (non-negative) offset, which makes `a_n` exactly invariant under
    component sign flips. The first lookup at a frequency evaluates the whole
    coefficient grid of that frequency with one inverse FFT.

    Args:
        dimension: Integer, the lattice dimension `d`.
        background_slowness: Float, the uniform slowness `s`.
        quadrature_order: Optional integer >= 4, the points per axis.
            Defaults to `config.default_quadrature_order(dimension)`.
        symbol_floor: Float. Evaluation is refused when the smallest sampled
            `|A_j|` falls below it.
    """

    def __init__(
        self,
        dimension,
        background_slowness,
        quadrature_order=None,
        symbol_floor=1e-6,
    ):
        self.dimension = int(dimension)
        self.background_slowness = float(background_slowness)
        if quadrature_order is None:
            quadrature_order = config_module.default_quadrature_order(
                self.dimension
            )
        if quadrature_order < 4:
            raise ValueError(
                f"`quadrature_order` should be >= 4. Received: {quadrature_order}"
            )
        # An even order keeps the sign factor of the shifted grid periodic.
        self.quadrature_order = int(quadrature_order) + int(quadrature_order) % 2
        self.symbol_floor = symbol_floor

        # (j, canonical offset) -> complex
        self.entries = {}
        # j -> coefficient grid
        self._grids = {}
        # j -> FrequencySpec the grid was computed for
        self._frequencies = {}
        self._lock = threading.Lock()
        self._warned_resolution = False

    def _coefficient_grid(self, frequency):
        grid = self._grids.get(frequency.index)
        if grid is not None:
            self._check_frequency(frequency)
            return grid

        order = self.quadrature_order
        A = symbol_grid(
            frequency, self.background_slowness, self.dimension, order
        )
        smallest = float(np.min(np.abs(A)))
        if smallest < self.symbol_floor:
            raise errors.NearSingularSymbol(
                f"min |A_j| = {smallest:.3e} on the quadrature grid of frequency "
                f"{frequency.index} (omega = {frequency.value}) is below the "
                f"floor {self.symbol_floor:.1e}. omega^2 is too close to the "
                f"passband [0, {4 * self.dimension}]; supply an `epsilon`."
            )
        grid = np.fft.ifftn(1.0 / A)
        sign = (-1.0) ** np.arange(order)
        for axis in range(self.dimension):
            shape = [1] * self.dimension
            shape[axis] = order
            grid = grid * sign.reshape(shape)
        if not np.any(np.imag(A)):
            # A real even symbol has real coefficients.
            grid = grid.real.astype(complex)

        with self._lock:
            if frequency.index not in self._grids:
                tf.get_logger().info(
                    f"Green grid of frequency {frequency.index} evaluated "
                    f"(order {order}, min |A_j| = {smallest:.3e})."
                )
                self._grids[frequency.index] = grid
                self._frequencies[frequency.index] = frequency
            grid = self._grids[frequency.index]
        self._check_frequency(frequency)
        return grid

    def _check_frequency(self, frequency):
        known = self._frequencies.get(frequency.index)
        if known is not None and known.value != frequency.value:
            raise ValueError(
                f"Frequency index {frequency.index} was cached for omega = "
                f"{known.value}, but is now requested for omega = "
                f"{frequency.value}."
            )

    def _check_resolution(self, keys):
        if not len(keys):
            return
        largest = int(np.max(keys))
        half = self.quadrature_order // 2
        if largest > half:
            raise errors.UnresolvedOffset(
                f"Offset component {largest} is aliased by quadrature order "
                f"{self.quadrature_order}; use an order of at least {2 * largest}."
            )
        if largest == half and not self._warned_resolution:
            self._warned_resolution = True
            tf.get_logger().warning(
                f"Offset component {largest} is not resolved by "
                f"quadrature order {self.quadrature_order}; increase the order."
            )

    def prefetch(self, frequencies, threads=None):
        """Evaluates the coefficient grids of several frequencies."""
        utils.map_in_threads(self._coefficient_grid, frequencies, threads)

    def coeff(self, offset, frequency):
        """Returns the Green coefficient `a_n^j` of one offset.

        Args:
            offset: Sequence of `d` integers.
            frequency: A `FrequencySpec`.

        Returns:
            Complex.
        """
        return complex(self.coeffs(np.asarray([offset]), frequency)[0])

    def coeffs(self, offsets, frequency):
        """Vectorized `coeff`.

        Args:
            offsets: Integer array of shape `(..., d)`.
            frequency: A `FrequencySpec`.

        Returns:
            Complex array of shape `offsets.shape[:-1]`.

        Raises:
            UnresolvedOffset: if an offset component exceeds half the
                quadrature order.
        """
        offsets = np.asarray(offsets, dtype=int)
        if offsets.shape[-1] != self.dimension:
            raise ValueError(
                f"Expected offsets of length {self.dimension}, found shape "
                f"{offsets.shape}."
            )
        out_shape = offsets.shape[:-1]
        keys = np.abs(offsets.reshape(-1, self.dimension))
        if not len(keys):
            return np.zeros(out_shape, dtype=complex)
        unique, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)

        j = frequency.index
        values = np.empty(len(unique), dtype=complex)
        missing = []
        for i, row in enumerate(unique):
            value = self.entries.get((j, tuple(int(n) for n in row)))
            if value is None:
                missing.append(i)
            else:
                values[i] = value
        if missing:
            rows = unique[missing]
            self._check_resolution(rows)
            grid = self._coefficient_grid(frequency)
            computed = grid[tuple((rows % self.quadrature_order).T)]
            values[missing] = computed
            with self._lock:
                for row, value in zip(rows, computed):
                    key = (j, tuple(int(n) for n in row))
                    self.entries.setdefault(key, complex(value))
        return values[inverse].reshape(out_shape)

    def block(self, rows, cols, frequency):
        """Matrix `M[p, q] = a^j_{cols[q] - rows[p]}`.

        Args:
            rows: Integer array of shape `(P, d)`, sites indexing the rows.
            cols: Integer array of shape `(Q, d)`, sites indexing the columns.
            frequency: A `FrequencySpec`.

        Returns:
            Complex array of shape `(P, Q)`.
        """
        rows = np.asarray(rows, dtype=int).reshape(-1, self.dimension)
        cols = np.asarray(cols, dtype=int).reshape(-1, self.dimension)
        offsets = cols[np.newaxis, :, :] - rows[:, np.newaxis, :]
        return self.coeffs(offsets, frequency)

    def verify_neighbor_identity(self, offset, frequency):
        """Residuals of the nearest-neighbour identity of the coefficients.

        The coefficients satisfy `sum_{n' ~ n} a_n' = c a_n -/+ delta_n0` with
        `c = 2d - w^2 s^2` for one of the two signs.

        Returns:
            Tuple `(residual_plus, residual_minus)`.
        """
        offset = np.asarray(offset, dtype=int).reshape(-1)
        eye = np.eye(self.dimension, dtype=int)
        neighbors = np.concatenate([offset + eye, offset - eye])
        total = np.sum(self.coeffs(neighbors, frequency))
        c = 2 * self.dimension - frequency.omega_sq * self.background_slowness**2
        center = c * self.coeff(offset, frequency)
        delta = 1.0 if not np.any(offset) else 0.0
        return (
            float(abs(total - center - delta)),
            float(abs(total - center + delta)),
        )

    def save(self, fname):
        """Writes the cached entries as `j n_1 ... n_d re im` lines."""
        lines = [
            f"# dimension {self.dimension} "
            f"background_slowness {utils.format_float(self.background_slowness)} "
            f"quadrature_order {self.quadrature_order}"
        ]
        for (j, key), value in sorted(self.entries.items()):
            fields = [str(j)] + [str(n) for n in key]
            fields += [
                utils.format_float(value.real),
                utils.format_float(value.imag),
            ]
            lines.append(" ".join(fields))
        return utils.write_text(fname, "\n".join(lines) + "\n")

    def load(self, fname):
        """Adds the entries of a file written by `save` to the cache."""
        text = utils.read_text(fname)
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != self.dimension + 3:
                raise errors.ParseError(
                    f"Expected {self.dimension + 3} fields, found {len(fields)}",
                    line=number,
                )
            try:
                j = int(fields[0])
                key = canonical_offset(int(n) for n in fields[1:-2])
                value = complex(float(fields[-2]), float(fields[-1]))
            except ValueError as e:
                raise errors.ParseError(str(e), line=number)
            self.entries[(j, key)] = value
        return self


def green_coeff(
    offset,
    frequency,
    dimension,
    background_slowness,
    quadrature_order=None,
    table=None,
):
    """Functional form of `GreenTable.coeff`.

    Args:
        offset: Sequence of `d` integers.
        frequency: A `FrequencySpec`.
        dimension: Integer, the lattice dimension.
        background_slowness: Float.
        quadrature_order: Optional integer, points per axis.
        table: Optional `GreenTable` to read from and cache into.

    Returns:
        Complex.
    """
    if table is None:
        table = GreenTable(dimension, background_slowness, quadrature_order)
    return table.coeff(offset, frequency)
