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
"""Problem instances: lattice, sources, candidate defects and receivers.

A scene document is a JSON object with the keys `dimension`,
`background_slowness`, `frequencies`, `sources`, `defect_sites`, `receivers`
and, optionally, `measurements` and `defects`. Complex numbers are written as
`[re, im]` pairs and sites as integer lists of length `dimension`.
"""

import itertools
import json

import numpy as np

from lattice_defects import errors
from lattice_defects import utils
from lattice_defects.engine import brillouin

DOCUMENT_KEYS = (
    "dimension",
    "background_slowness",
    "frequencies",
    "sources",
    "defect_sites",
    "receivers",
)
OPTIONAL_KEYS = ("measurements", "defects")


def _site(site):
    return tuple(int(n) for n in site)


class Source(object):
    """A point source `F_m^j` of one frequency.

    Args:
        freq_index: Integer, 1-based index of the frequency of the source.
        site: Sequence of integers, the lattice site `m`.
        amplitude: Complex, the constant amplitude.
    """

    def __init__(self, freq_index, site, amplitude):
        self.freq_index = int(freq_index)
        self.site = _site(site)
        self.amplitude = complex(amplitude)

    def get_config(self):
        return {
            "freq_index": self.freq_index,
            "site": list(self.site),
            "amplitude": utils.complex_to_pair(self.amplitude),
        }

    @classmethod
    def from_config(cls, config):
        return cls(
            freq_index=_parse_int(config["freq_index"]),
            site=[_parse_int(n) for n in config["site"]],
            amplitude=utils.pair_to_complex(config["amplitude"]),
        )

    def __eq__(self, other):
        return isinstance(other, Source) and self.get_config() == other.get_config()

    def __repr__(self):
        return (
            f"Source(freq_index={self.freq_index}, site={self.site}, "
            f"amplitude={self.amplitude})"
        )


class DefectVector(object):
    """Perturbations `s_n^2` of the squared slowness on the candidate sites.

    A zero entry marks a candidate site that carries no defect.

    Args:
        values: Sequence of complex numbers, ordered as the scene's
            `defect_sites`.
    """

    def __init__(self, values):
        self.values = np.array(values, dtype=complex).reshape(-1)
        self.values.setflags(write=False)

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size, dtype=complex))

    def __len__(self):
        return len(self.values)

    def get_config(self):
        return [utils.complex_to_pair(v) for v in self.values]

    @classmethod
    def from_config(cls, config):
        return cls([utils.pair_to_complex(v) for v in config])

    def __eq__(self, other):
        return isinstance(other, DefectVector) and np.array_equal(
            self.values, other.values
        )

    def __repr__(self):
        return f"DefectVector({self.values.tolist()})"


def as_defect_values(defects, size):
    """Complex array of `size` entries from a `DefectVector` or a sequence."""
    if defects is None:
        values = np.zeros(size, dtype=complex)
    elif isinstance(defects, DefectVector):
        values = np.asarray(defects.values)
    else:
        values = np.asarray(defects, dtype=complex).reshape(-1)
    if len(values) != size:
        raise ValueError(
            f"Expected {size} defect values, one per candidate site, found "
            f"{len(values)}."
        )
    return values


class Measurement(object):
    """Amplitudes `u_j` recorded at the receivers, one vector per frequency.

    Args:
        values: Dictionary mapping the 1-based frequency index to a sequence
            of complex amplitudes ordered as the scene's `receivers`.
    """

    def __init__(self, values):
        self.values = {
            int(j): np.array(v, dtype=complex).reshape(-1)
            for j, v in values.items()
        }

    def __getitem__(self, freq_index):
        return self.values[freq_index]

    def get_config(self):
        return [
            {
                "freq_index": j,
                "values": [utils.complex_to_pair(v) for v in self.values[j]],
            }
            for j in sorted(self.values)
        ]

    @classmethod
    def from_config(cls, config):
        values = {}
        for entry in config:
            values[int(entry["freq_index"])] = [
                utils.pair_to_complex(v) for v in entry["values"]
            ]
        return cls(values)

    def __eq__(self, other):
        if not isinstance(other, Measurement):
            return False
        if set(self.values) != set(other.values):
            return False
        return all(
            np.array_equal(self.values[j], other.values[j]) for j in self.values
        )


class Scene(object):
    """The full statement of a forward or inverse problem.

    Args:
        dimension: Integer >= 1, the lattice dimension `d`.
        background_slowness: Positive float, the uniform slowness `s`.
        frequencies: List of `FrequencySpec` or complex numbers. They are
            re-indexed from 1 in the given order.
        sources: List of `Source`.
        defect_sites: List of sites, the candidate footprint `N`.
        receivers: List of sites, the receiver set `R`.
        measurements: Optional `Measurement` recorded at the receivers.
        defects: Optional `DefectVector`, the defect configuration used by
            forward computations.
    """

    def __init__(
        self,
        dimension,
        background_slowness,
        frequencies,
        sources,
        defect_sites,
        receivers,
        measurements=None,
        defects=None,
    ):
        self.dimension = dimension
        self.background_slowness = background_slowness
        specs = []
        for index, frequency in enumerate(utils.to_list(frequencies), start=1):
            if isinstance(frequency, brillouin.FrequencySpec):
                specs.append(
                    brillouin.FrequencySpec(
                        frequency.omega, index=index, epsilon=frequency.epsilon
                    )
                )
            else:
                specs.append(brillouin.FrequencySpec(frequency, index=index))
        self.frequencies = tuple(specs)
        self.sources = tuple(sources)
        self.defect_sites = tuple(_site(site) for site in defect_sites)
        self.receivers = tuple(_site(site) for site in receivers)
        self.measurements = measurements
        if defects is not None and not isinstance(defects, DefectVector):
            defects = DefectVector(defects)
        self.defects = defects

    @property
    def num_defects(self):
        return len(self.defect_sites)

    @property
    def num_receivers(self):
        return len(self.receivers)

    @property
    def num_frequencies(self):
        return len(self.frequencies)

    def frequency(self, freq_index):
        if not 1 <= freq_index <= len(self.frequencies):
            raise ValueError(
                f"Frequency index {freq_index} out of range "
                f"[1, {len(self.frequencies)}]."
            )
        return self.frequencies[freq_index - 1]

    def site_array(self, sites):
        return np.asarray(sites, dtype=int).reshape(-1, self.dimension)

    @property
    def defect_array(self):
        return self.site_array(self.defect_sites)

    @property
    def receiver_array(self):
        return self.site_array(self.receivers)

    def sources_for(self, freq_index):
        """Returns `(sites, amplitudes)` of the sources of one frequency."""
        chosen = [s for s in self.sources if s.freq_index == freq_index]
        sites = self.site_array([s.site for s in chosen])
        amplitudes = np.asarray([s.amplitude for s in chosen], dtype=complex)
        return sites, amplitudes

    def max_coordinate(self):
        """Largest `|n_i|` over every site of the scene."""
        sites = list(self.defect_sites) + list(self.receivers)
        sites += [s.site for s in self.sources]
        if not sites:
            return 0
        return int(np.max(np.abs(np.asarray(sites, dtype=int))))

    def replace(self, **changes):
        """Returns a new `Scene` with some fields replaced."""
        fields = {
            "dimension": self.dimension,
            "background_slowness": self.background_slowness,
            "frequencies": list(self.frequencies),
            "sources": list(self.sources),
            "defect_sites": list(self.defect_sites),
            "receivers": list(self.receivers),
            "measurements": self.measurements,
            "defects": self.defects,
        }
        fields.update(changes)
        return Scene(**fields)

    def get_config(self):
        config = {
            "dimension": self.dimension,
            "background_slowness": self.background_slowness,
            "frequencies": [f.get_config() for f in self.frequencies],
            "sources": [s.get_config() for s in self.sources],
            "defect_sites": [list(site) for site in self.defect_sites],
            "receivers": [list(site) for site in self.receivers],
        }
        if self.measurements is not None:
            config["measurements"] = self.measurements.get_config()
        if self.defects is not None:
            config["defects"] = self.defects.get_config()
        return config

    @classmethod
    def from_config(cls, config):
        missing = [key for key in DOCUMENT_KEYS if key not in config]
        if missing:
            raise errors.ParseError("Missing key", field=missing[0])
        unknown = set(config) - set(DOCUMENT_KEYS) - set(OPTIONAL_KEYS)
        if unknown:
            raise errors.ParseError("Unknown key", field=sorted(unknown)[0])

        def parse(field, fn):
            try:
                return fn(config[field])
            except errors.ParseError:
                raise
            except (KeyError, TypeError, ValueError) as e:
                raise errors.ParseError(f"Malformed value: {e}", field=field)

        measurements = None
        if config.get("measurements") is not None:
            measurements = parse("measurements", Measurement.from_config)
        defects = None
        if config.get("defects") is not None:
            defects = parse("defects", DefectVector.from_config)
        return cls(
            dimension=parse("dimension", _parse_int),
            background_slowness=parse("background_slowness", float),
            frequencies=parse(
                "frequencies",
                lambda v: [
                    brillouin.FrequencySpec.from_config(f, index=i)
                    for i, f in enumerate(v, start=1)
                ],
            ),
            sources=parse("sources", lambda v: [Source.from_config(s) for s in v]),
            defect_sites=parse("defect_sites", _parse_sites),
            receivers=parse("receivers", _parse_sites),
            measurements=measurements,
            defects=defects,
        )

    def __eq__(self, other):
        return isinstance(other, Scene) and self.get_config() == other.get_config()


def _parse_int(value):
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"expected an integer, found {value}")
    return int(value)


def _parse_sites(value):
    return [[_parse_int(n) for n in site] for site in value]


def _duplicates(items):
    seen = set()
    duplicates = []
    for item in items:
        if item in seen and item not in duplicates:
            duplicates.append(item)
        seen.add(item)
    return sorted(duplicates)


def validate_scene(scene):
    """Checks the standing assumptions of the model.

    Args:
        scene: A `Scene`.

    Returns:
        A sorted list of strings, one per violation, each starting with the
        name of the offending field. Empty iff the scene is valid.
    """
    violations = set()
    d = scene.dimension
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        violations.add(f"dimension: must be a positive integer, found {d}")
        return sorted(violations)

    s = scene.background_slowness
    if not isinstance(s, (int, float, np.floating)) or not s > 0:
        violations.add(f"background_slowness: must be a positive real, found {s}")

    M = scene.num_frequencies
    if M == 0:
        violations.add("frequencies: at least one frequency is required")
    values = [f.value for f in scene.frequencies]
    for a, b in itertools.combinations(values, 2):
        if a == b:
            violations.add(f"frequencies: frequencies not pairwise distinct ({a})")
    for f in scene.frequencies:
        if not np.isfinite(f.value):
            violations.add(f"frequencies: non-finite frequency {f.value}")
        elif f.in_passband(d):
            violations.add(
                f"frequencies: frequency in passband, omega^2 = {f.omega_sq} "
                f"lies in [0, {4 * d}]; supply an epsilon shift"
            )

    for source in scene.sources:
        if not 1 <= source.freq_index <= M:
            violations.add(
                f"sources: unknown freq_index {source.freq_index} at site "
                f"{list(source.site)}"
            )
        if len(source.site) != d:
            violations.add(
                f"sources: site {list(source.site)} does not have length {d}"
            )
        if source.amplitude == 0:
            violations.add(
                f"sources: zero source amplitude at site {list(source.site)} "
                f"(frequency {source.freq_index})"
            )
    pairs = [(s.freq_index, s.site) for s in scene.sources]
    for j, site in _duplicates(pairs):
        violations.add(
            f"sources: duplicate source site {list(site)} (frequency {j})"
        )

    for field, sites in (
        ("defect_sites", scene.defect_sites),
        ("receivers", scene.receivers),
    ):
        if not sites:
            violations.add(f"{field}: at least one site is required")
        for site in sites:
            if len(site) != d:
                violations.add(
                    f"{field}: site {list(site)} does not have length {d}"
                )
        for site in _duplicates(sites):
            violations.add(f"{field}: duplicate site {list(site)}")

    if scene.defects is not None and len(scene.defects) != scene.num_defects:
        violations.add(
            f"defects: expected {scene.num_defects} values, one per defect site, "
            f"found {len(scene.defects)}"
        )
    if scene.measurements is not None:
        indices = set(scene.measurements.values)
        for j in range(1, M + 1):
            if j not in indices:
                violations.add(f"measurements: no measurement for frequency {j}")
        for j, vector in scene.measurements.values.items():
            if not 1 <= j <= M:
                violations.add(f"measurements: unknown freq_index {j}")
            elif len(vector) != scene.num_receivers:
                violations.add(
                    f"measurements: frequency {j} has {len(vector)} values, "
                    f"expected {scene.num_receivers}"
                )
    return sorted(violations)


def check_scene(scene):
    """Raises `ValidationError` unless `validate_scene` is empty."""
    violations = validate_scene(scene)
    if violations:
        raise errors.ValidationError(violations)
    return scene


def load_scene(text, validate=True):
    """Parses a scene document.

    Args:
        text: String, the JSON document.
        validate: Boolean, whether to run `validate_scene`. Defaults to True.

    Returns:
        A `Scene`.
    """
    try:
        config = json.loads(text)
    except json.JSONDecodeError as e:
        raise errors.ParseError(e.msg, line=e.lineno)
    if not isinstance(config, dict):
        raise errors.ParseError("A scene document must be a JSON object", line=1)
    scene = Scene.from_config(config)
    if validate:
        check_scene(scene)
    return scene


def save_scene(scene):
    """Serializes a scene to its JSON document."""
    return json.dumps(scene.get_config(), indent=2) + "\n"


def read_scene(fname, validate=True):
    return load_scene(utils.read_text(fname), validate=validate)


def write_scene(fname, scene):
    return utils.write_text(fname, save_scene(scene))


def box_sites(lower, upper):
    """All the sites of the box `[lower_i, upper_i]^d`, in lexicographic order."""
    lower = [int(n) for n in lower]
    upper = [int(n) for n in upper]
    if len(lower) != len(upper):
        raise ValueError("`lower` and `upper` should have the same length.")
    ranges = [range(lo, hi + 1) for lo, hi in zip(lower, upper)]
    return [tuple(site) for site in itertools.product(*ranges)]


def ring_sites(center, radius):
    """The sites at sup-norm distance exactly `radius` from `center`."""
    center = np.asarray(center, dtype=int)
    radius = int(radius)
    if radius < 1:
        raise ValueError(f"`radius` should be >= 1. Received: {radius}")
    d = len(center)
    sites = []
    for offset in itertools.product(range(-radius, radius + 1), repeat=d):
        if max(abs(n) for n in offset) == radius:
            sites.append(tuple(int(n) for n in center + np.asarray(offset)))
    return sites
