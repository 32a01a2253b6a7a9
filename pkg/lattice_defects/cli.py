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
"""The `lattice-defects` command line front end.

Exit status 0 means the analysis completed, even when it concluded that no
defect explains the data. Input errors exit with 1 and numerical failures
with 2; both write a JSON error document to stderr.
"""

import argparse
import json
import sys

import numpy as np
import tensorflow as tf

from lattice_defects import config as config_module
from lattice_defects import errors
from lattice_defects import utils
from lattice_defects.engine import cloak
from lattice_defects.engine import forward
from lattice_defects.engine import inverse
from lattice_defects.engine import report
from lattice_defects.engine import scene as scene_module
from lattice_defects.engine import truncation

COMMANDS = ("green", "forward", "oracle", "invert", "cloak", "field")

# The operation reported in the error document of each command.
OPERATIONS = {
    "green": "brillouin.green_coeff",
    "forward": "forward.solve_forward",
    "oracle": "forward.brute_force_oracle",
    "invert": "inverse.recover",
    "cloak": "cloak.design_cloak",
    "field": "forward.field_grid",
}

DEFAULT_RADIUS = {"oracle": 40, "field": 10}

_INTEGER_TOLERANCES = ("max_iter", "num_starts")


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise errors.InputError(message)


class RunConfig(object):
    """Everything a command needs besides the scene document.

    Args:
        command: One of `COMMANDS`.
        scene_path: String, the scene document to read.
        out_path: String, the file to write.
        quadrature_order: Optional integer, points per axis of the Green
            coefficient rule.
        radius: Optional integer, the half width of oracle and field grids.
        seed: Integer, the seed of random draws.
        threads: Optional integer, the worker threads.
        verbose: Integer, the console verbosity.
        tolerances: Optional `Tolerances`.
        freq_index: Integer, the frequency of `oracle` and `field` grids.
        measurements_path: Optional string, a scene document whose
            measurements `invert` uses instead of those of the scene.
        bound: Optional positive float, the box prior of `invert` and `cloak`.
        ring_radius: Optional integer. `cloak` replaces the receivers by the
            ring of this sup-norm radius.
        real: Boolean, whether `cloak` designs must be real.
        max_draws: Integer, random draws of `cloak`.
        offsets: Optional list of offsets for `green`.
        max_offset: Integer, `green` dumps every offset in `[0, max_offset]^d`
            when `offsets` is not given.
    """

    def __init__(
        self,
        command,
        scene_path,
        out_path,
        quadrature_order=None,
        radius=None,
        seed=0,
        threads=None,
        verbose=0,
        tolerances=None,
        freq_index=1,
        measurements_path=None,
        bound=None,
        ring_radius=None,
        real=False,
        max_draws=100,
        offsets=None,
        max_offset=4,
    ):
        if command not in COMMANDS:
            raise errors.InputError(f"Unknown command: {command}")
        self.command = command
        self.scene_path = scene_path
        self.out_path = out_path
        self.quadrature_order = quadrature_order
        self.radius = DEFAULT_RADIUS.get(command) if radius is None else radius
        self.seed = seed
        self.threads = threads
        self.verbose = verbose
        self.tolerances = config_module.get_tolerances(tolerances)
        self.freq_index = freq_index
        self.measurements_path = measurements_path
        self.bound = bound
        self.ring_radius = ring_radius
        self.real = real
        self.max_draws = max_draws
        self.offsets = offsets
        self.max_offset = max_offset

        if quadrature_order is not None and quadrature_order < 4:
            raise errors.InputError(
                f"`--order` should be at least 4. Received: {quadrature_order}"
            )
        if bound is not None and not bound > 0:
            raise errors.InputError(
                f"`--bound` should be positive. Received: {bound}"
            )
        if ring_radius is not None and ring_radius < 1:
            raise errors.InputError(
                f"`--ring-radius` should be at least 1. Received: {ring_radius}"
            )

    def validate(self, scene):
        """Checks the options that depend on the scene."""
        if self.command == "oracle" and self.radius < scene.max_coordinate() + 5:
            raise errors.InputError(
                f"`--radius` should be at least {scene.max_coordinate() + 5} for "
                f"this scene. Received: {self.radius}"
            )
        if self.radius is not None and self.radius < 1:
            raise errors.InputError(
                f"`--radius` should be positive. Received: {self.radius}"
            )
        if not 1 <= self.freq_index <= scene.num_frequencies:
            raise errors.InputError(
                f"`--freq` should be in [1, {scene.num_frequencies}]. "
                f"Received: {self.freq_index}"
            )
        if self.offsets is not None:
            for offset in self.offsets:
                if len(offset) != scene.dimension:
                    raise errors.InputError(
                        f"Offset {list(offset)} does not have {scene.dimension} "
                        "components."
                    )

    @classmethod
    def from_args(cls, args):
        overrides = {}
        for name in config_module.Tolerances().get_config():
            value = getattr(args, f"tol_{name}")
            if value is not None:
                overrides[name] = value
        try:
            tolerances = config_module.Tolerances().replace(**overrides)
        except ValueError as e:
            raise errors.InputError(str(e))
        return cls(
            command=args.command,
            scene_path=args.scene,
            out_path=args.out,
            quadrature_order=args.order,
            radius=args.radius,
            seed=args.seed,
            threads=args.threads,
            verbose=args.verbose,
            tolerances=tolerances,
            freq_index=args.freq,
            measurements_path=getattr(args, "measurements", None),
            bound=getattr(args, "bound", None),
            ring_radius=getattr(args, "ring_radius", None),
            real=getattr(args, "real", False),
            max_draws=getattr(args, "max_draws", 100),
            offsets=getattr(args, "offset", None),
            max_offset=getattr(args, "max_offset", 4),
        )


def _parse_offset(text):
    try:
        return tuple(int(n) for n in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"Expected comma separated integers, found: {text}"
        )


def build_parser():
    parser = ArgumentParser(
        prog="lattice-defects",
        description="Forward and inverse scattering by point defects of a lattice.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    commands = {}
    for command in COMMANDS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--scene", required=True, help="Scene document (JSON).")
        sub.add_argument("--out", required=True, help="Output file.")
        sub.add_argument("--order", type=int, help="Quadrature points per axis.")
        sub.add_argument("--radius", type=int, help="Half width of the grid.")
        sub.add_argument("--seed", type=int, default=0, help="Random seed.")
        sub.add_argument("--threads", type=int, help="Worker threads.")
        sub.add_argument("--verbose", type=int, default=0, help="Verbosity.")
        sub.add_argument("--freq", type=int, default=1, help="Frequency index.")
        for name in config_module.Tolerances().get_config():
            sub.add_argument(
                f"--tol-{name.replace('_', '-')}",
                dest=f"tol_{name}",
                type=int if name in _INTEGER_TOLERANCES else float,
            )
        commands[command] = sub

    commands["green"].add_argument(
        "--offset",
        type=_parse_offset,
        action="append",
        help="Lattice offset `n_1,...,n_d`; may be repeated.",
    )
    commands["green"].add_argument("--max-offset", type=int, default=4)
    commands["invert"].add_argument(
        "--measurements", help="Scene document holding the measurements."
    )
    for command in ("invert", "cloak"):
        commands[command].add_argument("--bound", type=float)
    commands["cloak"].add_argument("--ring-radius", type=int)
    commands["cloak"].add_argument("--real", action="store_true")
    commands["cloak"].add_argument("--max-draws", type=int, default=100)
    return parser


def _read_scene(fname, validate=True):
    try:
        return scene_module.read_scene(fname, validate=validate)
    except tf.errors.NotFoundError:
        raise errors.InputError(f"File not found: {fname}")
    except tf.errors.OpError as e:
        raise errors.InputError(f"Cannot read {fname}: {e.message}")
    except OSError as e:
        raise errors.InputError(f"Cannot read {fname}: {e}")
    except UnicodeDecodeError as e:
        raise errors.ParseError(f"{fname} is not UTF-8 text: {e.reason}")


def _table(scene, config):
    return forward.make_table(
        scene,
        quadrature_order=config.quadrature_order,
        tolerances=config.tolerances,
    )


def run_green(scene, config):
    table = _table(scene, config)
    offsets = config.offsets
    if offsets is None:
        offsets = scene_module.box_sites(
            [0] * scene.dimension, [config.max_offset] * scene.dimension
        )
    table.prefetch(scene.frequencies, threads=config.threads)
    for frequency in scene.frequencies:
        table.coeffs(np.asarray(offsets, dtype=int), frequency)
    return table.save(config.out_path)


def run_forward(scene, config):
    if scene.defects is None:
        tf.get_logger().info("The scene has no `defects`; solving without defects.")
    solution = forward.solve_forward(
        scene,
        table=_table(scene, config),
        tolerances=config.tolerances,
        threads=config.threads,
    )
    measured = scene.replace(measurements=solution.to_measurement())
    return scene_module.write_scene(config.out_path, measured)


def run_oracle(scene, config):
    grid = truncation.brute_force_oracle(
        scene, radius=config.radius, threads=config.threads
    )
    values = grid.values[config.freq_index].reshape(-1)
    return forward.write_grid(config.out_path, grid.sites(), values)


def _determines_point(result):
    # One frequency with a non-trivial kernel leaves a continuum of defects.
    equations = result.equations
    return len(equations) > 1 or any(deq.kernel_dim == 0 for deq in equations)


def _apply_bound(result, bound, tolerances):
    """Keeps the verified candidates that are real and within `[0, bound]`.

    An `INCONSISTENT` result is returned unchanged. The result becomes
    `UNIQUE` only when a single candidate survives and the measurements
    determine isolated points.
    """
    if bound is None or result.status == report.RecoveryStatus.INCONSISTENT:
        return result
    if not result.candidates:
        return result
    verified = [
        c
        for c in result.candidates
        if c.verification_residual is not None
        and c.verification_residual <= tolerances.ver_tol
    ]
    kept = inverse.box_filter(verified, bound, tolerances.im_tol)
    removed = len(result.candidates) - len(kept)
    result.candidates = kept
    if not kept:
        result.status = report.RecoveryStatus.NO_CANDIDATE
        result.message = f"No verified candidate is real and within [0, {bound}]."
        return result
    if len(kept) == 1 and _determines_point(result):
        result.status = report.RecoveryStatus.UNIQUE
    result.message = f"The box prior [0, {bound}] removed {removed} candidates."
    return result


def run_invert(scene, config):
    measurement = scene.measurements
    if config.measurements_path is not None:
        document = _read_scene(config.measurements_path, validate=False)
        measurement = document.measurements
    if measurement is None:
        raise errors.InputError("No measurements in the scene document.")
    scene = scene.replace(measurements=measurement)
    scene_module.check_scene(scene)
    result = inverse.recover(
        scene,
        measurement,
        table=_table(scene, config),
        tolerances=config.tolerances,
        seed=config.seed,
        threads=config.threads,
        verbose=config.verbose,
    )
    result = _apply_bound(result, config.bound, config.tolerances)
    if config.verbose:
        result.summary()
    return result.save(config.out_path)


def run_cloak(scene, config):
    if config.ring_radius is not None:
        scene = cloak.with_receiver_ring(scene, config.ring_radius)
        scene_module.check_scene(scene)
    design = cloak.design_cloak(
        scene,
        bound=config.bound,
        real=config.real,
        seed=config.seed,
        max_draws=config.max_draws,
        table=_table(scene, config),
        tolerances=config.tolerances,
        threads=config.threads,
        verbose=config.verbose,
        ring_radius=config.ring_radius,
    )
    if config.verbose:
        design.summary()
    return design.save(config.out_path)


def run_field(scene, config):
    sites, values = forward.field_grid(
        scene,
        radius=config.radius,
        freq_index=config.freq_index,
        table=_table(scene, config),
    )
    return forward.write_grid(config.out_path, sites, values)


RUNNERS = {
    "green": run_green,
    "forward": run_forward,
    "oracle": run_oracle,
    "invert": run_invert,
    "cloak": run_cloak,
    "field": run_field,
}


def run(config):
    """Runs one command.

    Returns:
        String, the file written.
    """
    scene = _read_scene(config.scene_path)
    config.validate(scene)
    tf.get_logger().info(f"Running `{config.command}` on {config.scene_path}.")
    try:
        return RUNNERS[config.command](scene, config)
    except errors.AnalysisOutcome as e:
        document = {
            "status": report.RecoveryStatus.NO_CANDIDATE,
            "error": type(e).__name__,
            "operation": OPERATIONS[config.command],
            "message": str(e),
            "seed": config.seed,
        }
        text = json.dumps(document, indent=2) + "\n"
        return utils.write_text(config.out_path, text)


def error_document(error, command=None):
    return json.dumps(
        {
            "error": type(error).__name__,
            "operation": OPERATIONS.get(command),
            "message": str(error),
        }
    )


def main(argv=None):
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        run(RunConfig.from_args(args))
    except errors.InputError as e:
        sys.stderr.write(error_document(e, command) + "\n")
        return 1
    except errors.NumericalError as e:
        sys.stderr.write(error_document(e, command) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
