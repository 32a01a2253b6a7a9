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
"""Results of the inverse analysis."""

import numpy as np

from lattice_defects import utils
from lattice_defects.engine import scene as scene_module
from lattice_defects.engine import stateful


class RecoveryStatus:
    # Exactly one defect configuration explains the measurements.
    UNIQUE = "UNIQUE"
    # Several configurations (a manifold or several clusters) explain them.
    MANIFOLD = "MANIFOLD"
    # No configuration on the candidate footprint explains them.
    INCONSISTENT = "INCONSISTENT"
    # The data equations are consistent but no multi-start was verified.
    NO_CANDIDATE = "NO_CANDIDATE"

    ALL = (UNIQUE, MANIFOLD, INCONSISTENT, NO_CANDIDATE)


def _pairs(values):
    return [utils.complex_to_pair(v) for v in np.asarray(values).reshape(-1)]


def _from_pairs(pairs):
    return np.asarray([utils.pair_to_complex(p) for p in pairs], dtype=complex)


def _float_or_none(value):
    if value is None or not np.isfinite(value):
        return None
    return float(value)


class DataEquation(object):
    """Solution of `C_j x = b_j` for one frequency.

    Args:
        freq_index: Integer, the frequency index `j`.
        rhs: Complex `(R,)` array, `b_j = u_j - sum_m c_m^j F_m^j`.
        particular: Complex `(N,)` array, the minimum-norm solution `x_j`.
        kernel: Complex `(N, k_j)` array with orthonormal columns spanning
            the numerical kernel of `C_j`.
        rank: Integer, the numerical rank of `C_j`.
        rank_tol: Float, the relative singular value threshold used.
        residual: Float, `|C_j x_j - b_j|`.
        consistent: Boolean, whether the residual is within tolerance.
        condition: Float, largest over smallest retained singular value.
    """

    def __init__(
        self,
        freq_index,
        rhs,
        particular,
        kernel,
        rank,
        rank_tol,
        residual,
        consistent,
        condition,
    ):
        self.freq_index = freq_index
        self.rhs = rhs
        self.particular = particular
        self.kernel = kernel
        self.rank = rank
        self.rank_tol = rank_tol
        self.residual = residual
        self.consistent = consistent
        self.condition = condition

    @property
    def kernel_dim(self):
        return self.kernel.shape[1]

    def get_config(self):
        return {
            "freq_index": self.freq_index,
            "rank": self.rank,
            "kernel_dim": self.kernel_dim,
            "rank_tol": self.rank_tol,
            "consistency_residual": self.residual,
            "consistent": self.consistent,
            "condition": _float_or_none(self.condition),
            "rhs": _pairs(self.rhs),
            "particular_solution": _pairs(self.particular),
            "kernel_basis": [_pairs(column) for column in self.kernel.T],
        }

    @classmethod
    def from_config(cls, config):
        size = len(config["particular_solution"])
        kernel = np.zeros((size, config["kernel_dim"]), dtype=complex)
        for i, column in enumerate(config["kernel_basis"]):
            kernel[:, i] = _from_pairs(column)
        condition = config["condition"]
        return cls(
            freq_index=config["freq_index"],
            rhs=_from_pairs(config["rhs"]),
            particular=_from_pairs(config["particular_solution"]),
            kernel=kernel,
            rank=config["rank"],
            rank_tol=config["rank_tol"],
            residual=config["consistency_residual"],
            consistent=config["consistent"],
            condition=float("inf") if condition is None else condition,
        )


class Candidate(object):
    """A defect configuration that explains the measurements.

    Args:
        defects: A `DefectVector`.
        membership_residuals: Dictionary, frequency index to the distance of
            the defect from the solution manifold of that frequency.
        verification_residual: Float, the relative receiver misfit of a
            forward re-solve, or None when it was not computed.
        free_indices: List of integers, the candidate sites whose value is
            left unconstrained by the measurements.
        cluster_size: Integer, how many multi-starts converged to this point.
    """

    def __init__(
        self,
        defects,
        membership_residuals=None,
        verification_residual=None,
        free_indices=(),
        cluster_size=1,
    ):
        self.defects = defects
        self.membership_residuals = dict(membership_residuals or {})
        self.verification_residual = verification_residual
        self.free_indices = list(free_indices)
        self.cluster_size = cluster_size

    @property
    def values(self):
        return self.defects.values

    def get_config(self):
        return {
            "defects": self.defects.get_config(),
            "membership_residuals": [
                {"freq_index": j, "residual": float(r)}
                for j, r in sorted(self.membership_residuals.items())
            ],
            "verification_residual": _float_or_none(self.verification_residual),
            "free_indices": self.free_indices,
            "cluster_size": self.cluster_size,
        }

    @classmethod
    def from_config(cls, config):
        return cls(
            defects=scene_module.DefectVector.from_config(config["defects"]),
            membership_residuals={
                e["freq_index"]: e["residual"]
                for e in config["membership_residuals"]
            },
            verification_residual=config["verification_residual"],
            free_indices=config["free_indices"],
            cluster_size=config["cluster_size"],
        )


class RecoveryResult(stateful.Stateful):
    """Everything the inverse analysis found about a measurement.

    Args:
        status: One of the `RecoveryStatus` attributes.
        equations: List of `DataEquation`, one per frequency.
        candidates: List of `Candidate`.
        seed: Optional integer, the seed of the random multi-starts.
        message: Optional string explaining the status.
    """

    def __init__(self, status, equations=(), candidates=(), seed=None, message=None):
        if status not in RecoveryStatus.ALL:
            raise ValueError(f"Unknown status {status}")
        self.status = status
        self.equations = list(equations)
        self.candidates = list(candidates)
        self.seed = seed
        self.message = message

    @property
    def best(self):
        """The candidate with the smallest verification residual."""
        if not self.candidates:
            return None
        return min(
            self.candidates,
            key=lambda c: (
                np.inf
                if c.verification_residual is None
                else c.verification_residual
            ),
        )

    def summary(self):
        """Displays a summary of this result."""
        print("Recovery summary")
        print(f"Status: {self.status}")
        for deq in self.equations:
            print(
                f"Frequency {deq.freq_index}: rank {deq.rank}, kernel dimension "
                f"{deq.kernel_dim}, consistency residual {deq.residual:.3e}"
            )
        print(f"Candidates: {len(self.candidates)}")
        if self.message is not None:
            print(self.message)

    def get_state(self):
        return {
            "status": self.status,
            "seed": self.seed,
            "message": self.message,
            "frequencies": [deq.get_config() for deq in self.equations],
            "candidates": [c.get_config() for c in self.candidates],
        }

    def set_state(self, state):
        self.status = state["status"]
        self.seed = state["seed"]
        self.message = state["message"]
        self.equations = [DataEquation.from_config(c) for c in state["frequencies"]]
        self.candidates = [Candidate.from_config(c) for c in state["candidates"]]

    @classmethod
    def from_state(cls, state):
        result = cls(status=RecoveryStatus.UNIQUE)
        result.set_state(state)
        return result
