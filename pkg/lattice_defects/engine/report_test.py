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

import json

import numpy as np
import pytest

from lattice_defects.engine import report
from lattice_defects.engine import scene as scene_module


def make_equation(freq_index=1):
    return report.DataEquation(
        freq_index=freq_index,
        rhs=np.array([1.0 + 2.0j, -0.5]),
        particular=np.array([0.25, 1j]),
        kernel=np.array([[0.6], [0.8j]]),
        rank=1,
        rank_tol=1e-10,
        residual=3e-15,
        consistent=True,
        condition=float("inf"),
    )


def make_candidate(values=(0.5, 0.25 + 0.1j), misfit=1e-12):
    return report.Candidate(
        defects=scene_module.DefectVector(list(values)),
        membership_residuals={2: 1e-13, 1: 2e-13},
        verification_residual=misfit,
        free_indices=[1],
    )


def test_data_equation_config_roundtrip():
    deq = make_equation()
    config = deq.get_config()
    assert config["kernel_dim"] == 1
    assert config["condition"] is None
    restored = report.DataEquation.from_config(json.loads(json.dumps(config)))
    assert restored.kernel_dim == 1
    assert np.array_equal(restored.kernel, deq.kernel)
    assert np.array_equal(restored.particular, deq.particular)
    assert restored.condition == float("inf")


def test_candidate_config_sorts_frequencies():
    config = make_candidate().get_config()
    assert [e["freq_index"] for e in config["membership_residuals"]] == [1, 2]
    restored = report.Candidate.from_config(config)
    assert restored.membership_residuals == {1: 2e-13, 2: 1e-13}
    assert restored.free_indices == [1]
    assert np.array_equal(restored.values, [0.5, 0.25 + 0.1j])


def test_missing_verification_residual_is_null():
    config = make_candidate(misfit=None).get_config()
    assert config["verification_residual"] is None


def test_unknown_status_error():
    with pytest.raises(ValueError, match="Unknown status"):
        report.RecoveryResult(status="MAYBE")


def test_best_prefers_smallest_verified_misfit():
    result = report.RecoveryResult(
        status=report.RecoveryStatus.MANIFOLD,
        candidates=[
            make_candidate((1.0, 0.0), None),
            make_candidate((2.0, 0.0), 1e-7),
            make_candidate((3.0, 0.0), 1e-9),
        ],
    )
    assert result.best.values[0] == 3.0
    empty = report.RecoveryResult(status=report.RecoveryStatus.INCONSISTENT)
    assert empty.best is None


def test_save_and_reload(tmp_path):
    result = report.RecoveryResult(
        status=report.RecoveryStatus.UNIQUE,
        equations=[make_equation(1), make_equation(2)],
        candidates=[make_candidate()],
        seed=7,
        message="Recovered from frequency 1.",
    )
    fname = result.save(tmp_path / "result.json")
    restored = report.RecoveryResult.from_state(json.loads(open(fname).read()))
    assert restored.status == report.RecoveryStatus.UNIQUE
    assert restored.seed == 7
    assert [deq.freq_index for deq in restored.equations] == [1, 2]
    assert restored.to_json() == result.to_json()

    reloaded = report.RecoveryResult(status=report.RecoveryStatus.MANIFOLD)
    reloaded.reload(fname)
    assert reloaded.status == report.RecoveryStatus.UNIQUE


def test_summary(capsys):
    result = report.RecoveryResult(
        status=report.RecoveryStatus.UNIQUE,
        equations=[make_equation()],
        candidates=[make_candidate()],
        message="Recovered from frequency 1.",
    )
    result.summary()
    out, _ = capsys.readouterr()
    assert "Status: UNIQUE" in out
    assert "kernel dimension 1" in out
    assert "Candidates: 1" in out
