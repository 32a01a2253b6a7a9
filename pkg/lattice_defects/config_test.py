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

import pytest

from lattice_defects import config as config_module


def test_default_tolerances():
    tolerances = config_module.Tolerances()
    assert tolerances.rank_tol == 1e-10
    assert tolerances.cons_tol == 1e-8
    assert tolerances.ver_tol == 1e-6
    assert tolerances.num_starts == 16


def test_replace_keeps_other_fields():
    tolerances = config_module.Tolerances().replace(rank_tol=1e-8, max_iter=10)
    assert tolerances.rank_tol == 1e-8
    assert tolerances.max_iter == 10
    assert tolerances.ver_tol == 1e-6


def test_replace_unknown_field_error():
    with pytest.raises(ValueError, match="Unknown tolerances"):
        config_module.Tolerances().replace(speed=1.0)


def test_non_positive_tolerance_error():
    with pytest.raises(ValueError, match="`den_tol` should be positive"):
        config_module.Tolerances(den_tol=0)


def test_get_tolerances():
    assert isinstance(config_module.get_tolerances(None), config_module.Tolerances)
    tolerances = config_module.get_tolerances({"step_tol": 1e-10})
    assert tolerances.step_tol == 1e-10
    assert config_module.get_tolerances(tolerances) is tolerances
    with pytest.raises(ValueError, match="not understood"):
        config_module.get_tolerances(1e-8)


def test_quadrature_order_by_dimension():
    assert config_module.default_quadrature_order(1) == 256
    assert config_module.default_quadrature_order(2) == 256
    assert config_module.default_quadrature_order(3) == 64
