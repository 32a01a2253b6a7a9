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

import random

import numpy as np
import pytest

from lattice_defects.test_utils import fixtures


@pytest.fixture(autouse=True)
def set_seeds_before_tests():
    """Seeds every random generator before each test.

    The library itself only draws from `numpy` generators seeded explicitly.
    This covers the draws made by the tests themselves.
    """
    random.seed(0)
    np.random.seed(0)
    yield


@pytest.fixture(scope="session")
def sparse_scene():
    return fixtures.sparse_scene()


@pytest.fixture(scope="session")
def dense_scene():
    return fixtures.dense_scene()
