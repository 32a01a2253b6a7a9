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

from lattice_defects.config import Tolerances
from lattice_defects.engine.brillouin import FrequencySpec
from lattice_defects.engine.brillouin import GreenTable
from lattice_defects.engine.brillouin import green_coeff
from lattice_defects.engine.cloak import CloakDesign
from lattice_defects.engine.cloak import design_cloak
from lattice_defects.engine.cloak import design_illusion
from lattice_defects.engine.cloak import invisible_manifold
from lattice_defects.engine.forward import assemble_system
from lattice_defects.engine.forward import is_admissible
from lattice_defects.engine.forward import solve_forward
from lattice_defects.engine.intersection import intersect_manifolds
from lattice_defects.engine.inverse import box_filter
from lattice_defects.engine.inverse import manifold_point
from lattice_defects.engine.inverse import membership_residual
from lattice_defects.engine.inverse import recover
from lattice_defects.engine.inverse import recover_unique
from lattice_defects.engine.inverse import solve_data_equation
from lattice_defects.engine.report import RecoveryResult
from lattice_defects.engine.report import RecoveryStatus
from lattice_defects.engine.scene import DefectVector
from lattice_defects.engine.scene import Measurement
from lattice_defects.engine.scene import Scene
from lattice_defects.engine.scene import Source
from lattice_defects.engine.scene import load_scene
from lattice_defects.engine.scene import save_scene
from lattice_defects.engine.scene import validate_scene
from lattice_defects.engine.truncation import brute_force_oracle
from lattice_defects.utils import check_numpy_version

check_numpy_version()

__version__ = "0.1.0dev"
