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
"Base class of the objects written as JSON reports."


import json

from lattice_defects import utils


class Stateful(object):
    """The base class for saving and restoring the state.

    The state of an object here is the result produced by an analysis, for
    example the candidates of a recovery or a verified cloak design. The
    inputs of the analysis (the scene and the tolerances) are documented
    separately by the scene documents.

    The JSON text produced by `to_json` depends only on the state: repeated
    runs with the same inputs and seed give byte-identical files.
    """

    def get_state(self):
        """Returns the current state of this object.

        This method is called during `save`.

        Returns:
            A dictionary of serializable objects as the state.
        """
        raise NotImplementedError

    def set_state(self, state):
        """Sets the current state of this object.

        This method is called during `reload`.

        Args:
            state: A dictionary of serialized objects as the state to restore.
        """
        raise NotImplementedError

    def to_json(self):
        return json.dumps(self.get_state(), indent=2) + "\n"

    def save(self, fname):
        """Saves this object using `get_state`.

        Args:
            fname: A string, the file name to save to.

        Returns:
            String. The file name written.
        """
        return utils.write_text(fname, self.to_json())

    def reload(self, fname):
        """Reloads this object using `set_state`.

        Args:
            fname: A string, the file name to restore from.
        """
        state = json.loads(utils.read_text(fname))
        self.set_state(state)
