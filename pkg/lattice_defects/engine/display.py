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
"""Console progress of multi-start searches."""

from datetime import datetime


class Display(object):
    def __init__(self, num_starts, verbose=1):
        self.verbose = verbose
        self.num_starts = num_starts
        self.col_width = 14

        # Start time for the overall search
        self.search_start = None

        self.best_objective = None

    def on_search_begin(self, equations):
        self.search_start = datetime.now()
        if self.verbose < 1:
            return
        print()
        print(f"Search: {self.num_starts} starts")
        template = "{{0:>{0}}}|{{1:>{0}}}|{{2:>{0}}}".format(self.col_width)
        print(template.format("Frequency", "Rank", "Kernel dim"))
        for deq in equations:
            print(template.format(deq.freq_index, deq.rank, deq.kernel_dim))
        print()

    def on_start_end(self, start_id, objective, iterations, converged):
        if objective is not None and (
            self.best_objective is None or objective < self.best_objective
        ):
            self.best_objective = objective
        if self.verbose < 2:
            return
        state = "converged" if converged else "stopped"
        print(
            f"Start {start_id + 1}/{self.num_starts} {state} after {iterations} "
            f"iterations, objective {self.format_value(objective)}"
        )

    def on_search_end(self, num_candidates):
        if self.verbose < 1:
            return
        print()
        print(f"Best objective So Far: {self.format_value(self.best_objective)}")
        print(f"Verified candidates: {num_candidates}")
        time_elapsed_str = self.format_duration(datetime.now() - self.search_start)
        print(f"Total elapsed time: {time_elapsed_str}")

    def format_value(self, val):
        if val is None:
            return "?"
        return f"{val:.5g}"

    def format_duration(self, d):
        s = round(d.total_seconds())
        h = s // 3600
        s %= 3600
        m = s // 60
        s %= 60
        return f"{h:02d}h {m:02d}m {s:02d}s"
