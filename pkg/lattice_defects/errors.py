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


class LatticeError(Exception):
    """Base class of all the errors raised by LatticeDefects."""

    pass


class InputError(LatticeError):
    """The user supplied a document or argument that cannot be used.

    The command line front end exits with status 1 for these errors.
    """

    pass


class ParseError(InputError, ValueError):
    """A scene, measurement or table document could not be parsed.

    Args:
        message: String. What went wrong.
        line: Optional integer, the 1-based line of the offending text.
        field: Optional string, the document key being read.
    """

    def __init__(self, message, line=None, field=None):
        locus = []
        if field is not None:
            locus.append(f"field `{field}`")
        if line is not None:
            locus.append(f"line {line}")
        if locus:
            message = f"{message} ({', '.join(locus)})"
        super().__init__(message)
        self.line = line
        self.field = field


class ValidationError(InputError, ValueError):
    """A parsed `Scene` violates the standing assumptions of the model.

    Args:
        violations: List of strings, as returned by `validate_scene`.
    """

    def __init__(self, violations):
        super().__init__(
            "Invalid scene:\n" + "\n".join(f"  - {v}" for v in violations)
        )
        self.violations = list(violations)


class NumericalError(LatticeError):
    """A computation cannot be carried out to the requested accuracy.

    The command line front end exits with status 2 for these errors.
    """

    pass


class NearSingularSymbol(NumericalError, ArithmeticError):
    """The lattice symbol nearly vanishes on the quadrature grid.

    Raised when the squared frequency is too close to the passband `[0, 4d]`
    for the requested quadrature order. Shift the frequency off the real axis
    with an explicit `epsilon` instead.
    """

    pass


class NotAdmissible(NumericalError, ArithmeticError):
    """The interaction matrix `I - w^2 A S` is numerically singular.

    Args:
        message: String. What went wrong.
        freq_index: Integer, the index of the offending frequency.
    """

    def __init__(self, message, freq_index=None):
        super().__init__(message)
        self.freq_index = freq_index


class UnresolvedOffset(NumericalError, ValueError):
    """An offset is longer than half the quadrature order.

    The coefficient grid is periodic with the quadrature order, so such an
    offset would read the value of a shorter one. Raise the order instead.
    """

    pass


class SingularTruncation(NumericalError, ArithmeticError):
    """The truncated-lattice system could not be factorized."""

    pass


class OffManifold(NumericalError, ValueError):
    """A kernel coordinate maps to a pole of the component-wise ratio.

    Args:
        message: String. What went wrong.
        poles: List of integers, the defect indices with a vanishing
            denominator and a non-vanishing numerator.
    """

    def __init__(self, message, poles=()):
        super().__init__(message)
        self.poles = list(poles)


class AnalysisOutcome(LatticeError):
    """An analysis finished but could not produce the requested answer.

    These are results rather than failures: the command line front end still
    writes its report and exits with status 0.
    """

    pass


class NoUniqueFrequency(AnalysisOutcome):
    """Every frequency has a non-trivial receiver-matrix kernel."""

    pass


class NoCandidate(AnalysisOutcome):
    """No multi-start converged to a verified defect configuration."""

    pass
