"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, numerical
failures exit 2, I/O problems exit 3.
"""


class NumericalError(RuntimeError):
    """A numerical contract was violated (solver failure, bad residual, ...)."""


class DegenerateSpectrumError(NumericalError):
    """The zero mode is not unique; the instance has extra symmetry."""


class PositivityError(NumericalError):
    """Steady-state eigenvalues are negative beyond tolerance."""
