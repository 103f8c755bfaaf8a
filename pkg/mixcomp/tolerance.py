"""The structural tolerance controls every numerical rank decision in `mixcomp`:
support truncation, commutant and intertwiner nullspaces, and eigenvalue clustering.

It is set globally, through the `KI_TOL` environment variable, or temporarily with a
`scope`:

!!! example
    ```python
    with mixcomp.tolerance.scope(1e-7):
        decomposition = mixcomp.decomposition.ki_decompose(ensemble)
    ```
"""

import os
from contextlib import contextmanager

from mixcomp.utils import ValidationError

__all__ = ["scope", "get_tolerance", "DEFAULT_TOLERANCE"]

DEFAULT_TOLERANCE = 1e-9
ENV_VAR = "KI_TOL"

_SCOPED_TOLERANCES = []


def _parse(value, source):
    try:
        tol = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"Tolerance from {source} is not a number: {value!r}.")
    if not 0 < tol < 1:
        raise ValidationError(f"Tolerance from {source} must lie in (0, 1), got {tol}.")
    return tol


def _default_tolerance():
    value = os.environ.get(ENV_VAR)
    if value is None or value == "":
        return DEFAULT_TOLERANCE
    return _parse(value, ENV_VAR)


@contextmanager
def scope(tol):
    """A context manager to set the structural tolerance.

    # Arguments
    tol: Relative tolerance in `(0, 1)`. `None` keeps the active value.
    """
    tol = get_tolerance() if tol is None else _parse(tol, "scope")
    _SCOPED_TOLERANCES.append(tol)
    try:
        yield tol
    finally:
        _SCOPED_TOLERANCES.pop()


def get_tolerance(tol=None):
    """Resolves the tolerance to use.

    # Arguments
    tol: Explicit tolerance. If `None`, the innermost `scope` value is used, then the
        `KI_TOL` environment variable, then `DEFAULT_TOLERANCE`.

    # Returns
    A float in `(0, 1)`.
    """
    if tol is not None:
        return _parse(tol, "argument")
    if _SCOPED_TOLERANCES:
        return _SCOPED_TOLERANCES[-1]
    return _default_tolerance()
