import functools
import itertools

import numpy as np

__all__ = [
    "MixcompError",
    "ValidationError",
    "NotPositiveSemidefiniteError",
    "ParseError",
    "ResourceCapError",
    "ConsistencyError",
    "check_cap",
    "register_alias",
]

# Largest composite (d^N) dimension any channel or state is allowed to reach.
DIMENSION_CAP = 4096
# Largest number of signal sequences enumerated exactly.
SEQUENCE_CAP = 65536


class MixcompError(Exception):
    """Base class of all errors raised by `mixcomp`."""


class ValidationError(MixcompError, ValueError):
    """An input violates a documented invariant."""


class NotPositiveSemidefiniteError(ValidationError):
    pass


class ParseError(MixcompError, ValueError):
    """A file or command-line value could not be parsed."""


class ResourceCapError(MixcompError, ValueError):
    """A requested computation exceeds a size cap."""


class ConsistencyError(MixcompError, RuntimeError):
    """An internal postcondition failed after an algorithm terminated."""


def check_cap(size, cap=DIMENSION_CAP, what="composite dimension"):
    if size > cap:
        raise ResourceCapError(f"The {what} {size} exceeds the cap of {cap}.")
    return size


def register_alias(registry, name):
    """A decorator to register a builder under a given alias.

    !!! example
        ```python
        @utils.register_alias(_SCHEMES, "identity")
        def identity_scheme(ensemble, n_sites, rate=None):
            ...
        ```
    """

    def register_func(fn):
        registry[name] = fn
        return fn

    return register_func


def get_registered(registry, identifier, kind):
    if callable(identifier):
        return identifier
    if isinstance(identifier, str) and identifier in registry:
        return registry[identifier]
    raise ValidationError(
        f"Could not interpret {kind} identifier: {identifier!r}. "
        f"Available: {sorted(registry)}."
    )


def sequences(n_symbols, length):
    """All index sequences of the given length in lexicographic order."""
    return itertools.product(range(n_symbols), repeat=length)


def sequence_probability(probs, sequence):
    return functools.reduce(lambda acc, i: acc * probs[i], sequence, 1.0)


def round_significant(x, digits=12):
    """Rounds a float (or nested lists of floats) to `digits` significant digits."""
    if isinstance(x, (list, tuple)):
        return [round_significant(v, digits) for v in x]
    if isinstance(x, (bool, int, np.integer, str)) or x is None:
        return x
    return float(f"{float(x):.{digits}g}")
