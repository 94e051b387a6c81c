"""Warped-product G2-structures: torsion, the modified Laplacian coflow and its solitons."""

import json as _json

from . import _core
from ._core import *  # noqa: F401,F403
from ._core import Error, InvalidArgument, NumericalError  # noqa: F401


def verify(suite="all"):
    """Run a built-in verification suite and return the parsed report."""
    return _json.loads(_core.verify(suite))


__all__ = [name for name in dir(_core) if not name.startswith("_")]
