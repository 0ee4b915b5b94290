"""Standalone stdio worker speaking the external-objective protocol.

Runs an engine-pluggable stub objective over newline-delimited JSON.
This package deliberately does not import the optimizer: agreement
between its scores and the engine's built-in ones is checked end to end
over the wire.
"""

from .objectives import mock_ser_score
from .server import serve

__all__ = ["mock_ser_score", "serve"]

__version__ = "0.1.0"
