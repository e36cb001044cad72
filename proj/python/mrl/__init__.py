"""Python bindings for the mrl interpreter.

Values cross the boundary as native Python objects where one exists
(bool, int, str, tuple, list, frozenset, dict); constructor nodes and
source locations stay wrapped as ``Value``.
"""

from ._mrl import (
    Interpreter,
    MrlError,
    Thrown,
    Value,
    parse_value,
    render,
    run_manifest,
    transitive_closure,
    unparse,
)

__all__ = [
    "Interpreter",
    "MrlError",
    "Thrown",
    "Value",
    "parse_value",
    "render",
    "run_manifest",
    "transitive_closure",
    "unparse",
]
