"""Circuit builders for EC units and logical gadgets."""

from .core import CodeBlock, Context, damping_extraction, ft_ec, ideal_ec, subcircuit, xx_measurement, zigzag
from .logical import GadgetKind, build_cz_extended, build_logical, build_memory

__all__ = [
    "CodeBlock",
    "Context",
    "GadgetKind",
    "build_cz_extended",
    "build_logical",
    "build_memory",
    "damping_extraction",
    "ft_ec",
    "ideal_ec",
    "subcircuit",
    "xx_measurement",
    "zigzag",
]
