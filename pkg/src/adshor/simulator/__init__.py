"""Kraus-branch simulation of circuits under amplitude damping."""

from .engine import (
    Engine,
    Fault,
    FaultSweep,
    Injection,
    InitialState,
    KrausNoise,
    NoNoise,
    Result,
    SampledNoise,
    run,
)

__all__ = [
    "Engine",
    "Fault",
    "FaultSweep",
    "Injection",
    "InitialState",
    "KrausNoise",
    "NoNoise",
    "Result",
    "SampledNoise",
    "run",
]
