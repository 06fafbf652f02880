"""Amplitude-damping noise: Kraus pair, class decomposition, noise attachment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DomainError

if TYPE_CHECKING:
    from .circuit import Circuit


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"damping probability must lie in [0, 1], got {p}")
    return p


@dataclass(frozen=True)
class KrausPair:
    E0: np.ndarray
    E1: np.ndarray

    def superoperator(self) -> np.ndarray:
        return kraus_superoperator([self.E0, self.E1])


def kraus(p: float) -> KrausPair:
    p = _check_p(p)
    e0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - p)]], dtype=complex)
    e1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]], dtype=complex)
    return KrausPair(e0, e1)


def kraus_superoperator(ops: list[np.ndarray]) -> np.ndarray:
    """Column-stacking superoperator: vec(K rho K^dag) = (conj(K) kron K) vec(rho)."""
    return sum(np.kron(k.conj(), k) for k in ops)


@dataclass(frozen=True)
class ErrorClass:
    tag: str
    weight: float


_Z = np.diag([1.0, -1.0]).astype(complex)
_E = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_I = np.eye(2, dtype=complex)

# each class as a superoperator acting on vec(rho)
CLASS_MAPS: dict[str, np.ndarray] = {
    "IdentityPart": np.kron(_I, _I),
    "Fa": np.kron(_E.conj(), _E),
    "Fz": 0.5 * (np.kron(_Z.T, _I) + np.kron(_I, _Z)),
    "Zerr": np.kron(_Z.conj(), _Z),
}


def class_decomposition(p: float) -> list[ErrorClass]:
    p = _check_p(p)
    if p >= 1.0:
        raise DomainError("class decomposition needs p < 1")
    return [
        ErrorClass("IdentityPart", 0.25 * (1.0 + np.sqrt(1.0 - p)) ** 2),
        ErrorClass("Fa", p),
        ErrorClass("Fz", p / 2.0),
        ErrorClass("Zerr", p * p / 16.0),
    ]


def superoperator_from_classes(classes: list[ErrorClass]) -> np.ndarray:
    return sum(c.weight * CLASS_MAPS[c.tag] for c in classes)


@dataclass(frozen=True)
class FaultModel:
    """Where each operation's noise sits relative to the ideal operation."""

    measurement: str = "before"
    preparation: str = "after"
    gate: str = "after"
    idle: str = "after"

    def placement(self, kind: str | None) -> str:
        from .circuit import MEASUREMENTS, PREPARATIONS

        if kind is None:
            return self.idle
        if kind in MEASUREMENTS:
            return self.measurement
        if kind in PREPARATIONS:
            return self.preparation
        return self.gate


@dataclass(frozen=True)
class NoiseMarker:
    qubit: int
    step: int
    when: str
    operation: str | None


@dataclass(frozen=True)
class NoisyCircuit:
    circuit: Circuit
    model: FaultModel
    markers: tuple[NoiseMarker, ...]


def attach_noise(circuit: Circuit, model: FaultModel | None = None) -> NoisyCircuit:
    """One marker per (qubit, timestep) location of a scheduled circuit."""
    from .circuit import Circuit, check_gate_set
    from .errors import CircuitStateError

    if isinstance(circuit, NoisyCircuit):
        raise CircuitStateError("noise is already attached to this circuit")
    if not isinstance(circuit, Circuit):
        raise TypeError("attach_noise expects a Circuit")
    check_gate_set(circuit)
    model = model or FaultModel()
    index = circuit.locations()
    markers = []
    for loc in index:
        markers.append(NoiseMarker(loc.qubit, loc.step, model.placement(loc.operation), loc.operation))
    return NoisyCircuit(circuit, model, tuple(markers))
