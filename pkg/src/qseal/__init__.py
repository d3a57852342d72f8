"""Quantum bit string sealing: protocol simulator, attacks and security formulas."""

from .protocol import CheckReport, ProtocolParams, SealedString, Verdict, check, read_honest, seal
from .quantum import ProductState, StateVector, Subspace

__all__ = [
    "CheckReport",
    "ProductState",
    "ProtocolParams",
    "SealedString",
    "StateVector",
    "Subspace",
    "Verdict",
    "check",
    "read_honest",
    "seal",
]

__version__ = "0.1.0"
