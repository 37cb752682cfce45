"""Quantum-classical duality between inhomogeneous twisted XXX spin chains
and the Ruijsenaars-Schneider / Calogero-Moser many-body systems."""

from ._validation import GeneralPositionError, set_max_sites
from .chain import ChainParams, ConsistencyError, GaudinParams

__version__ = "0.1.0"

__all__ = ["ChainParams", "GaudinParams", "GeneralPositionError", "ConsistencyError", "set_max_sites"]
