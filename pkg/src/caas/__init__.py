"""Continuous certification engine.

Collects semantic evidence from simulated multi-layer environments into a
certification graph, assesses scheme-independent metrics against it, rolls
results up to catalog controls per audit scope, maintains the certificate
lifecycle, and records signed digests of everything in an append-only
hash-chain trust log.
"""

from .config import EngineConfig
from .engine import Engine

__all__ = ["Engine", "EngineConfig"]
__version__ = "0.1.0"
