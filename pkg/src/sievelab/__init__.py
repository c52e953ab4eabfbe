"""Desk-scale laboratory for near-neighbour sieving cost models under
bounded quantum memory.

Subpackages cover the rate calculus for filtered sieving, sphere-cap
geometry oracles, random-product-code filter families, a small sieve
engine with query ledgers, amplitude-amplification search emulators,
a comparator-circuit cost model, and symmetric-key trade-off emulators.
Everything is deterministic under a 64-bit master seed; see rng.py for
the seed-derivation scheme.
"""

from . import circuit, cli, exponents, geometry, qsearch, rng, rpc, sieve, symkey

__all__ = [
    "circuit",
    "cli",
    "exponents",
    "geometry",
    "qsearch",
    "rng",
    "rpc",
    "sieve",
    "symkey",
]

__version__ = "0.1.0"
