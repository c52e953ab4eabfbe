"""Closest-vector comparator circuits and the QRAM-free pipeline.

A bucketed list can be burned into hardware: per bucket, a chain of
comparators that sweeps the hardcoded vectors in insertion order and
keeps the one closest to the query, then a multiplexer tree that picks
the requested chain's output.  No addressable memory is involved, which
is the whole point; the price is paid in circuit size.

Cost units are fixed so the counts are exactly testable: one comparator
is one depth stage, the first chain element is free (it is hardcoded,
not compared), and the multiplexer is a balanced binary tree over t
lanes with t - 1 selector nodes.  The circuit itself is evaluated
classically here; quantum behavior enters only through the minimum-
finding emulator driving it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, GuardError
from .qsearch import MINFIND_BUDGET_FACTOR, min_find_with_cost
from .rng import DEFAULT_SEED, derive_seed
from .rpc import FilterFamily, SampleTree, build_sample_tree, leaf_index
from .sieve import QueryLedger, SieveInstance, preprocess

# largest coin space the pipeline enumerates per query; beyond this it
# walks the qualifying leaves directly (there are at most 2^R / 16)
PIPELINE_COIN_GUARD = 2**14


@dataclass(frozen=True, eq=False)
class ComparatorCircuit:
    chains: tuple[np.ndarray, ...]  # bucket contents, insertion order
    mux_arity: int
    d: int

    @property
    def t(self) -> int:
        return self.mux_arity


@dataclass(frozen=True)
class CircuitCost:
    depth: int
    size: int
    width: int


def build_circuit(buckets: Sequence[np.ndarray], d: int | None = None) -> ComparatorCircuit:
    """Hardcode bucket contents into comparator chains.

    Empty buckets are kept as empty chains; they evaluate to the zero
    sentinel.  d is inferred from the first nonempty bucket unless
    given.
    """
    if len(buckets) < 1:
        raise DomainError("build_circuit needs at least one bucket")
    chains = []
    for b in buckets:
        arr = np.asarray(b, dtype=float)
        if arr.size == 0:
            chains.append(None)  # fixed up once d is known
            continue
        if arr.ndim != 2:
            raise DomainError("buckets must be (k, d) arrays")
        if d is None:
            d = arr.shape[1]
        elif arr.shape[1] != d:
            raise DomainError("buckets disagree on dimension")
        chains.append(arr)
    if d is None:
        raise DomainError("all buckets empty; pass d explicitly")
    fixed = tuple(np.empty((0, d)) if c is None else c for c in chains)
    return ComparatorCircuit(fixed, len(fixed), d)


def circuit_eval_index(circuit: ComparatorCircuit, i: int, w: np.ndarray) -> int | None:
    """Chain position of the closest hardcoded vector, None when empty.

    The incumbent survives ties, so the earliest position wins.
    """
    if not 0 <= i < circuit.t:
        raise DomainError(f"chain index {i} outside [0, {circuit.t})")
    chain = circuit.chains[i]
    if chain.shape[0] == 0:
        return None
    w = np.asarray(w, dtype=float)
    d2 = np.sum((chain - w) ** 2, axis=1)
    return int(np.argmin(d2))  # argmin returns the first minimum


def circuit_eval(circuit: ComparatorCircuit, i: int, w: np.ndarray) -> np.ndarray:
    """Closest vector to w in chain i; zero sentinel for an empty chain."""
    pos = circuit_eval_index(circuit, i, w)
    if pos is None:
        return np.zeros(circuit.d)
    return circuit.chains[i][pos].copy()


def circuit_cost(circuit: ComparatorCircuit) -> CircuitCost:
    """Exact stage/node/lane counts under the fixed accounting units."""
    sizes = [c.shape[0] for c in circuit.chains]
    comparators = [max(k - 1, 0) for k in sizes]
    mux_depth = math.ceil(math.log2(circuit.t)) if circuit.t > 1 else 0
    return CircuitCost(
        depth=max(comparators) + mux_depth,
        size=sum(comparators) + (circuit.t - 1),
        width=circuit.t,
    )


def cost_report(circuit: ComparatorCircuit) -> dict:
    cost = circuit_cost(circuit)
    return {
        "t": circuit.t,
        "bucket_sizes": [int(c.shape[0]) for c in circuit.chains],
        "depth": cost.depth,
        "size": cost.size,
        "width": cost.width,
    }


def oracle_prime(
    circuit: ComparatorCircuit, tree: SampleTree, w: np.ndarray, coins
) -> np.ndarray:
    """Coin-driven closest-vector oracle: sample a qualifying filter
    from the tree, then evaluate its chain at w.

    Pure in (circuit, tree, w, coins).  The tree must have been built
    for this same query vector.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (circuit.d,):
        raise DomainError(f"w must have shape ({circuit.d},)")
    if not np.array_equal(tree.v, w):
        raise DomainError("tree was built for a different query vector")
    from .rpc import sample_alpha_close

    return circuit_eval(circuit, sample_alpha_close(tree, coins), w)


# --- QRAM-free sieving pipeline ----------------------------------------------


@dataclass(frozen=True)
class PipelineReport:
    pairs: frozenset[tuple[int, int]]
    oracle_calls: int
    max_calls_per_query: int
    mode: str

    def as_dict(self) -> dict:
        return {
            "pairs": sorted(self.pairs),
            "oracle_calls": self.oracle_calls,
            "max_calls_per_query": self.max_calls_per_query,
            "mode": self.mode,
        }


def _query_values(
    circuit: ComparatorCircuit,
    tree: SampleTree,
    bucket_indices: Sequence[np.ndarray],
    vectors: np.ndarray,
    q: int,
) -> tuple[np.ndarray, list[tuple[int, int] | None]]:
    """Distance seen by each coin outcome, with the pair it would report.

    Self-hits and empty chains are lifted to +inf: the oracle returned
    nothing usable for reduction there.
    """
    R = tree.coin_count
    if 2**R <= PIPELINE_COIN_GUARD:
        ranks = [(x * tree.root_count) >> R for x in range(2**R)]
    else:
        ranks = list(range(tree.root_count))  # walk the leaves directly
    cache: dict[int, tuple[float, tuple[int, int] | None]] = {}
    values = np.empty(len(ranks))
    hits: list[tuple[int, int] | None] = [None] * len(ranks)
    for pos, rank in enumerate(ranks):
        j = leaf_index(tree, rank)
        if j not in cache:
            chain_pos = circuit_eval_index(circuit, j, vectors[q])
            if chain_pos is None:
                cache[j] = (math.inf, None)
            else:
                u_idx = int(bucket_indices[j][chain_pos])
                dist = float(np.linalg.norm(vectors[u_idx] - vectors[q]))
                if u_idx == q or dist <= 1e-12:
                    cache[j] = (math.inf, None)
                else:
                    cache[j] = (dist, (q, u_idx))
        values[pos], hits[pos] = cache[j]
    return values, hits


def pipeline_step(
    instance: SieveInstance,
    family: FilterFamily,
    alpha: float,
    beta: float,
    mode: str = "exhaustive",
    seed: int = DEFAULT_SEED,
    minfind_runs: int = 1,
) -> PipelineReport:
    """One reduction pass of the memory-free sieve.

    Buckets the whole list at beta and hardcodes it into a circuit.
    Per query vector w, the qualifying-filter tree at alpha defines the
    coin space; the reported candidate is the reducing pair of smallest
    distance over all coins (exhaustive mode) or the one min_find lands
    on (minfind mode, simulated on the materialized value list).  A
    pair qualifies when 0 < ||w - u|| <= shrink_factor * radius.
    """
    if instance.mode != "norm":
        raise DomainError("pipeline_step needs a norm-mode instance")
    if mode not in ("exhaustive", "minfind"):
        raise DomainError(f"mode must be exhaustive or minfind, got {mode}")
    if minfind_runs < 1:
        raise DomainError("minfind_runs must be >= 1")
    ledger = QueryLedger()
    buckets = preprocess(instance, family, beta, ledger)
    chains = [instance.vectors[idx] for idx in buckets.B]
    circ = build_circuit(chains, d=instance.d)
    dirs = instance.directions()
    bound = instance.shrink_factor * instance.radius

    pairs: set[tuple[int, int]] = set()
    total_calls = 0
    max_calls = 0
    for q in range(instance.n):
        tree = build_sample_tree(family, dirs[q], alpha)
        if tree.root_count == 0:
            continue
        values, hits = _query_values(circ, tree, buckets.B, instance.vectors, q)
        if mode == "exhaustive":
            calls = values.size
            best = int(np.argmin(values))
        else:
            calls = 0
            found = []
            for r in range(minfind_runs):
                idx, spent = min_find_with_cost(values, derive_seed(seed, q * 131 + r))
                calls += spent
                found.append(idx)
            best = min(found, key=lambda i: (values[i], i))
        total_calls += int(calls)
        max_calls = max(max_calls, int(calls))
        if hits[best] is not None and values[best] <= bound + 1e-9:
            pairs.add(hits[best])
    return PipelineReport(frozenset(pairs), total_calls, max_calls, mode)
