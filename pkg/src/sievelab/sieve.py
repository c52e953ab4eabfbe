"""Bucketed near-neighbor search over sphere vectors, with query ledgers.

Two interchangeable drivers find all pairs at angle <= theta through a
filter family.  query_method inserts every vector into its beta-close
buckets and then, per query vector, tests the contents of its
alpha-close buckets.  fas_method materializes both bucket sides first
and tests every A_i x B_i product.  Both return the same ordered pair
set: (x, y) with x alpha-covered and y beta-covered by a shared filter
and <x, y> >= cos theta.

Every probe is charged to a QueryLedger: filter enumerations cost
1 + |result|, each inner-product test costs 1, insertions are counted
as they happen.  sieve_step turns found pairs into difference vectors
below a shrinking norm bound, which is one round of a list sieve.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, GuardError
from .geometry import cap_volume_exact
from .rng import make_rng
from .rpc import FilterFamily, relevant_filters

BRUTE_FORCE_GUARD = 10**5

_MAGIC = b"SLSI"
_MODE_CODES = {"unit": 0, "norm": 1}


@dataclass(frozen=True, eq=False)
class SieveInstance:
    d: int
    vectors: np.ndarray  # (n, d)
    mode: str  # "unit": all norms 1; "norm": all norms <= radius
    radius: float = 1.0
    theta: float = math.pi / 3
    shrink_factor: float = 1.0

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def directions(self) -> np.ndarray:
        """Row-normalized view; filter predicates live on the sphere."""
        if self.mode == "unit":
            return self.vectors
        norms = np.linalg.norm(self.vectors, axis=1)
        return self.vectors / norms[:, None]


def make_instance(
    vectors: np.ndarray,
    mode: str = "unit",
    radius: float = 1.0,
    theta: float = math.pi / 3,
    shrink_factor: float = 1.0,
) -> SieveInstance:
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise DomainError("vectors must be a 2-d array")
    n, d = vectors.shape
    if mode not in _MODE_CODES:
        raise DomainError(f"mode must be unit or norm, got {mode!r}")
    if not 0.0 < theta <= math.pi:
        raise DomainError(f"theta must lie in (0, pi], got {theta}")
    if not 0.0 < shrink_factor <= 1.0:
        raise DomainError(f"shrink_factor must lie in (0, 1], got {shrink_factor}")
    norms = np.linalg.norm(vectors, axis=1)
    if n and norms.min() < 1e-12:
        raise DomainError("zero vectors are not sievable")
    if mode == "unit":
        if n and np.abs(norms - 1.0).max() > 1e-9:
            raise DomainError("unit mode needs all norms within 1e-9 of 1")
    else:
        if radius <= 0.0:
            raise DomainError(f"radius must be positive, got {radius}")
        if n and norms.max() > radius + 1e-9:
            raise DomainError("norm mode needs all norms <= radius")
    return SieveInstance(d, vectors, mode, radius, theta, shrink_factor)


def random_instance(
    d: int,
    n: int,
    seed: int,
    mode: str = "unit",
    radius: float = 1.0,
    theta: float = math.pi / 3,
    shrink_factor: float = 1.0,
) -> SieveInstance:
    """n uniform sphere points, scaled to the radius in norm mode."""
    from .geometry import sample_sphere

    pts = sample_sphere(d, make_rng(seed), size=n)
    if mode == "norm":
        pts = pts * radius
    return make_instance(pts, mode, radius, theta, shrink_factor)


@dataclass
class QueryLedger:
    filter_queries: int = 0
    inner_product_queries: int = 0
    insertions: int = 0
    oracle_evals: int = 0
    qram_reloads: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "filter_queries": self.filter_queries,
            "inner_product_queries": self.inner_product_queries,
            "insertions": self.insertions,
            "oracle_evals": self.oracle_evals,
            "qram_reloads": self.qram_reloads,
        }


@dataclass(frozen=True, eq=False)
class Buckets:
    B: tuple[np.ndarray, ...]  # insert side, beta threshold
    A: tuple[np.ndarray, ...] | None = None  # query side, alpha (two-sided prep)


def _check_family(instance: SieveInstance, family: FilterFamily) -> None:
    if family.d != instance.d:
        raise DomainError(f"family dimension {family.d} != instance dimension {instance.d}")


def preprocess(
    instance: SieveInstance, family: FilterFamily, beta: float, ledger: QueryLedger
) -> Buckets:
    """Insert every vector into the buckets of its beta-close filters."""
    _check_family(instance, family)
    dirs = instance.directions()
    lists: list[list[int]] = [[] for _ in range(family.t)]
    for i in range(instance.n):
        close = relevant_filters(family, dirs[i], beta)
        ledger.filter_queries += 1 + len(close)
        ledger.insertions += len(close)
        for j in close:
            lists[j].append(i)
    return Buckets(B=tuple(np.asarray(b, dtype=np.int64) for b in lists))


def query_method(
    instance: SieveInstance,
    family: FilterFamily,
    alpha: float,
    buckets: Buckets,
    ledger: QueryLedger,
) -> set[tuple[int, int]]:
    """Per query vector, test the contents of its alpha-close buckets.

    Returns ordered pairs (x, y), x != y, that share a covering filter
    and pass <x, y> >= cos theta.  Duplicate coverage is de-duplicated
    in the output but every individual test is still charged.
    """
    _check_family(instance, family)
    if len(buckets.B) != family.t:
        raise DomainError("buckets were built for a different family")
    dirs = instance.directions()
    cos_theta = math.cos(instance.theta)
    pairs: set[tuple[int, int]] = set()
    for q in range(instance.n):
        close = relevant_filters(family, dirs[q], alpha)
        ledger.filter_queries += 1 + len(close)
        if not close:
            continue
        cand = np.concatenate([buckets.B[i] for i in close])
        ledger.inner_product_queries += int(cand.size)
        if not cand.size:
            continue
        hits = cand[dirs[cand] @ dirs[q] >= cos_theta]
        pairs.update((q, int(y)) for y in hits if int(y) != q)
    return pairs


def fas_method(
    instance: SieveInstance,
    family: FilterFamily,
    alpha: float,
    beta: float,
    ledger: QueryLedger,
) -> set[tuple[int, int]]:
    """Bucket both sides first, then test every A_i x B_i product.

    Same pair set as query_method on the same family; the ledger follows
    the two-sided loop structure instead (both preparations, then
    sum_i |A_i| * |B_i| inner products).
    """
    _check_family(instance, family)
    bk = preprocess(instance, family, beta, ledger)
    dirs = instance.directions()
    a_lists: list[list[int]] = [[] for _ in range(family.t)]
    for i in range(instance.n):
        close = relevant_filters(family, dirs[i], alpha)
        ledger.filter_queries += 1 + len(close)
        ledger.insertions += len(close)
        for j in close:
            a_lists[j].append(i)
    cos_theta = math.cos(instance.theta)
    pairs: set[tuple[int, int]] = set()
    for i in range(family.t):
        a = np.asarray(a_lists[i], dtype=np.int64)
        b = bk.B[i]
        ledger.inner_product_queries += int(a.size * b.size)
        if not a.size or not b.size:
            continue
        dots = dirs[a] @ dirs[b].T
        for ai, bi in zip(*np.nonzero(dots >= cos_theta)):
            x, y = int(a[ai]), int(b[bi])
            if x != y:
                pairs.add((x, y))
    return pairs


def brute_force_pairs(
    instance: SieveInstance, theta: float | None = None
) -> set[tuple[int, int]]:
    """Exact ordered close-pair set by full scan over normalized vectors."""
    if instance.n > BRUTE_FORCE_GUARD:
        raise GuardError(f"brute force refuses n > {BRUTE_FORCE_GUARD}")
    cos_theta = math.cos(instance.theta if theta is None else theta)
    dirs = instance.directions()
    pairs: set[tuple[int, int]] = set()
    for start in range(0, instance.n, 512):
        block = dirs[start : start + 512]
        dots = block @ dirs.T
        for bi, y in zip(*np.nonzero(dots >= cos_theta)):
            x = start + int(bi)
            if x != int(y):
                pairs.add((x, int(y)))
    return pairs


def sieve_step(
    instance: SieveInstance,
    family: FilterFamily,
    alpha: float,
    beta: float,
    shrink_factor: float | None = None,
    ledger: QueryLedger | None = None,
) -> np.ndarray:
    """One list-sieve round: emit differences of found reducing pairs.

    Pairs come from query_method at the instance angle; a pair counts
    as reducing when ||v - w|| <= shrink_factor * radius exactly.  Zero
    differences are dropped, so identical inputs produce nothing.
    """
    if instance.mode != "norm":
        raise DomainError("sieve_step needs a norm-mode instance")
    shrink = instance.shrink_factor if shrink_factor is None else shrink_factor
    if not 0.0 < shrink <= 1.0:
        raise DomainError(f"shrink_factor must lie in (0, 1], got {shrink}")
    if ledger is None:
        ledger = QueryLedger()
    buckets = preprocess(instance, family, beta, ledger)
    pairs = query_method(instance, family, alpha, buckets, ledger)
    bound = shrink * instance.radius
    out = []
    for x, y in sorted(pairs):
        diff = instance.vectors[x] - instance.vectors[y]
        norm = float(np.linalg.norm(diff))
        if 1e-12 < norm <= bound + 1e-9:
            out.append(diff)
    if not out:
        return np.empty((0, instance.d))
    return np.asarray(out)


@dataclass(frozen=True)
class ExpectedLedger:
    insert_coverage: float  # n t C(beta): bucket insertions
    query_coverage: float  # n t C(alpha): query-side filter hits
    inner_products: float  # n^2 t C(alpha) C(beta): pairwise tests

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.insert_coverage, self.query_coverage, self.inner_products)


def expected_ledger(n: int, t: int, alpha: float, beta: float, d: int) -> ExpectedLedger:
    """Mean-field counter forecast from exact cap volumes."""
    ca = cap_volume_exact(d, alpha)
    cb = cap_volume_exact(d, beta)
    return ExpectedLedger(n * t * cb, n * t * ca, float(n) * n * t * ca * cb)


# --- serialization -----------------------------------------------------------


def save_instance(instance: SieveInstance, path: str) -> None:
    """Header (mode, d, n, radius, theta, shrink) then '<f8' vectors."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(
            struct.pack(
                "<BIIddd",
                _MODE_CODES[instance.mode],
                instance.d,
                instance.n,
                instance.radius,
                instance.theta,
                instance.shrink_factor,
            )
        )
        fh.write(np.ascontiguousarray(instance.vectors, dtype="<f8").tobytes())


def load_instance(path: str) -> SieveInstance:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise DomainError(f"{path} is not a sieve-instance file")
        code, d, n, radius, theta, shrink = struct.unpack("<BIIddd", fh.read(33))
        mode = {v: k for k, v in _MODE_CODES.items()}.get(code)
        if mode is None:
            raise DomainError(f"unknown mode code {code}")
        vectors = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d)
    return SieveInstance(d, vectors.copy(), mode, radius, theta, shrink)
