"""Asymptotic cost models for filtered sieving, in rate space.

A "rate" is the per-dimension base-2 exponent of a quantity scaling as
2^{r d + o(d)}.  All models below are expressed as a small list of term
rates whose maximum is the running-time rate; products of exponential
quantities become sums of rates and sums become maxima, so nothing
exponential is ever materialised.

Fixed ingredients, with n = 0.20752 the list-size rate:

    classical   n t C(beta) + n t C(alpha) + n^2 t C(alpha) C(beta)
    t1          third term amplified: n sqrt(n t C(alpha) C(beta))
    t2          third term divided by sqrt(memory) gamma^{d/2}
    t3          third term divided by gamma^d, falling back to the
                square-root form once memory saturates
    t4          bucket phase amplified as one bracket: n sqrt(t C(alpha)
                + n t C(alpha) C(beta))
    t5          the t4 bracket divided by gamma^{d/2}
    noqram      bucket phase amplified with a circuit-style filter
                oracle and no addressable memory at all

gamma_rate is log2(gamma) for memory budget gamma^d.  Admissible
budgets never exceed the search space the model actually touches;
optimize() treats excess budget as unused, which is what makes the
trade-off curves saturate and go flat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import DomainError, RangeError
from .geometry import LIST_SIZE_RATE, cap_rate, t_rate

N_RATE = LIST_SIZE_RATE

MODELS = ("classical", "t1", "t2", "t3", "t4", "t5", "noqram")
_GAMMA_MODELS = ("t2", "t3", "t5")

# saturation ends of the closed-form curves (gamma, not gamma_rate)
T2_GAMMA_MAX = 13.0 / 12.0
T3_GAMMA_MAX = math.sqrt(13.0 / 12.0)
T5_GAMMA_MAX = 1.07122

# reference sieve-time rates used by the block-reduction plots
SIEVE_RATE_NOQRAM = 0.2925
SIEVE_RATE_FULLQRAM = 0.2563


@dataclass(frozen=True)
class TradeoffPoint:
    model: str
    gamma_rate: float
    alpha: float
    beta: float
    t_rate: float
    time_rate: float
    qram_rate: float
    term_rates: tuple[float, ...]


def _check_model(model: str) -> None:
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}; expected one of {MODELS}")


def _gamma_bound(model: str, t: float, ca: float, cb: float) -> float:
    """Largest useful memory rate for the model at this (alpha, beta)."""
    space = N_RATE + t + ca + cb
    if model == "t2":
        return max(space, 0.0)
    if model == "t3":
        return max(space / 2.0, 0.0)
    if model == "t5":
        return max(max(t + ca, space), 0.0)
    return 0.0


def _terms(model: str, t: float, ca: float, cb: float, sigma: float) -> tuple[float, ...]:
    n = N_RATE
    space = n + t + ca + cb
    if model == "classical":
        return (n + t + cb, n + t + ca, n + space)
    if model == "t1":
        return (n + t + cb, n + t + ca, n + space / 2.0)
    if model == "t2":
        return (n + t + cb, n + t + ca, n + space - sigma / 2.0)
    if model == "t3":
        if sigma <= space / 2.0:
            return (n + t + cb, n + t + ca, n + space - sigma)
        return (n + t + cb, n + t + ca, n + space / 2.0)
    if model == "t4":
        return (n + t + cb, n + (t + ca) / 2.0, n + space / 2.0)
    if model == "t5":
        return (n + t + cb, n + t + ca - sigma / 2.0, n + space - sigma / 2.0)
    if model == "noqram":
        return (n + t + cb, n + (t + ca) / 2.0 + max(0.0, n + cb))
    raise DomainError(f"unknown model {model!r}")


def model_terms(
    model: str, alpha: float, beta: float, gamma_rate: float = 0.0
) -> tuple[float, ...]:
    """Term rates of the model at (alpha, beta) and memory rate gamma_rate.

    The running-time rate is max(terms).  Raises RangeError when
    gamma_rate exceeds what the model can address at this point; the
    error carries the admissible bound.
    """
    _check_model(model)
    if gamma_rate < 0.0:
        raise DomainError(f"gamma_rate must be >= 0, got {gamma_rate}")
    t = t_rate(alpha, beta)
    if math.isinf(t):
        raise DomainError(f"no admissible filters at alpha={alpha}, beta={beta}")
    ca, cb = cap_rate(alpha), cap_rate(beta)
    if model in _GAMMA_MODELS:
        bound = _gamma_bound(model, t, ca, cb)
        if model != "t3" and gamma_rate > bound + 1e-12:
            raise RangeError(
                f"gamma_rate {gamma_rate} exceeds admissible bound {bound} "
                f"for model {model!r} at alpha={alpha}, beta={beta}",
                bound=bound,
            )
    elif gamma_rate != 0.0:
        raise RangeError(
            f"model {model!r} takes no memory budget; gamma_rate must be 0",
            bound=0.0,
        )
    return _terms(model, t, ca, cb, gamma_rate)


def _objective(model: str, sigma: float) -> Callable[[float, float], float]:
    def f(a: float, b: float) -> float:
        if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
            return math.inf
        u = 1.0 - (4.0 / 3.0) * (a * a - a * b + b * b)
        if u <= 0.0:
            return math.inf
        t = -0.5 * math.log2(u)
        ca = 0.5 * math.log2(1.0 - a * a)
        cb = 0.5 * math.log2(1.0 - b * b)
        s_eff = min(sigma, _gamma_bound(model, t, ca, cb)) if model in _GAMMA_MODELS else 0.0
        return max(_terms(model, t, ca, cb, s_eff))

    return f


def _grid_seed(model: str, sigma: float) -> tuple[float, float]:
    a = np.arange(0.05, 0.9501, 0.01)
    A, B = np.meshgrid(a, a, indexing="ij")
    U = 1.0 - (4.0 / 3.0) * (A * A - A * B + B * B)
    ok = U > 0.0
    T = np.full_like(A, np.inf)
    T[ok] = -0.5 * np.log2(U[ok])
    CA = 0.5 * np.log2(1.0 - A * A)
    CB = 0.5 * np.log2(1.0 - B * B)
    n = N_RATE
    space = n + T + CA + CB
    if model in _GAMMA_MODELS:
        if model == "t2":
            bound = np.maximum(space, 0.0)
        elif model == "t3":
            bound = np.maximum(space / 2.0, 0.0)
        else:
            bound = np.maximum(np.maximum(T + CA, space), 0.0)
        S = np.minimum(sigma, bound)
    else:
        S = np.zeros_like(A)
    if model == "classical":
        val = np.maximum(n + T + CB, np.maximum(n + T + CA, n + space))
    elif model == "t1":
        val = np.maximum(n + T + CB, np.maximum(n + T + CA, n + space / 2.0))
    elif model == "t2":
        val = np.maximum(n + T + CB, np.maximum(n + T + CA, n + space - S / 2.0))
    elif model == "t3":
        third = np.where(S <= space / 2.0, n + space - S, n + space / 2.0)
        val = np.maximum(n + T + CB, np.maximum(n + T + CA, third))
    elif model == "t4":
        val = np.maximum(n + T + CB, np.maximum(n + (T + CA) / 2.0, n + space / 2.0))
    elif model == "t5":
        val = np.maximum(
            n + T + CB, np.maximum(n + T + CA - S / 2.0, n + space - S / 2.0)
        )
    else:  # noqram
        val = np.maximum(n + T + CB, n + (T + CA) / 2.0 + np.maximum(0.0, n + CB))
    val[~ok] = np.inf
    i, j = np.unravel_index(int(np.argmin(val)), val.shape)
    return float(A[i, j]), float(B[i, j])


def optimize(model: str, gamma_rate: float = 0.0) -> TradeoffPoint:
    """Minimise the running-time rate over (alpha, beta).

    Coarse 0.01 grid over (0.05, 0.95)^2 seeds a Nelder-Mead refinement
    of the max-of-terms objective down to 1e-8 in rate.  Budget beyond
    what the model can address at a point is simply left unused, so the
    returned qram_rate never exceeds the admissible bound.
    """
    _check_model(model)
    if gamma_rate < 0.0:
        raise DomainError(f"gamma_rate must be >= 0, got {gamma_rate}")
    if model not in _GAMMA_MODELS and gamma_rate != 0.0:
        raise RangeError(
            f"model {model!r} takes no memory budget; gamma_rate must be 0", bound=0.0
        )
    f = _objective(model, gamma_rate)
    x0 = _grid_seed(model, gamma_rate)
    best = x0
    for _ in range(2):  # restart once; max() objectives can stall a simplex
        res = minimize(
            lambda x: f(x[0], x[1]),
            np.asarray(best),
            method="Nelder-Mead",
            options=dict(xatol=1e-10, fatol=1e-12, maxiter=4000, maxfev=8000),
        )
        best = (float(res.x[0]), float(res.x[1]))
    a, b = best
    t = t_rate(a, b)
    ca, cb = cap_rate(a), cap_rate(b)
    if model in _GAMMA_MODELS:
        s_eff = min(gamma_rate, _gamma_bound(model, t, ca, cb))
    else:
        s_eff = 0.0
    terms = _terms(model, t, ca, cb, s_eff)
    if model == "t1":
        qram = N_RATE + t + ca + cb
    elif model == "t4":
        qram = max(t + ca, N_RATE + t + ca + cb)
    else:
        qram = s_eff
    return TradeoffPoint(
        model=model,
        gamma_rate=gamma_rate,
        alpha=a,
        beta=b,
        t_rate=t,
        time_rate=max(terms),
        qram_rate=qram,
        term_rates=terms,
    )


def tradeoff_curve(model: str, gamma_rates: Iterable[float]) -> list[TradeoffPoint]:
    """optimize() along a memory-rate grid."""
    return [optimize(model, s) for s in gamma_rates]


def closed_form_rate(model: str, gamma: float) -> float:
    """Closed-form optimum time rate at memory gamma^d, for the three
    memory-bounded models.  gamma runs over the model's admissible
    interval starting at 1 (no memory)."""
    eps = 1e-9
    if model == "t2":
        if not 1.0 - eps <= gamma <= T2_GAMMA_MAX + eps:
            raise RangeError(f"t2 needs gamma in [1, {T2_GAMMA_MAX}]", bound=T2_GAMMA_MAX)
        return 0.5 * math.log2(3.0 * gamma / (3.0 * gamma - 1.0))
    if model == "t3":
        if not 1.0 - eps <= gamma <= T3_GAMMA_MAX + eps:
            raise RangeError(f"t3 needs gamma in [1, {T3_GAMMA_MAX}]", bound=T3_GAMMA_MAX)
        g2 = gamma * gamma
        return 0.5 * math.log2(3.0 * g2 / (3.0 * g2 - 1.0))
    if model == "t5":
        if not 1.0 - eps <= gamma <= T5_GAMMA_MAX + eps:
            raise RangeError(f"t5 needs gamma in [1, {T5_GAMMA_MAX}]", bound=T5_GAMMA_MAX)
        return -0.5 * math.log2(gamma - 2.0 / 3.0 + (2.0 / 3.0) * math.sqrt(1.0 - 0.75 * gamma))
    raise DomainError(f"no closed form for model {model!r}")


def lower_bound_rate(s_rate: float) -> float:
    """Query lower bound for sieving with memory rate s_rate;
    max(0, 0.29248 - 2 s)."""
    if s_rate < 0.0:
        raise DomainError(f"s_rate must be >= 0, got {s_rate}")
    return max(0.0, 0.5 * math.log2(1.5) - 2.0 * s_rate)


def blocked_search_rate(m_rate: float, s_rate: float) -> float:
    """Rate of blocked search over 2^{m d} items with memory 2^{s d}:
    m - s/2 for 0 <= s <= m."""
    if not 0.0 <= s_rate <= m_rate:
        raise DomainError(f"need 0 <= s_rate <= m_rate, got s={s_rate}, m={m_rate}")
    return m_rate - s_rate / 2.0


# ---------------------------------------------------------------------------
# No-QRAM curve: minimise the noqram model at a fixed filter rate.


@dataclass(frozen=True)
class NoQRAMPoint:
    t_rate: float
    alpha: float
    beta: float
    time_rate: float


def _noqram_time(a: float, b: float, tau: float) -> float:
    n = N_RATE
    ca, cb = cap_rate(a), cap_rate(b)
    return max(n + tau + cb, n + (tau + ca) / 2.0 + max(0.0, n + cb))


def _noqram_branch(beta: float, c: float, tau: float, sign: float) -> float:
    disc = 4.0 * c - 3.0 * beta * beta
    if disc < 0.0:
        return math.inf
    a = (beta + sign * math.sqrt(disc)) / 2.0
    if not 0.0 < a < 1.0 or not 0.0 < beta < 1.0:
        return math.inf
    return _noqram_time(a, beta, tau)


def noqram_point(tau: float) -> NoQRAMPoint:
    """Best (alpha, beta) for the noqram model at filter rate tau."""
    if not 0.0 <= tau <= N_RATE + 1e-12:
        raise DomainError(f"t_rate must lie in [0, {N_RATE:.6f}], got {tau}")
    if tau == 0.0:
        # only alpha = beta = 0 gives a single filter
        return NoQRAMPoint(0.0, 0.0, 0.0, 2.0 * N_RATE)
    c = 0.75 * (1.0 - 2.0 ** (-2.0 * tau))
    bmax = math.sqrt(4.0 * c / 3.0)
    best: tuple[float, float, float] | None = None
    grid = np.linspace(1e-6, bmax - 1e-12, 600)
    for sign in (1.0, -1.0):
        vals = [_noqram_branch(b, c, tau, sign) for b in grid]
        k = int(np.argmin(vals))
        lo = grid[max(0, k - 1)]
        hi = grid[min(len(grid) - 1, k + 1)]
        res = minimize_scalar(
            lambda b: _noqram_branch(b, c, tau, sign),
            bounds=(lo, hi),
            method="bounded",
            options=dict(xatol=1e-12),
        )
        cand = (float(res.fun), float(res.x), sign)
        if best is None or cand[0] < best[0]:
            best = cand
    val, b, sign = best
    a = (b + sign * math.sqrt(max(0.0, 4.0 * c - 3.0 * b * b))) / 2.0
    return NoQRAMPoint(tau, a, b, val)


def noqram_curve(t_rates: Iterable[float]) -> list[NoQRAMPoint]:
    pts = [noqram_point(float(tau)) for tau in t_rates]
    return pts


def fit_noqram_curve(points: Sequence[NoQRAMPoint]) -> tuple[float, float]:
    """Least-squares (slope, intercept) of time_rate against t_rate."""
    x = np.array([p.t_rate for p in points])
    y = np.array([p.time_rate for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


# ---------------------------------------------------------------------------
# Block-reduction context: enumeration vs sieve cost per dimension.


def enum_rate(k: float) -> float:
    """Per-dimension enumeration exponent at block size k (k >= 70)."""
    if k < 70:
        raise DomainError(f"enum_rate needs k >= 70, got {k}")
    return (k * math.log(k) / (8.0 * math.log(2.0)) - 0.547 * k + 10.4) / (2.0 * k)


def bkz_crossover(target_rate: float, k_lo: float = 70.0, k_hi: float = 4000.0) -> float:
    """Smallest k >= 70 with enum_rate(k) >= target_rate (bisection)."""
    if enum_rate(k_lo) >= target_rate:
        return k_lo
    if enum_rate(k_hi) < target_rate:
        raise DomainError(f"enum_rate stays below {target_rate} up to k={k_hi}")
    lo, hi = k_lo, k_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if enum_rate(mid) >= target_rate:
            hi = mid
        else:
            lo = mid
    return hi


def bkz_curves(ks: Iterable[float]) -> list[tuple[float, float, float, float]]:
    """Rows (k, enum_rate, sieve rate without QRAM, with full QRAM)."""
    return [(float(k), enum_rate(k), SIEVE_RATE_NOQRAM, SIEVE_RATE_FULLQRAM) for k in ks]


# ---------------------------------------------------------------------------
# Symmetric-key trade-offs (collision search and multi-target preimage),
# in bits rather than rates: n here is the key length in bits.


def log2_sum(a: float, b: float) -> float:
    """log2(2^a + 2^b), computed stably as max + log2(1 + 2^{min-max})."""
    return float(np.logaddexp2(a, b))


def collision_cost(n: float, l: float, r: float, gamma: float) -> float:
    """Bits of work for collision search with list 2^l, prefix 2^r and
    memory 2^gamma: log2(2^{l+r/2} + 2^{(n-r-l)/2}(2^{r/2} + 2^{l-gamma}))."""
    if min(n, l, r) < 0 or l + r > n:
        raise DomainError("collision_cost needs l, r >= 0 and l + r <= n")
    if not 0.0 <= gamma <= l:
        raise RangeError(f"collision memory gamma must be in [0, l={l}]", bound=l)
    setup = l + r / 2.0
    probe = (n - r - l) / 2.0 + log2_sum(r / 2.0, l - gamma)
    return log2_sum(setup, probe)


@dataclass(frozen=True)
class CollisionPlan:
    l: float
    r: float
    time_bits: float
    memory_bits: float


def collision_optimize(n: float, gamma: float) -> CollisionPlan:
    """Balanced parameters: l = (n+2g)/5, r = (2n-6g)/5, T = (2n-g)/5."""
    if n <= 0:
        raise DomainError(f"collision_optimize needs n > 0, got {n}")
    if not 0.0 <= gamma <= n / 3.0:
        raise RangeError(f"collision memory gamma must be in [0, n/3]", bound=n / 3.0)
    l = (n + 2.0 * gamma) / 5.0
    r = (2.0 * n - 6.0 * gamma) / 5.0
    return CollisionPlan(l=l, r=r, time_bits=(2.0 * n - gamma) / 5.0, memory_bits=l)


def mtps_cost(n: float, t: float, r: float, gamma: float) -> float:
    """Bits of work for preimage search against 2^t targets:
    log2(2^t + 2^{(n-t)/2}(2^{r/2} + 2^{t-r-gamma}))."""
    if min(n, t, r) < 0 or t > n or r > t:
        raise DomainError("mtps_cost needs 0 <= r <= t <= n")
    if not 0.0 <= gamma <= t - r:
        raise RangeError(f"mtps memory gamma must be in [0, t-r={t - r}]", bound=t - r)
    return log2_sum(t, (n - t) / 2.0 + log2_sum(r / 2.0, t - r - gamma))


@dataclass(frozen=True)
class MTPSPlan:
    r: float
    t_effective: float
    time_bits: float


def mtps_optimize(n: float, t: float, gamma: float) -> MTPSPlan:
    """Balanced prefix r = 2(t-gamma)/3, ignoring targets beyond the
    saturation point t = 3n/7 - 2 gamma / 7."""
    if n <= 0 or not 0.0 <= t <= n:
        raise DomainError(f"mtps_optimize needs 0 <= t <= n, n > 0")
    if not 0.0 <= gamma <= min(t, n / 3.0):
        raise RangeError("mtps memory gamma must be in [0, min(t, n/3)]", bound=min(t, n / 3.0))
    t_cap = 3.0 * n / 7.0 - 2.0 * gamma / 7.0
    if t >= t_cap:
        t_eff = t_cap
        time_bits = t_cap
    else:
        t_eff = t
        time_bits = n / 2.0 - t / 6.0 - gamma / 3.0
    return MTPSPlan(r=2.0 * (t_eff - gamma) / 3.0, t_effective=t_eff, time_bits=time_bits)
