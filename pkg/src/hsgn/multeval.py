"""Multiplicative extension of prime tables and bulk window evaluation.

A prime table extends to all prime powers through the Hecke recurrence
lambda(p^(v+1)) = lambda(p) lambda(p^v) - lambda(p^(v-1)). Tables with exact
integer backing resolve suspiciously small recurrence values through the
integer form of the same recurrence, so a zero is reported only when the
underlying integer is zero.

Window evaluation is fully vectorized. Windows anchored at 1 factor every n
through a smallest-prime-factor table and assemble values with a fixed-point
gather over cofactors; detached windows strike small primes with stride
slices and resolve the remaining prime cofactors against the table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._primes import factorize, prime_sieve
from .coeffs import PrimeEigenvalueTable
from .errors import CapacityError

# Recurrence values smaller than this trigger exact integer resolution for
# exact-backed tables; plain float values this small are declared zero.
SUSPECT_EPS = 1e-9
ZERO_THRESHOLD = 1e-14


@dataclass
class MultiplicativeSpec:
    """A multiplicative function given by its values on prime powers."""

    prime_power_value: Callable[[int, int], float]
    description: str
    table: Optional[PrimeEigenvalueTable] = None
    sign_at: Optional[Callable[[int, int], int]] = None
    zero_threshold: float = ZERO_THRESHOLD
    # Optional fast path mapping x to (primes <= x, g(p) values).
    prime_vector: Optional[Callable[[int], tuple]] = None

    def value_at(self, n: int) -> float:
        """Value at n >= 1 through the prime factorization."""
        out = 1.0
        for p, e in factorize(n):
            out *= self.prime_power_value(p, e)
        return out


@dataclass
class CoefficientWindow:
    """Values and signs of a multiplicative function on [lo, hi)."""

    lo: int
    hi: int
    values: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        if not 1 <= self.lo < self.hi:
            raise ValueError("need 1 <= lo < hi")
        if self.values.size != self.hi - self.lo or self.signs.size != self.values.size:
            raise ValueError("array lengths must equal hi - lo")

    def at(self, n: int) -> float:
        if not self.lo <= n < self.hi:
            raise IndexError(f"{n} outside [{self.lo}, {self.hi})")
        return float(self.values[n - self.lo])


def spf_table(n: int) -> np.ndarray:
    """Smallest prime factor of every index up to n, as uint32.

    Indices 0 and 1 hold 0. Assigning prime strides in descending order
    leaves the smallest factor written last.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n >= 1 << 32:
        raise CapacityError("spf table limited to 32-bit entries")
    try:
        spf = np.zeros(n + 1, dtype=np.uint32)
        for p in prime_sieve(n)[::-1].tolist():
            spf[p::p] = p
    except MemoryError as exc:
        raise CapacityError(f"spf table of size {n} does not fit in memory") from exc
    return spf


def _exact_power_row(ap: int, p: int, kappa: int, count: int) -> list[int]:
    """Integer a(p^v) for v = 0..count-1 via the unnormalized recurrence."""
    row = [1, ap]
    q = p ** (kappa - 1)
    for _ in range(count - 2):
        row.append(ap * row[-1] - q * row[-2])
    return row[:count]


def hecke_extend(table: PrimeEigenvalueTable) -> MultiplicativeSpec:
    """Extend a prime table to all prime powers through the Hecke recurrence."""
    kappa = table.form.weight
    cache: dict[int, tuple[list[float], list[int]]] = {}
    has_exact = bool(table.exact)
    thr = ZERO_THRESHOLD if not has_exact else 0.0

    def _row(p: int, need: int):
        got = cache.get(p)
        if got is not None and len(got[0]) > need:
            return got
        try:
            lp = table.lambda_at(p)
        except KeyError:
            if p > table.limit:
                raise
            # Below the limit but absent from the table: degenerate local
            # factor, zero at every positive power.
            width = max(need + 1, 2)
            cache[p] = ([1.0] + [0.0] * (width - 1), [1] + [0] * (width - 1))
            return cache[p]
        vals = [1.0, lp]
        for _ in range(max(need - 1, 1)):
            vals.append(lp * vals[-1] - vals[-2])
        ap = table.exact.get(p)
        sgns = []
        if ap is not None:
            ints = _exact_power_row(ap, p, kappa, len(vals))
            sgns = [0 if t == 0 else (1 if t > 0 else -1) for t in ints]
            for i, t in enumerate(ints):
                if t == 0:
                    vals[i] = 0.0
        else:
            sgns = [0 if abs(v) < thr or v == 0.0 else (1 if v > 0 else -1) for v in vals]
        cache[p] = (vals, sgns)
        return cache[p]

    def value(p: int, nu: int) -> float:
        if nu < 0:
            raise ValueError("exponent must be nonnegative")
        if p > table.limit:
            raise ValueError(f"prime {p} beyond table limit {table.limit}")
        vals, _ = _row(p, nu)
        return vals[nu]

    def sign(p: int, nu: int) -> int:
        if p > table.limit:
            raise ValueError(f"prime {p} beyond table limit {table.limit}")
        _, sgns = _row(p, nu)
        return sgns[nu]

    desc = f"hecke extension of a {table.form.kind} table, limit {table.limit}"
    return MultiplicativeSpec(value, desc, table, sign)


def _power_tables(table: PrimeEigenvalueTable, primes: np.ndarray, max_nu: int):
    """lambda(p^v) and its sign for the given table primes, v = 0..max_nu.

    The float recurrence is vectorized across primes; entries that land
    within SUSPECT_EPS of zero are re-resolved through the exact integer
    recurrence when the table carries one, so exact zeros stay exact.
    Primes absent from the table get the degenerate local factor: one at
    exponent zero, zero at every positive power.
    """
    m = primes.size
    lp = np.zeros(m, dtype=np.float64)
    present = np.zeros(m, dtype=bool)
    if table.primes.size:
        idx = np.minimum(np.searchsorted(table.primes, primes), table.primes.size - 1)
        present = table.primes[idx] == primes
        lp[present] = table.lam[idx[present]]
    lam = np.empty((m, max_nu + 1), dtype=np.float64)
    lam[:, 0] = 1.0
    if max_nu >= 1:
        lam[:, 1] = lp
    for v in range(2, max_nu + 1):
        lam[:, v] = lp * lam[:, v - 1] - lam[:, v - 2]
    if not present.all() and max_nu >= 1:
        lam[~present, 1:] = 0.0
    sgn = np.sign(lam).astype(np.int8)
    sgn[np.abs(lam) < ZERO_THRESHOLD] = 0
    sgn[:, 0] = 1
    if not table.exact:
        return lam, sgn
    suspect = np.argwhere(np.abs(lam[:, 1:]) < SUSPECT_EPS)
    kappa = table.form.weight
    for i, j in suspect:
        p = int(primes[i])
        nu = int(j) + 1
        ap = table.exact.get(p)
        if ap is None:
            continue
        ints = _exact_power_row(ap, p, kappa, nu + 1)
        t = ints[nu]
        if t == 0:
            lam[i, nu] = 0.0
            sgn[i, nu] = 0
        else:
            sgn[i, nu] = 1 if t > 0 else -1
    return lam, sgn


def _window_from_one(spec: MultiplicativeSpec, hi: int) -> CoefficientWindow:
    """Values on [1, hi) by smallest-prime-factor waves."""
    n = hi - 1
    table = spec.table
    if table is None:
        raise ValueError("window evaluation requires a table-backed spec")
    if n > table.limit:
        raise CapacityError(f"window reaches {n}, table stops at {table.limit}")
    spf = spf_table(n)
    max_nu = int(math.log2(n)) if n > 1 else 1
    n_idx = np.arange(n + 1, dtype=np.int64)
    spf64 = spf.astype(np.int64)

    # p^v along each index: multiply by spf while it still divides the rest.
    pe = spf64.copy()
    pe[pe == 0] = 1
    nu = np.zeros(n + 1, dtype=np.int8)
    nu[2:] = 1
    while True:
        with np.errstate(divide="ignore"):
            q = n_idx[2:] // pe[2:]
        grow = (q % spf64[2:]) == 0
        if not grow.any():
            break
        pe[2:][grow] *= spf64[2:][grow]
        nu[2:][grow] += 1
    cof = np.ones(n + 1, dtype=np.int64)
    cof[2:] = n_idx[2:] // pe[2:]

    primes = table.primes[: int(np.searchsorted(table.primes, n, side="right"))]
    lam2d, sgn2d = _power_tables(table, primes, max_nu)
    # Sentinel -1 marks primes below the limit that the table omits; their
    # contribution is zero at every positive power.
    prow = np.full(n + 1, -1, dtype=np.int64)
    prow[primes] = np.arange(primes.size)

    base = np.ones(n + 1, dtype=np.float64)
    sbase = np.ones(n + 1, dtype=np.int8)
    if primes.size:
        rows = prow[spf64[2:]]
        miss = rows < 0
        rows[miss] = 0
        base[2:] = lam2d[rows, nu[2:]]
        sbase[2:] = sgn2d[rows, nu[2:]]
        if miss.any():
            base[2:][miss] = 0.0
            sbase[2:][miss] = 0
    elif n >= 2:
        base[2:] = 0.0
        sbase[2:] = 0

    # Fixed-point gather: after k rounds, values are final for all n with at
    # most k distinct prime factors; omega <= 8 below 10^7.
    vals = base.copy()
    sg = sbase.copy()
    for _ in range(9):
        nv = base * vals[cof]
        ns = sbase * sg[cof]
        if np.array_equal(ns, sg) and np.array_equal(nv, vals):
            break
        vals, sg = nv, ns
    return CoefficientWindow(1, hi, vals[1:], sg[1:])


def _window_detached(spec: MultiplicativeSpec, lo: int, hi: int) -> CoefficientWindow:
    """Values on [lo, hi), lo > 1, by striding small primes then cofactors."""
    table = spec.table
    if table is None:
        raise ValueError("window evaluation requires a table-backed spec")
    if hi - 1 > table.limit:
        raise CapacityError(f"window reaches {hi - 1}, table stops at {table.limit}")
    w = hi - lo
    vals = np.ones(w, dtype=np.float64)
    sg = np.ones(w, dtype=np.int8)
    rem = np.arange(lo, hi, dtype=np.int64)

    small = prime_sieve(math.isqrt(hi - 1))
    max_nu = int(math.log2(hi - 1))
    lam2d, sgn2d = _power_tables(table, small, max_nu)
    for i, p in enumerate(small.tolist()):
        start = (-lo) % p
        idx = np.arange(start, w, p)
        nv = rem[idx]
        e = np.zeros(idx.size, dtype=np.int64)
        alive = np.ones(idx.size, dtype=bool)
        while alive.any():
            nv[alive] //= p
            e[alive] += 1
            alive[alive] = nv[alive] % p == 0
        rem[idx] = nv
        vals[idx] *= lam2d[i, e]
        sg[idx] *= sgn2d[i, e]

    # What remains of each n is 1 or a single prime above sqrt(hi); a miss
    # in the table means a degenerate local factor, hence a zero value.
    rough = np.flatnonzero(rem > 1)
    step = 1 << 20
    for a in range(0, rough.size, step):
        sel = rough[a : a + step]
        q = rem[sel]
        j = np.minimum(np.searchsorted(table.primes, q), table.primes.size - 1)
        hit = table.primes[j] == q
        vals[sel] *= np.where(hit, table.lam[j], 0.0)
        sg[sel] *= np.where(hit, table.sgn[j], 0).astype(np.int8)
    return CoefficientWindow(lo, hi, vals, sg)


def evaluate_window(spec: MultiplicativeSpec, lo: int, hi: int) -> CoefficientWindow:
    """Evaluate the function on [lo, hi); signs follow the zero policy."""
    if not 1 <= lo < hi:
        raise ValueError("need 1 <= lo < hi")
    if lo == 1:
        return _window_from_one(spec, hi)
    return _window_detached(spec, lo, hi)


def _prime_values(spec: MultiplicativeSpec, x: int) -> tuple[np.ndarray, np.ndarray]:
    """(primes <= x, g(p)) pairs, vectorized when the spec is table backed."""
    if spec.prime_vector is not None:
        return spec.prime_vector(x)
    if spec.table is not None:
        if x > spec.table.limit:
            raise CapacityError(f"x = {x} beyond table limit {spec.table.limit}")
        cut = int(np.searchsorted(spec.table.primes, x, side="right"))
        return spec.table.primes[:cut], spec.table.lam[:cut]
    primes = prime_sieve(x)
    vals = np.array([spec.prime_power_value(int(p), 1) for p in primes], dtype=np.float64)
    return primes, vals


def halasz_bound(spec: MultiplicativeSpec, x: int) -> float:
    """x * exp(-D(x)/4) with D(x) = sum over p <= x of (1 - g(p))/p.

    The spec must be real valued with |g(p)| <= 1; values outside that range
    raise ValueError.
    """
    if x < 2:
        raise ValueError("x must be at least 2")
    primes, vals = _prime_values(spec, x)
    if primes.size == 0:
        return float(x)
    if float(np.abs(vals).max()) > 1.0:
        raise ValueError("bound requires |g(p)| <= 1 for all primes")
    d = float(np.sum((1.0 - vals) / primes))
    return x * math.exp(-0.25 * d)


def sign_spec(spec: MultiplicativeSpec) -> MultiplicativeSpec:
    """The sign of spec, as a multiplicative function on prime powers.

    Signs do not satisfy the Hecke recurrence, so the result carries no
    table; bulk prime values go through a dedicated vector fast path and
    windows of signs come from the signs array of a value window.
    """
    table = spec.table
    inner_sign = spec.sign_at

    def value(p: int, nu: int) -> float:
        if inner_sign is not None:
            return float(inner_sign(p, nu))
        v = spec.prime_power_value(p, nu)
        return 0.0 if abs(v) < spec.zero_threshold else float(np.sign(v))

    vector = None
    if table is not None:

        def vector(x: int):
            if x > table.limit:
                raise CapacityError(f"x = {x} beyond table limit {table.limit}")
            cut = int(np.searchsorted(table.primes, x, side="right"))
            return table.primes[:cut], table.sgn[:cut].astype(np.float64)

    return MultiplicativeSpec(
        value, f"sign of ({spec.description})", None, inner_sign, prime_vector=vector
    )


def euler_product_M(spec: MultiplicativeSpec, p_trunc: int) -> tuple[float, Optional[float]]:
    """Truncated Euler product prod (1 - 1/p) sum_v g(p^v)/p^v over p <= p_trunc.

    Local factors accumulate terms until p^v exceeds 1e15 or the term drops
    below 1e-18. Returns the product and a crude tail bound
    sum over table primes beyond p_trunc of |g(p) - 1|/p when the table
    extends past the truncation, else None.
    """
    out = 1.0
    for p in prime_sieve(p_trunc).tolist():
        local = 1.0
        pv = 1.0
        v = 1
        while True:
            pv *= p
            if pv > 1e15:
                break
            term = spec.prime_power_value(p, v) / pv
            local += term
            if abs(term) < 1e-18:
                break
            v += 1
        out *= (1.0 - 1.0 / p) * local
    tail = None
    if spec.table is not None and spec.table.limit > p_trunc:
        primes = spec.table.primes
        sel = primes > p_trunc
        tail = float(np.sum(np.abs(spec.table.lam[sel] - 1.0) / primes[sel]))
    return out, tail


def density_nonzero(table: PrimeEigenvalueTable, x: int) -> tuple[float, float, float]:
    """Vanishing-prime products controlling the density of nonzero values.

    Returns (lower, upper, k_x) where lower = prod (1 - 1/p) and
    k_x = prod (1 + 1/p) over vanishing primes p <= x, and upper = 1/k_x.
    With no vanishing primes all three are 1.
    """
    if x > table.limit:
        raise CapacityError(f"x = {x} beyond table limit {table.limit}")
    cut = int(np.searchsorted(table.primes, x, side="right"))
    p = table.primes[:cut][table.sgn[:cut] == 0].astype(np.float64)
    lower = float(np.prod(1.0 - 1.0 / p)) if p.size else 1.0
    k_x = float(np.prod(1.0 + 1.0 / p)) if p.size else 1.0
    return lower, 1.0 / k_x, k_x
