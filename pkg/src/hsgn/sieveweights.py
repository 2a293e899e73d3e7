"""Brun-type sieve support, truncated inclusion-exclusion, and mollifiers.

The support set D+ contains 1 together with the squarefree numbers
d = p1 ... pr, factors strictly descending, whose odd-position factors obey
p_m <= y_m for the geometric exponent schedule
y_m = y ** ((1/2) (1 - gamma^2) gamma^(m-1)). Truncating Moebius inversion
to D+ gives rho+(n) = sum of mu(d) over divisors d in D+, which is
nonnegative and dominates the indicator of numbers free of prime factors
up to y.

On top of rho+ sit three window weights for a multiplicative |lambda|:

  w(n)  = sum over n = ab, a <= y squarefree, lambda(a) != 0, (a, b) = 1
          of rho+(b) |lambda(b)|,
  w'(n) = the single such term with a the full y-smooth part of n and b
          coprime rough, carrying |lambda(b)| alone,
  w''(n) = sum over r >= 0 of 4^(-r) times the same divisor sum restricted
          to P-(b) > y_(2r+1) and weighted |lambda(b)| 4^omega(b).

w is nonnegative, vanishes unless lambda(n) != 0, and is sandwiched between
w' and w' + w''. The r-th layer of w'' is dominated termwise by the
multiplicative majorant G_r built from local factors at each prime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._primes import factorize, prime_sieve
from .errors import CapacityError
from .multeval import MultiplicativeSpec, evaluate_window

ENUMERATION_LIMIT = 10**7
MAJORANT_WINDOW_LIMIT = 10**6

# Default decay ratio for the exponent schedule.
DEFAULT_GAMMA = 2.0 ** (-1.0 / 100.0)


@dataclass(frozen=True)
class SieveParams:
    """Scale X, smoothness cut y = floor(X^delta), and schedule ratio gamma.

    y and gamma may be overridden explicitly; max_m is the largest m with
    y_m >= 2, or 0 when even y_1 falls below 2.
    """

    X: int
    delta: float = 0.1
    y: Optional[int] = None
    gamma: Optional[float] = None
    max_m: int = field(init=False, default=0)

    def __post_init__(self):
        if self.X < 2:
            raise ValueError("X must be at least 2")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if self.y is None:
            object.__setattr__(self, "y", int(self.X**self.delta + 1e-9))
        if self.y < 1:
            raise ValueError("y must be at least 1")
        if self.gamma is None:
            object.__setattr__(self, "gamma", DEFAULT_GAMMA)
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        m = 0
        while _ym(self.y, self.gamma, m + 1) >= 2.0:
            m += 1
        object.__setattr__(self, "max_m", m)


def _ym(y: int, gamma: float, m: int) -> float:
    return float(y) ** (0.5 * (1.0 - gamma * gamma) * gamma ** (m - 1))


def ym_schedule(params: SieveParams, m: int) -> float:
    """The m-th cut y_m of the schedule, m >= 1."""
    if m < 1:
        raise ValueError("schedule index starts at 1")
    return _ym(params.y, params.gamma, m)


def in_Dplus(d: int, params: SieveParams) -> bool:
    """Membership of d in the support set D+."""
    if d < 1:
        raise ValueError("d must be positive")
    if d == 1:
        return True
    fac = factorize(d)
    if any(e > 1 for _, e in fac):
        return False
    fac = sorted((p for p, _ in fac), reverse=True)
    for m, p in enumerate(fac, start=1):
        if m % 2 == 1 and p > ym_schedule(params, m):
            return False
    return True


def enumerate_Dplus(params: SieveParams) -> list[tuple[int, int]]:
    """All (d, mu(d)) with d in D+, ascending by d."""
    if params.y > ENUMERATION_LIMIT:
        raise CapacityError(f"support enumeration limited to y <= {ENUMERATION_LIMIT}")
    y1 = ym_schedule(params, 1)
    primes = prime_sieve(int(y1))
    out = [(1, 1)]

    def rec(max_idx: int, m: int, d: int, mu: int):
        hi_idx = max_idx
        if m % 2 == 1:
            hi_idx = min(hi_idx, int(np.searchsorted(primes, ym_schedule(params, m), "right")))
        for i in range(hi_idx):
            nd = d * int(primes[i])
            out.append((nd, -mu))
            rec(i, m + 1, nd, -mu)

    rec(primes.size, 1, 1, 1)
    out.sort()
    return out


def rho_plus_window(params: SieveParams, lo: int, hi: int) -> np.ndarray:
    """rho+(n) for n in [lo, hi) as int64, by scattering the support set."""
    if not 1 <= lo < hi:
        raise ValueError("need 1 <= lo < hi")
    out = np.zeros(hi - lo, dtype=np.int64)
    for d, mu in enumerate_Dplus(params):
        start = (-lo) % d
        out[start::d] += mu
    return out


@dataclass
class WeightWindow:
    """Mollifier weights on [lo, hi)."""

    lo: int
    hi: int
    w: np.ndarray
    w_prime: np.ndarray
    w_doubleprime: Optional[np.ndarray] = None


def _admissible_a(params: SieveParams, win) -> list[tuple[int, list[int]]]:
    """(a, prime factors) for a <= y squarefree with lambda(a) != 0."""
    out = []
    for a in range(1, min(params.y, win.hi - 1) + 1):
        fac = factorize(a)
        if any(e > 1 for _, e in fac):
            continue
        if win.signs[a - 1] == 0:
            continue
        out.append((a, [p for p, _ in fac]))
    return out


def _scatter_divisor_sum(lo, hi, a_list, weight_of_b, out):
    """out[n - lo] += weight_of_b[b - 1] over n = ab with (a, b) = 1."""
    for a, ps in a_list:
        bl = -(-lo // a)
        bh = -(-hi // a)
        b = np.arange(bl, bh, dtype=np.int64)
        mask = np.ones(b.size, dtype=bool)
        for p in ps:
            mask &= b % p != 0
        bm = b[mask]
        out[a * bm - lo] += weight_of_b[bm - 1]


def weights_window(
    params: SieveParams, spec: MultiplicativeSpec, lo: int, hi: int
) -> WeightWindow:
    """The weights w and w' on [lo, hi)."""
    if not 1 <= lo < hi:
        raise ValueError("need 1 <= lo < hi")
    win = evaluate_window(spec, 1, hi)
    rho = rho_plus_window(params, 1, hi)
    absv = np.abs(win.values)

    a_list = _admissible_a(params, win)
    w = np.zeros(hi - lo, dtype=np.float64)
    _scatter_divisor_sum(lo, hi, a_list, rho * absv, w)

    # w': strip the full y-smooth part, then demand it be an admissible a.
    width = hi - lo
    smooth = np.ones(width, dtype=np.int64)
    sqfree = np.ones(width, dtype=bool)
    rem = np.arange(lo, hi, dtype=np.int64)
    for p in prime_sieve(min(params.y, hi - 1)).tolist():
        start = (-lo) % p
        idx = np.arange(start, width, p)
        nv = rem[idx]
        pe = np.full(idx.size, p, dtype=np.int64)
        nv //= p
        alive = nv % p == 0
        while alive.any():
            nv[alive] //= p
            pe[alive] *= p
            alive[alive] = nv[alive] % p == 0
        rem[idx] = nv
        smooth[idx] *= pe
        sqfree[idx] &= pe == p
    smooth_ok = (smooth <= params.y) & sqfree
    idx_ok = np.flatnonzero(smooth_ok)
    a_sign = win.signs[smooth[idx_ok] - 1]
    idx_ok = idx_ok[a_sign != 0]
    b = (np.arange(lo, hi, dtype=np.int64)[idx_ok]) // smooth[idx_ok]
    w_prime = np.zeros(width, dtype=np.float64)
    w_prime[idx_ok] = absv[b - 1]
    return WeightWindow(lo, hi, w, w_prime)


@dataclass
class WppDiagnostics:
    """The majorant w'' with its per-layer pieces on [lo, hi)."""

    lo: int
    hi: int
    r0: int
    thresholds: list[float]
    w_doubleprime: np.ndarray
    inner: list[np.ndarray]
    inner_inf: np.ndarray
    majorants: list[np.ndarray]
    window: WeightWindow


def _factor_layout(lo: int, hi: int):
    """Per-prime positions and prime-power parts over [lo, hi).

    Returns (layout, residual) where layout lists (p, idx, pe) for primes up
    to sqrt(hi - 1) and residual[i] is the leftover prime factor above the
    root, or 1.
    """
    width = hi - lo
    rem = np.arange(lo, hi, dtype=np.int64)
    layout = []
    for p in prime_sieve(math.isqrt(hi - 1)).tolist():
        start = (-lo) % p
        idx = np.arange(start, width, p)
        nv = rem[idx]
        pe = np.full(idx.size, p, dtype=np.int64)
        nv //= p
        alive = nv % p == 0
        while alive.any():
            nv[alive] //= p
            pe[alive] *= p
            alive[alive] = nv[alive] % p == 0
        rem[idx] = nv
        layout.append((p, idx, pe))
    return layout, rem


def _majorant_layer(win, layout, residual, lo: int, threshold: float) -> np.ndarray:
    """G_r on [lo, hi) from local factors against the cut threshold.

    Primes below the cut contribute 1 on squarefree positions with nonzero
    eigenvalue and 0 elsewhere; primes above contribute 1 + 4 |lambda(p)| at
    exponent one and 4 |lambda(p^v)| + 4 |lambda(p^(v-1))| at higher v.
    """
    absv = np.abs(win.values)
    g = np.ones(residual.size, dtype=np.float64)
    for p, idx, pe in layout:
        if p < threshold:
            ok = (pe == p) & (win.signs[p - 1] != 0)
            g[idx] *= ok.astype(np.float64)
        else:
            single = pe == p
            f = np.where(
                single,
                1.0 + 4.0 * absv[p - 1],
                4.0 * absv[pe - 1] + 4.0 * absv[pe // p - 1],
            )
            g[idx] *= f
    rough = residual > 1
    q = residual[rough]
    below = q < threshold
    fq = np.where(below, (win.signs[q - 1] != 0).astype(np.float64), 1.0 + 4.0 * absv[q - 1])
    g[rough] *= fq
    return g


def wpp_majorant(
    params: SieveParams, spec: MultiplicativeSpec, lo: int, hi: int
) -> WppDiagnostics:
    """w'' with per-layer inner sums and majorants, verified on [lo, hi).

    Verifies termwise that each inner layer is dominated by its majorant G_r
    and that w <= w' + w'' across the window; violations raise
    AssertionError. The r >= r0 tail, whose cuts are all below 2, collapses
    to the geometric factor (4/3) 4^(-r0) times the unrestricted inner sum.
    """
    if hi - lo > MAJORANT_WINDOW_LIMIT:
        raise CapacityError(f"majorant window limited to {MAJORANT_WINDOW_LIMIT}")
    ww = weights_window(params, spec, lo, hi)
    win = evaluate_window(spec, 1, hi)
    absv = np.abs(win.values)

    r0 = 0
    while ym_schedule(params, 2 * r0 + 1) >= 2.0:
        r0 += 1
    thresholds = [ym_schedule(params, 2 * r + 1) for r in range(r0 + 1)]

    omega = np.zeros(hi - 1, dtype=np.int8)
    for p in prime_sieve(hi - 1).tolist():
        omega[p - 1 :: p] += 1
    four_omega = np.power(4.0, omega, dtype=np.float64)

    a_list = _admissible_a(params, win)
    inner = []
    for r in range(r0):
        t = thresholds[r]
        rough = np.ones(hi - 1, dtype=bool)
        for p in prime_sieve(int(t)).tolist():
            rough[p - 1 :: p] = False
        layer = np.zeros(hi - lo, dtype=np.float64)
        _scatter_divisor_sum(lo, hi, a_list, absv * four_omega * rough, layer)
        inner.append(layer)
    inner_inf = np.zeros(hi - lo, dtype=np.float64)
    _scatter_divisor_sum(lo, hi, a_list, absv * four_omega, inner_inf)

    wpp = (4.0 / 3.0) * 0.25**r0 * inner_inf
    for r in range(r0):
        wpp = wpp + 0.25**r * inner[r]

    layout, residual = _factor_layout(lo, hi)
    majorants = []
    for r in range(r0 + 1):
        g = _majorant_layer(win, layout, residual, lo, thresholds[r])
        majorants.append(g)
        layer = inner[r] if r < r0 else inner_inf
        bad = layer > g * (1.0 + 1e-9) + 1e-12
        if bad.any():
            n = lo + int(np.flatnonzero(bad)[0])
            raise AssertionError(f"majorant domination fails at n = {n}, layer {r}")
    if (ww.w > ww.w_prime + wpp).any():
        n = lo + int(np.flatnonzero(ww.w > ww.w_prime + wpp)[0])
        raise AssertionError(f"sandwich fails at n = {n}")
    ww.w_doubleprime = wpp
    return WppDiagnostics(lo, hi, r0, thresholds, wpp, inner, inner_inf, majorants, ww)
