"""Sign statistics, windowed sums, moments, and distribution checks.

Everything here consumes coefficient windows and weight windows produced by
the evaluation and sieve modules. The certification logic for short
intervals rests on two facts: the weight w is nonnegative and supported on
nonzero eigenvalues, and w' is a pointwise lower bound for w. If every
nonzero eigenvalue in a window shared one sign s, the signed sum S1 would
equal s times the full weight mass, which is at least S2 = sum of w'; hence
|S1| < S2 certifies a sign change inside the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calibration import load_calibration
from .errors import CapacityError
from .multeval import CoefficientWindow, MultiplicativeSpec, density_nonzero, evaluate_window
from .sieveweights import SieveParams, weights_window


@dataclass
class SignReport:
    """Counts over n <= X, with optional adjacent-pair statistics."""

    X: int
    n_pos: int
    n_neg: int
    n_zero: int
    sign_changes: Optional[int] = None
    chowla_sum: Optional[int] = None


@dataclass
class IntervalScanReport:
    X: int
    h: float
    K: int
    samples: int
    frac_S1_small: float
    frac_S2_large: float
    frac_certified_sign_change: float
    empirical_c: float
    empirical_C: float


@dataclass
class MomentReport:
    """First and second weight moments over [X, 2X), density normalized."""

    X: int
    m1_wprime: float
    m2_wprime: float
    m2_w: float
    normalizer: float


def _require_from_one(window: CoefficientWindow):
    if window.lo != 1:
        raise ValueError("this statistic needs a window starting at 1")


def sign_counts(window: CoefficientWindow) -> SignReport:
    """Sign tallies over n in [1, hi)."""
    _require_from_one(window)
    s = window.signs
    return SignReport(
        X=window.hi - 1,
        n_pos=int((s > 0).sum()),
        n_neg=int((s < 0).sum()),
        n_zero=int((s == 0).sum()),
    )


def sign_changes(window: CoefficientWindow) -> int:
    """Adjacent sign changes along the window, zeros skipped."""
    s = window.signs[window.signs != 0]
    if s.size < 2:
        return 0
    return int((s[1:] != s[:-1]).sum())


def chowla_correlation(window: CoefficientWindow) -> int:
    """Sum of sgn(lambda(n)) sgn(lambda(n+1)) over the window."""
    s = window.signs.astype(np.int64)
    return int((s[:-1] * s[1:]).sum())


def full_sign_report(window: CoefficientWindow) -> SignReport:
    """Counts, sign changes, and the adjacent correlation in one pass."""
    rep = sign_counts(window)
    rep.sign_changes = sign_changes(window)
    rep.chowla_sum = chowla_correlation(window)
    return rep


def interval_scan(
    params: SieveParams,
    spec: MultiplicativeSpec,
    h: float,
    K: int,
    samples: int = 1000,
    seed: int = 0,
    C: Optional[float] = None,
    c: Optional[float] = None,
    exhaustive: bool = False,
    with_details: bool = False,
):
    """Windowed signed sums S1 and certification mass S2 over [X, 2X].

    Windows start at sampled integers x and run through x + floor(h k(X)),
    where k(X) stretches for vanishing eigenvalues. Thresholds default to
    the calibrated constants: S1 counts as small below C K sqrt(h), S2 as
    large above c h. A window is certified when |S1| < S2.
    """
    table = spec.table
    if table is None:
        raise ValueError("interval scan requires a table-backed spec")
    X = params.X
    if h < 1:
        raise ValueError("h must be at least 1")
    calib = load_calibration()
    if C is None:
        C = float(calib.get("scan_C", 2.0))
    if c is None:
        c = float(calib.get("scan_c", 0.05))
    k_x = density_nonzero(table, X)[2]
    width = int(math.floor(h * k_x)) + 1
    hi = 2 * X + width + 1
    ww = weights_window(params, spec, X, hi)
    win = evaluate_window(spec, X, hi)

    t1 = win.signs.astype(np.float64) * ww.w
    p1 = np.concatenate([[0.0], np.cumsum(t1)])
    p2 = np.concatenate([[0.0], np.cumsum(ww.w_prime)])
    pm = np.concatenate([[0.0], np.cumsum(ww.w)])
    if exhaustive:
        xs = np.arange(X, 2 * X + 1, dtype=np.int64)
    else:
        rng = np.random.Generator(np.random.Philox([seed, 0x5CA9]))
        xs = rng.integers(X, 2 * X + 1, size=samples, dtype=np.int64)
    off = xs - X
    s1 = p1[off + width] - p1[off]
    s2 = p2[off + width] - p2[off]

    abs1 = np.abs(s1)
    # A window whose eigenvalues all share one sign has |S1| = sum w >= sum
    # w' = S2 exactly, so it must never be certified; the margin keeps
    # prefix-sum roundoff from flipping that comparison when it is a tie.
    tol = 32.0 * np.finfo(np.float64).eps * (
        1.0 + pm[off + width] + pm[off] + p2[off + width] + p2[off]
    )
    certified = abs1 < s2 - tol
    report = IntervalScanReport(
        X=X,
        h=float(h),
        K=int(K),
        samples=int(xs.size),
        frac_S1_small=float((abs1 <= C * K * math.sqrt(h)).mean()),
        frac_S2_large=float((s2 >= c * h).mean()),
        frac_certified_sign_change=float(certified.mean()),
        empirical_c=float(np.quantile(s2, 0.01) / h),
        empirical_C=float(np.quantile(abs1, 0.99) / (K * math.sqrt(h))),
    )
    if not with_details:
        return report
    confirmed = np.zeros(xs.size, dtype=bool)
    for i in np.flatnonzero(certified):
        seg = win.signs[off[i] : off[i] + width]
        seg = seg[seg != 0]
        confirmed[i] = seg.size > 0 and bool((seg != seg[0]).any())
    details = {
        "x": xs,
        "S1": s1,
        "S2": s2,
        "certified": certified,
        "confirmed": confirmed,
        "width": width,
    }
    return report, details


def moment_report(params: SieveParams, spec: MultiplicativeSpec) -> MomentReport:
    """Density-normalized weight moments over [X, 2X)."""
    table = spec.table
    if table is None:
        raise ValueError("moments require a table-backed spec")
    X = params.X
    ww = weights_window(params, spec, X, 2 * X)
    lower, _, _ = density_nonzero(table, X)
    norm = X * lower
    return MomentReport(
        X=X,
        m1_wprime=float(ww.w_prime.sum() / norm),
        m2_wprime=float((ww.w_prime**2).sum() / norm),
        m2_w=float((ww.w**2).sum() / norm),
        normalizer=float(norm),
    )


@dataclass
class ShiftedConvReport:
    a: int
    b: int
    A: int
    B: int
    h: int
    X: int
    value: float
    n_terms: int
    exponent: Optional[float]
    gcd_obstructed: bool


def shifted_convolution(
    spec: MultiplicativeSpec, a: int, b: int, A: int, B: int, h: int, X: int
) -> ShiftedConvReport:
    """Sum of lambda(A m) lambda(B n) over a A m - b B n = h, X <= a A m <= 2X.

    When gcd(a A, b B) does not divide h the progression is empty by the
    gcd obstruction and the report says so. The empirical exponent is
    log |sum| / log X, or None for an empty or exactly zero sum.
    """
    if min(a, b, A, B) < 1 or h < 0 or X < 2:
        raise ValueError("need a, b, A, B >= 1, h >= 0, X >= 2")
    aA, bB = a * A, b * B
    g = math.gcd(aA, bB)
    empty = ShiftedConvReport(a, b, A, B, h, X, 0.0, 0, None, True)
    if h % g:
        return empty
    # u = a A m must satisfy u = 0 mod aA and u = h mod bB.
    l = aA * bB // g
    inv = pow(aA // g, -1, bB // g)
    u0 = (aA * ((h // g) * inv % (bB // g))) % l
    start = max(X, aA, h + bB)
    first = start + (u0 - start) % l
    if first > 2 * X:
        return ShiftedConvReport(a, b, A, B, h, X, 0.0, 0, None, False)
    us = np.arange(first, 2 * X + 1, l, dtype=np.int64)
    win = evaluate_window(spec, 1, 2 * X + 1)
    vals = win.values[us // a - 1] * win.values[(us - h) // b - 1]
    total = float(vals.sum())
    exponent = None
    if total != 0.0 and X > 1:
        exponent = math.log(abs(total)) / math.log(X)
    return ShiftedConvReport(a, b, A, B, h, X, total, int(us.size), exponent, False)


def variance_short(params: SieveParams, h: float, spec: MultiplicativeSpec) -> float:
    """Mean square of the signed weight sum over short windows, divided by h.

    Computes (1/X) sum over integer x in [X, 2X] of |S1(x)|^2, then divides
    by h, with S1 the signed w-sum over [x, x + floor(h k(X))].
    """
    table = spec.table
    if table is None:
        raise ValueError("variance requires a table-backed spec")
    if h < 1:
        raise ValueError("h must be at least 1")
    X = params.X
    k_x = density_nonzero(table, X)[2]
    width = int(math.floor(h * k_x)) + 1
    hi = 2 * X + width + 1
    ww = weights_window(params, spec, X, hi)
    win = evaluate_window(spec, X, hi)
    t1 = win.signs.astype(np.float64) * ww.w
    p1 = np.concatenate([[0.0], np.cumsum(t1)])
    off = np.arange(0, X + 1, dtype=np.int64)
    s1 = p1[off + width] - p1[off]
    return float((s1**2).sum() / X / h)


@dataclass
class PrimeMomentReport:
    y: int
    sum_abs_large: float
    threshold: float
    large_ok: bool
    second_moment: list
    grid_max: float
    grid_ok: bool


def minorant_poly(x: np.ndarray) -> np.ndarray:
    """(1/8) (1 + (x^2 - 1) - (x^4 - 3 x^2 + 1)) = (4 x^2 - x^4 - 1) / 8."""
    x2 = x * x
    return (4.0 * x2 - x2 * x2 - 1.0) / 8.0


def prime_moment_checks(table, y: int, pairs=None) -> PrimeMomentReport:
    """Lower bounds for eigenvalue mass at primes near y, plus the grid check.

    sum_abs_large adds |lambda_p| over y <= p <= 2y restricted to
    |lambda_p| >= 1/2 and is compared against y / (10 log y). The grid check
    evaluates the quartic minorant on [-2, 2] and confirms it never exceeds
    (1/2) of the indicator of |x| > 1/2.
    """
    if y < 10:
        raise ValueError("y must be at least 10")
    if 2 * y > table.limit:
        raise CapacityError(f"need primes to {2 * y}, table stops at {table.limit}")
    if pairs is None:
        pairs = [(2, y)]
    p = table.primes
    lam = table.lam
    sel = (p >= y) & (p <= 2 * y) & (np.abs(lam) >= 0.5)
    s = float(np.abs(lam[sel]).sum())
    thr = y / (10.0 * math.log(y))

    second = []
    for w, z in pairs:
        m = (p >= w) & (p <= z)
        val = float(np.sum((lam[m] ** 2 - 1.0) / p[m]))
        second.append((int(w), int(z), val))

    grid = np.linspace(-2.0, 2.0, 10_000)
    rhs = np.where(np.abs(grid) > 0.5, 0.5, 0.0)
    diff = minorant_poly(grid) - rhs
    gmax = float(diff.max())
    return PrimeMomentReport(y, s, thr, bool(s >= thr), second, gmax, bool(gmax <= 0.0))


@dataclass
class SatoTateHistogram:
    P: int
    bins: int
    edges: np.ndarray
    counts: np.ndarray
    empirical: np.ndarray
    expected: np.ndarray
    discrepancy: float
    neg_fraction: float


def _semicircle_cdf(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, -2.0, 2.0)
    return 0.5 + (0.5 * t * np.sqrt(4.0 - t * t) + 2.0 * np.arcsin(0.5 * t)) / (2.0 * math.pi)


def satotate_histogram(table, P: int, bins: int = 40) -> SatoTateHistogram:
    """Histogram of lambda_p for p <= P against the semicircle law."""
    if P > table.limit:
        raise CapacityError(f"P = {P} beyond table limit {table.limit}")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    cut = int(np.searchsorted(table.primes, P, side="right"))
    lam = table.lam[:cut]
    sgn = table.sgn[:cut]
    edges = np.linspace(-2.0, 2.0, bins + 1)
    counts, _ = np.histogram(lam, bins=edges)
    empirical = counts / max(lam.size, 1)
    cdf = _semicircle_cdf(edges)
    expected = np.diff(cdf)
    disc = float(np.abs(empirical - expected).max())
    return SatoTateHistogram(
        P, bins, edges, counts, empirical, expected, disc, float((sgn < 0).mean())
    )


@dataclass
class CMDensityReport:
    P: int
    vanishing_inverse_sum: float
    target: float
    diff: float


def serre_cm_density(table, P: int) -> CMDensityReport:
    """Sum of 1/p over vanishing primes p <= P against (1/2) loglog P."""
    if P > table.limit:
        raise CapacityError(f"P = {P} beyond table limit {table.limit}")
    if P < 16:
        raise ValueError("P too small for a loglog comparison")
    cut = int(np.searchsorted(table.primes, P, side="right"))
    p = table.primes[:cut][table.sgn[:cut] == 0].astype(np.float64)
    s = float(np.sum(1.0 / p)) if p.size else 0.0
    target = 0.5 * math.log(math.log(P))
    return CMDensityReport(P, s, target, s - target)


@dataclass
class CorCheckReport:
    found: bool
    b: Optional[int] = None
    j: Optional[int] = None
    class_modulus: Optional[int] = None
    n_checked: int = 0
    identities_ok: bool = False
    frac_disjunction: float = 0.0


def cor_proof_check(window: CoefficientWindow) -> CorCheckReport:
    """Dyadic sign bookkeeping behind three-pair disjunction arguments.

    Looks for the smallest even b with g(2^b) = +1, then the smallest
    j >= 1 below b where g(2^(j+1)) = g(2) g(2^j), and verifies along the
    class n = 2^j - 1 mod 2^(j+1) that doubling identities hold and that of
    the three adjacent products g(n)g(n+1), g(2n)g(2n+1), g(2n+1)g(2n+2)
    at least one is nonnegative.
    """
    _require_from_one(window)
    g = window.signs
    n_max = window.hi - 1

    def g_at(m: int) -> int:
        return int(g[m - 1])

    b = None
    k = 2
    while (1 << k) <= n_max:
        if g_at(1 << k) == 1:
            b = k
            break
        k += 2
    if b is None:
        return CorCheckReport(found=False)
    j = None
    for cand in range(1, b):
        if g_at(1 << (cand + 1)) == g_at(2) * g_at(1 << cand):
            j = cand
            break
    if j is None:
        return CorCheckReport(found=False, b=b)
    mod = 1 << (j + 1)
    # 2n + 2 must stay inside the window.
    ns = np.arange((1 << j) - 1, n_max // 2, mod, dtype=np.int64)
    ns = ns[ns >= 1]
    if ns.size == 0:
        return CorCheckReport(found=True, b=b, j=j, class_modulus=mod)
    gn = g[ns - 1].astype(np.int64)
    gn1 = g[ns].astype(np.int64)
    g2 = g_at(2)
    g2n = g[2 * ns - 1].astype(np.int64)
    g2n1 = g[2 * ns].astype(np.int64)
    g2n2 = g[2 * ns + 1].astype(np.int64)
    ok = bool(np.array_equal(g2n, g2 * gn) and np.array_equal(g2n2, g2 * gn1))
    three = np.maximum(np.maximum(gn * gn1, g2n * g2n1), g2n1 * g2n2)
    return CorCheckReport(
        found=True,
        b=b,
        j=j,
        class_modulus=mod,
        n_checked=int(ns.size),
        identities_ok=ok,
        frac_disjunction=float((three >= 0).mean()),
    )
