"""Acceptance battery: fourteen end-to-end checks, one test per criterion.

Each test gathers its measurements, then reports a single pass/fail line
through ``_criterion`` with every threshold spelled out next to the value
that met (or missed) it.  Thresholds are fixed here on purpose — they are
the contract this package is accepted against, so nothing below reads them
from configuration.
"""

import threading
import time

import numpy as np
import pytest

from hsgn.coeffs import delta_prime_table, tau_series
from hsgn.multeval import evaluate_window, hecke_extend
from hsgn.sieveweights import DEFAULT_GAMMA, SieveParams, rho_plus_window, wpp_majorant
from hsgn.stats import (
    chowla_correlation,
    full_sign_report,
    interval_scan,
    moment_report,
    prime_moment_checks,
    serre_cm_density,
    shifted_convolution,
    sign_changes,
    variance_short,
)


def _criterion(n: int, label: str, checks: list[tuple[str, bool]]) -> None:
    """Print one pass/fail line for criterion n, then assert all checks."""
    ok = all(v for _, v in checks)
    print(f"criterion {n:2d} [{label}]: {'PASS' if ok else 'FAIL'}")
    for desc, good in checks:
        if not good:
            print(f"    failed: {desc}")
    assert ok, f"criterion {n} ({label}): " + "; ".join(
        d for d, good in checks if not good
    )


# ----------------------------------------------------------------------
# 1. Sign balance at X = 1e6, timed including coefficient generation.
# ----------------------------------------------------------------------


def test_criterion_01_sign_balance():
    t0 = time.perf_counter()
    table = delta_prime_table(1_000_000)
    win = evaluate_window(hecke_extend(table), 1, 1_000_001)
    rep = full_sign_report(win)
    elapsed = time.perf_counter() - t0

    ratio6 = rep.n_pos / rep.n_neg
    s4 = win.signs[:10_000]
    ratio4 = int((s4 > 0).sum()) / int((s4 < 0).sum())
    _criterion(
        1,
        "sign balance",
        [
            (f"n_zero == 0 (got {rep.n_zero})", rep.n_zero == 0),
            (f"pos/neg in [0.95, 1.05] (got {ratio6:.6f})", 0.95 <= ratio6 <= 1.05),
            (
                f"|ratio-1| shrinks: {abs(ratio6 - 1):.6f} at 1e6 "
                f"vs {abs(ratio4 - 1):.6f} at 1e4",
                abs(ratio6 - 1.0) < abs(ratio4 - 1.0),
            ),
            (f"elapsed {elapsed:.1f}s <= 60s including generation", elapsed <= 60.0),
        ],
    )


# ----------------------------------------------------------------------
# 2. Sign-change density for both forms at X = 1e6.
# ----------------------------------------------------------------------


def test_criterion_02_sign_change_density(delta_win_1e6, cm_spec):
    x = 1_000_000
    delta_changes = sign_changes(delta_win_1e6)
    cm_win = evaluate_window(cm_spec, 1, x + 1)
    cm_changes = sign_changes(cm_win)
    cm_nonzero = int((cm_win.signs != 0).sum())
    _criterion(
        2,
        "sign-change density",
        [
            (
                f"weight-12 changes/X = {delta_changes / x:.4f} >= 0.1",
                delta_changes / x >= 0.1,
            ),
            (
                f"CM changes/nonzero = {cm_changes}/{cm_nonzero} = "
                f"{cm_changes / cm_nonzero:.4f} >= 0.05",
                cm_changes / cm_nonzero >= 0.05,
            ),
        ],
    )


# ----------------------------------------------------------------------
# 3. Consecutive-sign correlation bound at X = 1e6.
# ----------------------------------------------------------------------


def test_criterion_03_consecutive_sign_correlation(delta_win_1e6):
    x = 1_000_000
    total = chowla_correlation(delta_win_1e6)
    _criterion(
        3,
        "consecutive-sign correlation",
        [(f"|sum sgn*sgn| = {abs(total)} <= 0.5*X = {x // 2}", abs(total) <= 0.5 * x)],
    )


# ----------------------------------------------------------------------
# 4. Sieve weights match a per-n trial-division divisor-sum oracle.
# ----------------------------------------------------------------------


def _oracle_primes(limit: int) -> list[int]:
    mark = bytearray([1]) * (limit + 1)
    mark[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if mark[i]:
            mark[i * i :: i] = bytearray(len(mark[i * i :: i]))
    return [i for i in range(2, limit + 1) if mark[i]]


def _oracle_support(y: int, gamma: float, cap: int, primes: list[int]) -> set[int]:
    """Squarefree d <= cap with descending primes and odd-position cuts."""

    def cut(m: int) -> float:
        return y ** (0.5 * (1.0 - gamma * gamma) * gamma ** (m - 1))

    members = {1}
    usable = [p for p in primes if p <= cut(1)]

    def rec(prev_idx: int, m: int, d: int) -> None:
        limit_m = cut(m)
        for i in range(prev_idx):
            p = usable[i]
            if m % 2 == 1 and p > limit_m:
                continue
            nd = d * p
            if nd > cap:
                break
            members.add(nd)
            rec(i, m + 1, nd)

    rec(len(usable), 1, 1)
    return members


def test_criterion_04_brun_weight_oracle():
    t0 = time.perf_counter()
    y, top = 1_000, 100_000
    gammas = [DEFAULT_GAMMA, 0.5]
    rhos = [
        rho_plus_window(SieveParams(X=top, y=y, gamma=g), 1, top + 1) for g in gammas
    ]

    primes = _oracle_primes(top)
    supports = [_oracle_support(y, g, top, primes) for g in gammas]
    small = [p for p in primes if p * p <= top]

    expected = [np.zeros(top + 1, dtype=np.int64) for _ in gammas]
    rough = np.zeros(top + 1, dtype=bool)
    rough[1] = True  # empty factorization: least factor exceeds any y
    for n in range(2, top + 1):
        m, ps = n, []
        for p in small:
            if p * p > m:
                break
            if m % p == 0:
                ps.append(p)
                while m % p == 0:
                    m //= p
        if m > 1:
            ps.append(m)
        rough[n] = ps[0] > y
        divs = [(1, 1)]
        for p in ps:
            divs += [(d * p, -mu) for d, mu in divs]
        for k, sup in enumerate(supports):
            expected[k][n] = sum(mu for d, mu in divs if d in sup)
    for k in range(len(gammas)):
        expected[k][1] = 1

    elapsed = time.perf_counter() - t0
    checks = [(f"oracle elapsed {elapsed:.1f}s <= 10s", elapsed <= 10.0)]
    for g, rho, exp in zip(gammas, rhos, expected):
        checks.append(
            (
                f"rho+ == divisor-sum oracle for all n <= 1e5 (gamma={g})",
                bool(np.array_equal(rho, exp[1:])),
            )
        )
        checks.append(
            (
                f"rho+ >= max(0, rough indicator) exhaustively (gamma={g})",
                bool((rho >= rough[1:].astype(np.int64)).all() and (rho >= 0).all()),
            )
        )
    _criterion(4, "sieve-weight oracle", checks)


# ----------------------------------------------------------------------
# 5. Weight sandwich 0 <= w' <= w <= w' + w'' exhaustively on [1e5, 2e5].
# ----------------------------------------------------------------------


def test_criterion_05_weight_sandwich(delta_spec):
    params = SieveParams(X=100_000, delta=0.1)
    diag = wpp_majorant(params, delta_spec, 100_000, 200_001)
    w = diag.window.w
    wp = diag.window.w_prime
    wpp = diag.w_doubleprime
    _criterion(
        5,
        "weight sandwich",
        [
            ("0 <= w' everywhere", bool((wp >= 0.0).all())),
            ("w' <= w everywhere", bool((wp <= w).all())),
            ("w <= w' + w'' everywhere", bool((w <= wp + wpp).all())),
        ],
    )


# ----------------------------------------------------------------------
# 6. Moment stability between X = 1e5 and X = 1e6.
# ----------------------------------------------------------------------


def test_criterion_06_moment_stability(delta_spec, calib):
    m5 = moment_report(SieveParams(X=100_000), delta_spec)
    m6 = moment_report(SieveParams(X=1_000_000), delta_spec)
    floor = float(calib["m1_floor"])
    checks = []
    for name in ("m1_wprime", "m2_wprime", "m2_w"):
        a, b = getattr(m5, name), getattr(m6, name)
        r = b / a
        checks.append(
            (f"{name} ratio {r:.3f} within factor 3 ({a:.4f} -> {b:.4f})", 1 / 3 < r < 3)
        )
    checks.append(
        (
            f"m1_wprime >= calibrated floor {floor:.3f} at both scales "
            f"({m5.m1_wprime:.4f}, {m6.m1_wprime:.4f})",
            m5.m1_wprime >= floor and m6.m1_wprime >= floor,
        )
    )
    _criterion(6, "moment stability", checks)


# ----------------------------------------------------------------------
# 7 and 8. Short-interval scan: S1 smallness, certification soundness.
# ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def scan_1e6(delta_spec):
    params = SieveParams(X=1_000_000)
    return interval_scan(
        params, delta_spec, 50.0, 10, samples=1000, seed=1, with_details=True
    )


def test_criterion_07_short_interval_upper(scan_1e6):
    rep, _ = scan_1e6
    _criterion(
        7,
        "short-interval upper bound",
        [
            (f"samples {rep.samples} >= 1000", rep.samples >= 1000),
            (
                f"frac_S1_small = {rep.frac_S1_small:.4f} >= 0.99 "
                f"(calibrated C, X=1e6, h=50, K=10)",
                rep.frac_S1_small >= 0.99,
            ),
        ],
    )


def test_criterion_08_certified_sign_changes(scan_1e6):
    rep, det = scan_1e6
    certified = det["certified"]
    confirmed = det["confirmed"]
    n_cert = int(certified.sum())
    sound = bool(confirmed[certified].all()) if n_cert else False
    _criterion(
        8,
        "certified sign changes",
        [
            (
                f"certified fraction {rep.frac_certified_sign_change:.4f} > 0",
                rep.frac_certified_sign_change > 0.0,
            ),
            (
                f"all {n_cert} certificates contain a verified sign change",
                sound,
            ),
        ],
    )


# ----------------------------------------------------------------------
# 9. Shifted-convolution cancellation and diagonal size at X = 1e6.
# ----------------------------------------------------------------------


def test_criterion_09_shifted_convolution(delta_spec):
    x = 1_000_000
    bound = x**0.9
    checks = []
    diag = shifted_convolution(delta_spec, 1, 1, 1, 1, 0, x)
    checks.append(
        (
            f"diagonal h=0 sum {diag.value:.1f} in [0.1X, 10X]",
            0.1 * x <= diag.value <= 10 * x,
        )
    )
    for h in (1, 2, 3):
        rep = shifted_convolution(delta_spec, 1, 1, 1, 1, h, x)
        checks.append(
            (
                f"h={h}: |sum| = {abs(rep.value):.1f} <= X^0.9 = {bound:.1f}",
                abs(rep.value) <= bound,
            )
        )
    _criterion(9, "shifted convolution", checks)


# ----------------------------------------------------------------------
# 10. Variance of short sums roughly linear in the window length.
# ----------------------------------------------------------------------


def test_criterion_10_variance_linearity(delta_spec):
    params = SieveParams(X=100_000)
    v1 = variance_short(params, 10.0, delta_spec)
    v2 = variance_short(params, 20.0, delta_spec)
    r = v2 / v1
    _criterion(
        10,
        "variance linearity",
        [
            (
                f"variance/h ratio under h->2h is {r:.3f} "
                f"({v1:.4f} -> {v2:.4f}), within factor 4",
                0.25 <= r <= 4.0,
            )
        ],
    )


# ----------------------------------------------------------------------
# 11. Eigenvalue mass at primes near y, and the quartic minorant grid.
# ----------------------------------------------------------------------


def test_criterion_11_prime_moments(delta_big):
    checks = []
    for y in (1_000, 10_000, 100_000):
        rep = prime_moment_checks(delta_big, y)
        checks.append(
            (
                f"y={y}: sum |lambda_p| over large entries = "
                f"{rep.sum_abs_large:.1f} >= y/(10 log y) = {rep.threshold:.1f}",
                rep.large_ok,
            )
        )
        checks.append(
            (
                f"y={y}: minorant below indicator on 1e4-point grid "
                f"(max excess {rep.grid_max:.2e})",
                rep.grid_ok,
            )
        )
    _criterion(11, "prime moments", checks)


# ----------------------------------------------------------------------
# 12. Vanishing-prime reciprocal sum tracks (1/2) loglog for the CM form.
# ----------------------------------------------------------------------


def test_criterion_12_cm_vanishing_density(cm_big):
    rep = serre_cm_density(cm_big, 1_000_000)
    _criterion(
        12,
        "CM vanishing density",
        [
            (
                f"|{rep.vanishing_inverse_sum:.4f} - {rep.target:.4f}| = "
                f"{abs(rep.diff):.4f} <= 1.5",
                abs(rep.diff) <= 1.5,
            )
        ],
    )


# ----------------------------------------------------------------------
# 13. Exactness anchors for the integer coefficient chain.
# ----------------------------------------------------------------------


def _tau_oracle_small(n: int) -> list[int]:
    """tau(1..n) from schoolbook truncated products over python ints."""
    eta = [0] * n
    eta[0] = 1
    for k in range(1, n):
        for i in range(n - 1, k - 1, -1):
            eta[i] -= eta[i - k]
    out = [1] + [0] * (n - 1)
    for _ in range(24):
        nxt = [0] * n
        for i, a in enumerate(out):
            if a:
                for j, b in enumerate(eta[: n - i]):
                    if b:
                        nxt[i + j] += a * b
        out = nxt
    return out


def test_criterion_13_exactness_anchors(delta_win_1e6):
    oracle = _tau_oracle_small(4)
    ts = tau_series(10_000)
    v = delta_win_1e6.values
    lam2, lam4 = v[1], v[3]
    sigma11 = [0] * 10_001
    for d in range(1, 10_001):
        step = d**11
        for mult in range(d, 10_001, d):
            sigma11[mult] += step
    congruent = all((ts[n - 1] - sigma11[n]) % 691 == 0 for n in range(1, 10_001))
    _criterion(
        13,
        "exactness anchors",
        [
            (f"oracle tau(2) == -24 (got {oracle[1]})", oracle[1] == -24),
            (f"oracle tau(3) == 252 (got {oracle[2]})", oracle[2] == 252),
            ("library agrees with oracle through tau(4)", ts[:4] == oracle),
            (
                f"lambda(4) == lambda(2)^2 - 1 to 1e-12 "
                f"(diff {abs(lam4 - (lam2 * lam2 - 1)):.2e})",
                abs(lam4 - (lam2 * lam2 - 1.0)) <= 1e-12,
            ),
            ("tau(n) == sigma11(n) mod 691 for all n <= 1e4", congruent),
        ],
    )


# ----------------------------------------------------------------------
# 14. Segmented evaluation of a width-1e7 window near 1e8: time and memory.
# ----------------------------------------------------------------------


def _rss_mb() -> float:
    with open("/proc/self/status") as fh:
        for line in fh:
            if line.startswith("VmRSS:"):
                return int(line.split()[1]) / 1024.0
    return 0.0


def test_criterion_14_large_window_performance(perf_table):
    spec = hecke_extend(perf_table)
    peak = [_rss_mb()]
    stop = threading.Event()

    def sample():
        while not stop.is_set():
            peak[0] = max(peak[0], _rss_mb())
            time.sleep(0.02)

    watcher = threading.Thread(target=sample, daemon=True)
    watcher.start()
    t0 = time.perf_counter()
    win = evaluate_window(spec, 100_000_000, 110_000_000)
    elapsed = time.perf_counter() - t0
    stop.set()
    watcher.join()
    peak[0] = max(peak[0], _rss_mb())

    _criterion(
        14,
        "large window performance",
        [
            (f"window covers 1e7 integers (got {win.values.size})", win.values.size == 10_000_000),
            ("all values finite", bool(np.isfinite(win.values).all())),
            (f"elapsed {elapsed:.1f}s <= 120s", elapsed <= 120.0),
            (f"peak resident {peak[0]:.0f} MB <= 2048 MB", peak[0] <= 2048.0),
        ],
    )
