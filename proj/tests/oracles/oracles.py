"""Independent reference computations for the frozen values in the C++ tests.

Everything here is computed with exact rationals (fractions) or high-precision
floats (mpmath) and shares no code with the C++ implementation.

    python3 tests/oracles/oracles.py
"""
from fractions import Fraction as F
from itertools import product
import math

import mpmath

mpmath.mp.dps = 60
MiB = 2**20
GiB = 2**30


def mpf(q):
    q = F(q)
    return mpmath.mpf(q.numerator) / q.denominator


def pearson(x, y):
    n = len(x)
    mx, my = F(sum(x), n), F(sum(y), n)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return mpmath.mpf(0)
    return mpf(sxy) / mpmath.sqrt(mpf(sxx * syy))


def wls(x, y, w):
    # Normal equations of weighted least squares, solved exactly.
    sw = sum(w)
    swx = sum(wi * xi for wi, xi in zip(w, x))
    swy = sum(wi * yi for wi, yi in zip(w, y))
    swxx = sum(wi * xi * xi for wi, xi in zip(w, x))
    swxy = sum(wi * xi * yi for wi, xi, yi in zip(w, x, y))
    det = sw * swxx - swx * swx
    a = (sw * swxy - swx * swy) / det
    b = (swy - a * swx) / sw
    return a, b


def loss(x, y, a, b, lam):
    total = 0
    for xi, yi in zip(x, y):
        r = yi - (a * xi + b)
        total += (r * r) if r > 0 else lam * r * r
    return total


def asym_exact(x, y, lam):
    """Global minimum by enumerating residual sign patterns (convex loss)."""
    x = [F(v) for v in x]
    y = [F(v) for v in y]
    best = None
    for pattern in product([True, False], repeat=len(x)):
        w = [F(1) if p else lam for p in pattern]
        a, b = wls(x, y, w)
        ok = all(((yi - (a * xi + b)) > 0) == p or (yi - (a * xi + b)) == 0
                 for xi, yi, p in zip(x, y, pattern))
        if ok:
            cand = (loss(x, y, a, b, lam), a, b)
            if best is None or cand[0] < best[0]:
                best = cand
    return best


def weighted_offset(x, y, a, b, xn, count):
    x = [mpmath.mpf(v) for v in x]
    y = [mpmath.mpf(v) for v in y]
    a, b, xn = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(xn)
    D = max([xn] + x)
    extra = max(1 - mpmath.mpf(count) / 10, 0) / 100
    w = [1 - abs(xi - xn) / D + extra for xi in x]
    d = [a * xi + b - yi for xi, yi in zip(x, y)]
    v1 = sum(w)
    v2 = sum(wi * wi for wi in w)
    m = sum(wi * di for wi, di in zip(w, d)) / v1
    num = sum(wi * (di - m) ** 2 for wi, di in zip(w, d))
    den = v1 - v2 / v1
    if num <= 0 or den <= 0:
        return mpmath.mpf(0)
    return 2 * mpmath.sqrt(num / den)


def ceil_checked(v, label):
    frac = v - mpmath.floor(v)
    assert 1e-6 < frac < 1 - 1e-6 or frac == 0, f"{label}: {v} too close to an integer"
    return int(mpmath.ceil(v))


def ponder(x, y, xn, yuser, lam=F(1, 50), static=128 * MiB, lower=128 * MiB, upper=64 * GiB):
    I = len(x)
    clamp = lambda v: min(max(v, lower), upper)
    if I < 5:
        if I > 0 and max(x) > xn:
            return clamp(max(y) + static), "max_plus_static"
        return clamp(yuser), "user_default"
    if pearson(x, y) < 0.3:
        return clamp(max(y) + static), "max_plus_static"
    _, a, b = asym_exact(x, y, lam)
    est = a * xn + b
    if est < min(y):
        est = F(min(y))
    elif est > max(y) and max(x) > xn:
        est = F(max(y))
    elif xn > max(x) and est < max(y):
        est = F(max(y))
    off = weighted_offset(x, y, mpf(a), mpf(b), xn, I)
    off_bytes = ceil_checked(off, "offset") if off > 0 else 0
    est_bytes = math.ceil(est)
    return clamp(est_bytes + max(off_bytes, static)), f"regression (offset {off_bytes}, est {float(est)})"


def witt(x, y, xn):
    xs = [F(v) for v in x]
    ys = [F(v) for v in y]
    a, b = wls(xs, ys, [F(1)] * len(xs))
    r = [yi - (a * xi + b) for xi, yi in zip(xs, ys)]
    rm = sum(r) / len(r)
    var = sum((ri - rm) ** 2 for ri in r) / (len(r) - 1)
    val = mpf(a * xn + b) + mpmath.sqrt(mpf(var))
    return ceil_checked(val, "witt")


if __name__ == "__main__":
    print("pearson([1,2,3,4],[10,8,11,7]) =", mpmath.nstr(pearson([1, 2, 3, 4], [10, 8, 11, 7]), 20))

    l, a, b = asym_exact([1, 2, 3, 4, 5], [10, 12, 11, 20, 13], F(1, 50))
    print("asym([1..5],[10,12,11,20,13],1/50): a =", float(a), "b =", float(b), "loss =", float(l))
    # Dense grid around the exact solution as a second, cruder check.
    best = min(((loss([1, 2, 3, 4, 5], [10, 12, 11, 20, 13], ga, gb, 1 / 50), ga, gb)
                for ga in [float(a) + i * 1e-3 for i in range(-200, 201)]
                for gb in [float(b) + j * 1e-3 for j in range(-200, 201)]))
    print("  grid best:", best)

    x = [1.0, 2.0, 4.0, 7.0, 9.0]
    y = [3.0, 5.5, 8.0, 15.0, 18.5]
    print("weighted_offset(x,y, model 2x+1, xn=5, I=5) =",
          mpmath.nstr(weighted_offset(x, y, 2, 1, 5, 5), 25))

    print("witt x=[1..5]GiB, y=[1.2,2.1,2.9,4.3,4.8]GiB, xn=3.5GiB:")
    wx = [k * GiB for k in range(1, 6)]
    wy = [int(v * GiB) for v in (1.2, 2.1, 2.9, 4.3, 4.8)]
    print("  ", wy, witt(wx, wy, int(3.5 * GiB)))

    print("Ponder table")
    cases = {
        "i_lt5_smaller": ([10, 20, 30], [1 * GiB, 2 * GiB, 3 * GiB // 2], 15, 4 * GiB, {}),
        "i_lt5_larger": ([10, 20, 30], [1 * GiB, 2 * GiB, 3 * GiB // 2], 31, 4 * GiB, {}),
        "i_lt5_equal": ([10, 20, 30], [1 * GiB, 2 * GiB, 3 * GiB // 2], 30, 4 * GiB, {}),
        "gate": ([1, 2, 3, 4, 5, 6], [5 * GiB, 1 * GiB, 4 * GiB, 2 * GiB, 3 * GiB, 1 * GiB], 3, 4 * GiB, {}),
        "plain_floor": ([k * GiB for k in range(1, 7)], [2 * k * GiB + 100 * MiB for k in range(1, 7)],
                        int(3.5 * GiB), 20 * GiB, {}),
        "safeguard_min": ([k * GiB for k in range(1, 7)], [2 * k * GiB + 100 * MiB for k in range(1, 7)],
                          0, 20 * GiB, {}),
        "safeguard_max": ([k * GiB for k in range(1, 7)], [1 * GiB, 2 * GiB, 3 * GiB, 4 * GiB, 5 * GiB, 5 * GiB + GiB // 2],
                          int(5.9 * GiB), 20 * GiB, {"static": 4 * GiB}),
        "safeguard_beyond": ([k * GiB for k in range(1, 7)], [1 * GiB, 2 * GiB, 9 * GiB, 4 * GiB, 5 * GiB, 6 * GiB],
                             7 * GiB, 20 * GiB, {"static": 8 * GiB, "lam": F(1)}),
        "offset_above_floor": ([k * GiB for k in range(1, 7)], [1 * GiB, 3 * GiB, 3 * GiB, 5 * GiB, 5 * GiB, 7 * GiB],
                               int(3.5 * GiB), 20 * GiB, {}),
    }
    for name, (cx, cy, xn, yu, kw) in cases.items():
        print(f"  {name}: pearson={float(pearson(cx, cy)):.4f}", ponder(cx, cy, xn, yu, **kw))
