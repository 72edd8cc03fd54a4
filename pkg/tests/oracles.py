"""Independent reference evaluators shared by the unit and acceptance tests."""

import math
from fractions import Fraction

import numpy as np


def _bracket(x):
    return np.sqrt(1.0 + x * x)


def brute_force_form(form, v, v1, v2, k, ell, b, c):
    """Sum of the trilinear form over every pair ``(xi1, tau1), (xi2, tau2)`` whose
    difference ``(xi, tau)`` lies on the grid.

    Works on the centered integer index box ``[-n/2, n/2)`` per axis: each
    variable's factor of the integrand is evaluated from its physical
    frequency, then for every ``(xi2, tau2)`` the admissible ``(xi1, tau1)``
    form a sub-box whose outputs ``(xi, tau)`` are the same sub-box shifted.
    """
    g = v.grid
    ns = tuple(g.points) + (v.time_points,)
    lengths = tuple(g.extent) + (v.time_extent,)
    cell = float(np.prod([L / n for L, n in zip(lengths, ns)]))
    measure = float(np.prod([2 * np.pi / L for L in lengths]))
    axes = np.meshgrid(*[np.arange(-n // 2, n // 2) * (2 * np.pi / L) for n, L in zip(ns, lengths)], indexing="ij")
    tau = axes[-1]
    nrm2 = sum(x * x for x in axes[:-1])
    nrm = np.sqrt(nrm2)
    mags = [np.fft.fftshift(np.abs(np.fft.fftn(f.values, norm="ortho"))) * math.sqrt(cell / measure) for f in (v, v1, v2)]
    sig_w = _bracket(tau + nrm)
    sig_s = _bracket(tau + nrm2)
    br = _bracket(nrm)
    if form == "N1":
        out = mags[0] / (sig_w**b * br**ell)
        first = mags[1] * br**k / sig_s**c
        second = mags[2] / (sig_s**b * br**k)
    else:
        out = mags[0] * nrm * br**ell / sig_w**c
        first = mags[1] / (sig_s**b * br**k)
        second = mags[2] / (sig_s**b * br**k)
    total = 0.0
    for j in np.ndindex(*ns):
        w2 = second[j]
        if w2 == 0.0:
            continue
        # centered values: q2 = j - n/2; q1 = i - n/2 must keep q1 - q2 = i - j in [-n/2, n/2)
        s1 = tuple(slice(max(0, jj - n // 2), min(n, jj + n // 2)) for jj, n in zip(j, ns))
        so = tuple(slice(sl.start - jj + n // 2, sl.stop - jj + n // 2) for sl, jj, n in zip(s1, j, ns))
        total += w2 * float(np.sum(first[s1] * out[so]))
    return total * measure**2


def lemma32_oracle(b0, g, a, a1, a2, m):
    """Exact rational evaluation of the nine trilinear-lemma conditions."""
    S = a + a1 + a2
    w = 1 - g
    X = Fraction(5, 2) - w * S / b0
    strict = b0 == w * S or a1 == 0
    return all(
        [
            b0 > Fraction(1, 2),
            0 <= g <= 1,
            min(a, a1, a2) >= 0,
            w * max(a, a1, a2) <= b0,
            b0 <= w * S,
            w * a < b0,
            (m > X) if strict else (m >= X),
            X >= 0,
            all(g * x < Fraction(1, 2) for x in (a, a1, a2)),
        ]
    )


def rational_tuples(n, seed):
    """Multiples of 1/64 (exact in binary) in ranges that give both outcomes and hit equalities."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        b0 = Fraction(int(rng.integers(30, 44)), 64)
        g = Fraction(int(rng.integers(-2, 68)), 64)
        a, a1, a2 = (Fraction(int(rng.integers(-1, 40)), 64) for _ in range(3))
        if rng.random() < 0.1:
            a1 = Fraction(0)
        m = Fraction(int(rng.integers(0, 160)), 64)
        out.append((b0, g, a, a1, a2, m))
    return out
