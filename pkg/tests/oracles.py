"""Independent high-precision references used across the tests.

Nothing here calls into the transfer-matrix code: amplitudes come either
from the textbook rectangular-barrier closed form or from a direct
linear solve of all matching conditions at once, both in mpmath.
"""

import mpmath as mp

from tunnel_chrono.constants import HBAR, MASS

mp.mp.dps = 60

HB = mp.mpf(HBAR)
M = mp.mpf(MASS)


def kvec(kinetic):
    """Complex wavenumber sqrt(2 m T)/hbar; purely imaginary below the level."""
    return mp.sqrt(2 * M * mp.mpf(kinetic) + 0j) / HB


def rect_amplitudes(V0, s, E):
    """(t, r) of a rectangular barrier with t referenced at the exit, r at the entrance."""
    V0, s, E = mp.mpf(V0), mp.mpf(s), mp.mpf(E)
    k = mp.sqrt(2 * M * E) / HB
    if E < V0:
        kap = mp.sqrt(2 * M * (V0 - E)) / HB
        c, sh = mp.cosh(kap * s), mp.sinh(kap * s)
        den = c + 1j * (kap**2 - k**2) / (2 * k * kap) * sh
        t = 1 / den
        r = -1j * (k**2 + kap**2) / (2 * k * kap) * sh / den
    else:
        q = mp.sqrt(2 * M * (E - V0)) / HB
        c, sn = mp.cos(q * s), mp.sin(q * s)
        den = c - 1j * (k**2 + q**2) / (2 * k * q) * sn
        t = 1 / den
        r = 1j * (q**2 - k**2) / (2 * k * q) * sn / den
    return t, r


def piecewise_amplitudes(segments, E, left=0.0, right=0.0):
    """(t, r, coefficients) from one dense linear solve of every interface condition.

    Inside segment j: psi = A exp(i q (x - x_j)) + B exp(-i q (x - x_j)).
    """
    E = mp.mpf(E)
    n = len(segments)
    kl, kr = kvec(E - left), kvec(E - right)
    qs = [kvec(E - mp.mpf(h)) for _, h in segments]
    ws = [mp.mpf(w) for w, _ in segments]
    size = 2 * n + 2  # r, (A_j, B_j)..., t
    A = mp.matrix(size, size)
    b = mp.matrix(size, 1)
    row = 0
    # x1: 1 + r = A0 + B0 ; ik(1 - r) = iq0 (A0 - B0)
    A[row, 0] = 1
    A[row, 1] = -1
    A[row, 2] = -1
    b[row] = -1
    row += 1
    A[row, 0] = -1j * kl
    A[row, 1] = -1j * qs[0]
    A[row, 2] = 1j * qs[0]
    b[row] = -1j * kl
    row += 1
    for j in range(n):
        e = mp.exp(1j * qs[j] * ws[j])
        a_col, b_col = 1 + 2 * j, 2 + 2 * j
        if j + 1 < n:
            na, nb, nq = 3 + 2 * j, 4 + 2 * j, qs[j + 1]
            A[row, a_col], A[row, b_col], A[row, na], A[row, nb] = e, 1 / e, -1, -1
            row += 1
            A[row, a_col], A[row, b_col] = 1j * qs[j] * e, -1j * qs[j] / e
            A[row, na], A[row, nb] = -1j * nq, 1j * nq
            row += 1
        else:
            tc = size - 1
            A[row, a_col], A[row, b_col], A[row, tc] = e, 1 / e, -1
            row += 1
            A[row, a_col], A[row, b_col], A[row, tc] = 1j * qs[j] * e, -1j * qs[j] / e, -1j * kr
            row += 1
    x = mp.lu_solve(A, b)
    coeffs = [(x[1 + 2 * j], x[2 + 2 * j]) for j in range(n)]
    return x[size - 1], x[0], coeffs, qs


def piecewise_density(segments, E):
    """Integral of |psi|^2 over the barrier region by mpmath quadrature of the exact psi."""
    _, _, coeffs, qs = piecewise_amplitudes(segments, E)
    total = mp.mpf(0)
    for (w, _), (a, b), q in zip(segments, coeffs, qs):
        f = lambda u, a=a, b=b, q=q: abs(a * mp.exp(1j * q * u) + b * mp.exp(-1j * q * u)) ** 2
        total += mp.quad(f, [0, mp.mpf(w)])
    return total


def free_crossing_time(L, E):
    """m L / (hbar k) in fs."""
    k = mp.sqrt(2 * M * mp.mpf(E)) / HB
    return float(M * mp.mpf(L) / (HB * k))
