"""Independent reference values for the elliptic functions (quadrature and theta series)."""

import math

import mpmath as mp
from scipy.integrate import quad

mp.mp.dps = 30


def K_quad(k):
    return quad(lambda t: 1.0 / math.sqrt(1 - (k * math.sin(t)) ** 2), 0, math.pi / 2,
                epsabs=1e-15, epsrel=1e-14, limit=200)[0]


def E_quad(k):
    return quad(lambda t: math.sqrt(1 - (k * math.sin(t)) ** 2), 0, math.pi / 2,
                epsabs=1e-15, epsrel=1e-14, limit=200)[0]


def jacobi_theta(u, k):
    """(sn, cn, dn) from Jacobi theta series at nome q = exp(-pi K'/K)."""
    k = mp.mpf(k)
    m = k**2
    K = mp.ellipk(m)
    Kp = mp.ellipk(1 - m)
    q = mp.exp(-mp.pi * Kp / K)
    v = mp.pi * mp.mpf(u) / (2 * K)
    t1, t2, t3, t4 = (mp.jtheta(n, v, q) for n in (1, 2, 3, 4))
    z2, z3, z4 = (mp.jtheta(n, 0, q) for n in (2, 3, 4))
    sn = z3 / z2 * t1 / t4
    cn = z4 / z2 * t2 / t4
    dn = z4 / z3 * t3 / t4
    return float(sn), float(cn), float(dn)


def amplitude(u, k):
    """am(u, k) by inverting the first-kind integral."""
    m = mp.mpf(k) ** 2
    u = mp.mpf(u)
    return mp.findroot(lambda phi: mp.ellipf(phi, m) - u, u)


def E_incomplete_quad(u, k):
    phi = float(amplitude(u, k))
    # integrate piecewise over quarter periods of the integrand
    n = max(1, int(abs(phi) / (math.pi / 2)) + 1)
    edges = [phi * i / n for i in range(n + 1)]
    return sum(quad(lambda t: math.sqrt(1 - (k * math.sin(t)) ** 2), a, b, epsabs=1e-15, epsrel=1e-14)[0]
               for a, b in zip(edges, edges[1:]))
