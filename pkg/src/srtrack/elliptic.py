"""Elliptic integrals and Jacobi elliptic functions by the AGM / descending Landen scheme,
plus the critical-radius system for the sub-Riemannian sphere.

All functions take a real modulus ``k`` (not the parameter m = k^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from srtrack.errors import BracketError, DomainError

_TINY = 1e-17


def _check_k(k: float, allow_one: bool = False) -> float:
    k = float(k)
    if not math.isfinite(k) or k < 0 or k > 1 or (k == 1 and not allow_one):
        raise DomainError(f"modulus k={k!r} outside [0, 1)")
    return k


def _agm_table(k: float):
    """Descending AGM starting from (1, k', k); returns the a_n and c_n lists."""
    a, b, c = 1.0, math.sqrt((1.0 - k) * (1.0 + k)), k
    As, Cs = [a], [c]
    while abs(c) > _TINY * a and len(As) < 64:
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        As.append(a)
        Cs.append(c)
    return As, Cs


def ellip_K(k: float) -> float:
    """Complete integral of the first kind K(k)."""
    k = _check_k(k)
    As, _ = _agm_table(k)
    return math.pi / (2.0 * As[-1])


def ellip_E(k: float) -> float:
    """Complete integral of the second kind E(k); E(1) = 1."""
    k = _check_k(k, allow_one=True)
    if k == 1.0:
        return 1.0
    As, Cs = _agm_table(k)
    s = sum(2.0 ** (n - 1) * c * c for n, c in enumerate(Cs))
    return math.pi / (2.0 * As[-1]) * (1.0 - s)


def _amplitudes(u: float, k: float):
    """Return (phi_0, ..., phi_N), the a_n, c_n and the quarter period K.

    u is reduced modulo 2K first; phi_0 includes the n·π shift.
    """
    As, Cs = _agm_table(k)
    K = math.pi / (2.0 * As[-1])
    n = round(u / (2.0 * K))
    r = u - 2.0 * K * n
    N = len(As) - 1
    phis = [0.0] * (N + 1)
    phis[N] = 2.0**N * As[N] * r
    for i in range(N, 0, -1):
        phis[i - 1] = 0.5 * (phis[i] + math.asin(Cs[i] / As[i] * math.sin(phis[i])))
    return phis, As, Cs, K, n


def jacobi(u: float, k: float) -> tuple[float, float, float, float]:
    """(sn, cn, dn, am) at (u, k)."""
    k = _check_k(k)
    u = float(u)
    if k == 0.0:
        return math.sin(u), math.cos(u), 1.0, u
    phis, _, _, _, n = _amplitudes(u, k)
    p0 = phis[0]
    sn, cn = math.sin(p0), math.cos(p0)
    # dn^2 = k'^2 + k^2 cn^2 has no cancellation, unlike cn / cos(phi_1 - phi_0) near u = K
    dn = math.sqrt((1.0 - k) * (1.0 + k) + (k * cn) ** 2)
    # (-1)^n from the half-period shift on sn, cn; dn is 2K-periodic
    if n % 2:
        sn, cn = -sn, -cn
    return sn, cn, dn, p0 + n * math.pi


def ellip_E_incomplete(u: float, k: float) -> float:
    """E(am(u, k), k), the second-kind integral in Jacobi form.

    Written as E(u) = (E/K) u + Z(u) with the Jacobi zeta function Z summed
    over the Landen amplitudes.
    """
    k = _check_k(k)
    u = float(u)
    if k == 0.0:
        return u
    phis, As, Cs, K, n = _amplitudes(u, k)
    E = ellip_E(k)
    r = u - 2.0 * K * n
    z = sum(Cs[i] * math.sin(phis[i]) for i in range(1, len(phis)))
    return E / K * r + z + 2.0 * n * E


def _p1_fun(p: float, k: float) -> float:
    sn, cn, dn, _ = jacobi(p, k)
    return cn * (ellip_E_incomplete(p, k) - p) - dn * sn


def p1(k: float, steps_per_K: int = 64) -> float:
    """First positive root of cn(p)(E(p) - p) - dn(p) sn(p)."""
    k = _check_k(k)
    if k == 0.0:
        raise DomainError("p1 needs 0 < k < 1")
    K = ellip_K(k)
    h = K / steps_per_K
    a, fa = h, _p1_fun(h, k)
    for i in range(2, 4 * steps_per_K + 1):
        b = i * h
        fb = _p1_fun(b, k)
        if fa == 0.0:
            return a
        if fa * fb < 0:
            return brentq(_p1_fun, a, b, args=(k,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        a, fa = b, fb
    raise BracketError("root not bracketed", [])


def inverse_K(value: float) -> float:
    """The modulus k with K(k) = value (value >= pi/2)."""
    if value < math.pi / 2:
        raise DomainError(f"K(k) = {value} has no solution with k in [0, 1)")
    if value == math.pi / 2:
        return 0.0
    hi = 0.5
    while ellip_K(hi) < value:
        hi = 0.5 * (1.0 + hi)
        if hi >= 1.0:
            raise DomainError("K inverse out of range")
    return brentq(lambda k: ellip_K(k) - value, 0.0, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class RtildeSolution:
    k1: float
    k2: float
    p1_of_k2: float
    Rtilde: float
    residual_1: float
    residual_2: float

    @property
    def ratio_pi(self) -> float:
        return self.Rtilde / math.pi

    def to_dict(self) -> dict:
        return {"k1": self.k1, "k2": self.k2, "p1_of_k2": self.p1_of_k2, "Rtilde": self.Rtilde,
                "Rtilde_over_pi": self.ratio_pi, "residual_1": self.residual_1,
                "residual_2": self.residual_2}


def _system(k2: float):
    """(k1, p, second-equation residual) for a trial k2, or None if k1 does not exist."""
    p = p1(k2)
    target = k2 * p
    if target < math.pi / 2:
        return None
    k1 = inverse_K(target)
    if k1 == 0.0:
        return None
    K1, E1 = ellip_K(k1), ellip_E(k1)
    sn, cn, dn, _ = jacobi(p, k2)
    lhs = (K1 - E1) / (k1 * math.sqrt(1.0 - k2 * k2))
    rhs = (p - ellip_E_incomplete(p, k2)) / dn
    return k1, p, lhs - rhs


def solve_rtilde(n_scan: int = 40) -> RtildeSolution:
    """Solve K(k1) = k2 p1(k2) together with the second critical-radius equation.

    k2 is scanned on a uniform grid in (0, 1) for the first sign change of the
    second residual, then refined by a bracketed root search.
    """
    grid = np.linspace(0.0, 1.0, n_scan + 1)[1:-1]
    table = []
    prev = None
    for k2 in grid:
        r = _system(float(k2))
        res = r[2] if r is not None else float("nan")
        table.append((float(k2), res))
        if r is None:
            prev = None
            continue
        if prev is not None and prev[1] * res <= 0:
            a, b = prev[0], float(k2)
            k2s = brentq(lambda t: _system(t)[2], a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            k1, p, res2 = _system(k2s)
            R = 2.0 * ellip_K(k1)
            res1 = ellip_K(k1) - k2s * p
            return RtildeSolution(k1, k2s, p, R, abs(res1), abs(res2))
        prev = (float(k2), res)
    raise BracketError("system bracketing failed", table)
