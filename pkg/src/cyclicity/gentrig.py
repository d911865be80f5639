"""Generalized trigonometric functions ``Cs``, ``Sn`` and their period.

``(Cs, Sn)`` solve ``x' = -y``, ``y' = x**(2n-1)`` with ``(x, y)(0) = (1, 0)``.
For ``n = 1`` they are ``cos`` and ``sin``. Each table is integrated once
with a tight DOP853 run and then interpolated by quintic Hermite
polynomials, which use the exact first and second derivatives supplied by
the ODE itself.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.integrate import solve_ivp

# Node count per period. Hermite error scales like h**6.
DEFAULT_NODES = 4096
BUILD_RTOL = 3e-14
BUILD_ATOL = 1e-15
PERIOD_AGREEMENT = 1e-8


class PeriodMismatchError(RuntimeError):
    """Gamma-formula period and integrated return time disagree."""


def period_formula(n: int) -> float:
    """``T_n = 2 sqrt(pi/n) Gamma(1/(2n)) / Gamma((n+1)/(2n))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * math.sqrt(math.pi / n) * math.gamma(1.0 / (2 * n)) / math.gamma((n + 1) / (2.0 * n))


def _rhs(n: int):
    p = 2 * n - 1

    def f(_t, u):
        return [-u[1], u[0] ** p]

    return f


def _build_tolerances() -> Tuple[float, float]:
    """Integrator tolerances for table construction.

    ``CYCLICITY_RTOL`` / ``CYCLICITY_ATOL`` loosen every integration in the
    package, including this one; tightening beyond the defaults is ignored.
    """
    rtol = max(BUILD_RTOL, float(os.environ.get("CYCLICITY_RTOL", BUILD_RTOL)))
    atol = max(BUILD_ATOL, float(os.environ.get("CYCLICITY_ATOL", BUILD_ATOL)))
    return rtol, atol


def return_time(n: int, rtol: float = BUILD_RTOL, atol: float = BUILD_ATOL) -> float:
    """First return of the Cauchy orbit to ``(1, 0)`` found by event location."""
    T_guess = period_formula(n)

    def event(_t, u):
        return u[1]

    event.direction = 1.0
    sol = solve_ivp(_rhs(n), (0.0, 1.5 * T_guess), [1.0, 0.0], method="DOP853",
                    rtol=rtol, atol=atol, events=event)
    hits = [t for t in sol.t_events[0] if t > 1e-6]
    if not hits:
        raise PeriodMismatchError(f"no return to (1, 0) found for n={n}")
    return float(hits[0])


@dataclass(frozen=True)
class GenTrigTable:
    """Interpolation table of ``(Cs, Sn)`` over one period.

    Attributes
    ----------
    n : int
        Index of the functions.
    period : float
        ``T_n`` from the Gamma formula; all reductions mod ``T_n`` use it.
    return_period : float
        Period measured by the integrator, kept for the cross-check.
    rtol, atol : float
        Tolerances of the construction run.
    """

    n: int
    period: float
    return_period: float
    rtol: float
    atol: float
    nodes: np.ndarray = field(repr=False)
    cs: np.ndarray = field(repr=False)
    sn: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return self.period / (len(self.nodes) - 1)

    def __call__(self, theta):
        """Vectorized ``(Cs theta, Sn theta)``."""
        th = np.asarray(theta, dtype=float)
        T = self.period
        red = np.mod(th, T)
        h = self.h
        k = np.minimum((red / h).astype(np.intp), len(self.nodes) - 2)
        t = (red - k * h) / h
        p = 2 * self.n - 1
        c0, c1 = self.cs[k], self.cs[k + 1]
        s0, s1 = self.sn[k], self.sn[k + 1]
        # derivatives from the ODE: Cs' = -Sn, Sn' = Cs^p, Cs'' = -Cs^p, Sn'' = -p Cs^(p-1) Sn
        dc0, dc1 = -s0 * h, -s1 * h
        ds0, ds1 = c0 ** p * h, c1 ** p * h
        ddc0, ddc1 = -(c0 ** p) * h * h, -(c1 ** p) * h * h
        if p == 1:
            dds0, dds1 = -s0 * h * h, -s1 * h * h
        else:
            dds0 = -p * c0 ** (p - 1) * s0 * h * h
            dds1 = -p * c1 ** (p - 1) * s1 * h * h
        H = _hermite5_basis(t)
        cs = H[0] * c0 + H[1] * dc0 + H[2] * ddc0 + H[3] * c1 + H[4] * dc1 + H[5] * ddc1
        sn = H[0] * s0 + H[1] * ds0 + H[2] * dds0 + H[3] * s1 + H[4] * ds1 + H[5] * dds1
        return cs, sn

    def scalar(self, theta: float) -> Tuple[float, float]:
        """Pure-Python evaluation at one point; faster than numpy for scalars."""
        T = self.period
        red = math.fmod(theta, T)
        if red < 0.0:
            red += T
        h = self.h
        k = int(red / h)
        if k > len(self.nodes) - 2:
            k = len(self.nodes) - 2
        t = (red - k * h) / h
        p = 2 * self.n - 1
        c0 = float(self.cs[k]); c1 = float(self.cs[k + 1])
        s0 = float(self.sn[k]); s1 = float(self.sn[k + 1])
        c0p = c0 ** p; c1p = c1 ** p
        hh = h * h
        if p == 1:
            dds0 = -s0 * hh; dds1 = -s1 * hh
        else:
            dds0 = -p * c0 ** (p - 1) * s0 * hh
            dds1 = -p * c1 ** (p - 1) * s1 * hh
        h0, h1, h2, h3, h4, h5 = _hermite5_scalar(t)
        cs = h0 * c0 - h1 * s0 * h - h2 * c0p * hh + h3 * c1 - h4 * s1 * h - h5 * c1p * hh
        sn = h0 * s0 + h1 * c0p * h + h2 * dds0 + h3 * s1 + h4 * c1p * h + h5 * dds1
        return cs, sn

    def fundamental_residual(self, theta) -> np.ndarray:
        cs, sn = self(theta)
        return cs ** (2 * self.n) + self.n * sn ** 2 - 1.0


def _hermite5_basis(t):
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    return (
        1 - 10 * t3 + 15 * t4 - 6 * t5,
        t - 6 * t3 + 8 * t4 - 3 * t5,
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        10 * t3 - 15 * t4 + 6 * t5,
        -4 * t3 + 7 * t4 - 3 * t5,
        0.5 * t3 - t4 + 0.5 * t5,
    )


_hermite5_scalar = _hermite5_basis


def build_table(n: int, nodes: int = DEFAULT_NODES, check_period: bool = True) -> GenTrigTable:
    """Integrate the Cauchy problem over one period and tabulate it.

    Raises
    ------
    PeriodMismatchError
        If the Gamma-formula period and the integrator's return time differ
        by more than ``1e-8``. This is the tripwire for a misconfigured
        integrator.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rtol, atol = _build_tolerances()
    T = period_formula(n)
    grid = np.linspace(0.0, T, nodes + 1)
    sol = solve_ivp(_rhs(n), (0.0, T), [1.0, 0.0], method="DOP853",
                    rtol=rtol, atol=atol, t_eval=grid)
    if not sol.success:
        raise RuntimeError(f"Cs/Sn integration failed for n={n}: {sol.message}")
    T_ret = return_time(n, rtol, atol)
    if check_period and abs(T_ret - T) > PERIOD_AGREEMENT:
        raise PeriodMismatchError(
            f"period cross-check failed for n={n}: formula {T!r}, return time {T_ret!r}, "
            f"difference {abs(T_ret - T):.3e} > {PERIOD_AGREEMENT:g}")
    cs = sol.y[0].copy()
    sn = sol.y[1].copy()
    # close the period exactly; both ends are the initial condition
    cs[-1], sn[-1] = 1.0, 0.0
    return GenTrigTable(n=n, period=T, return_period=T_ret, rtol=rtol, atol=atol,
                        nodes=grid, cs=cs, sn=sn)


@lru_cache(maxsize=None)
def _cached_table(n: int, rtol_env: str, atol_env: str) -> GenTrigTable:
    return build_table(n)


def get_table(n: int) -> GenTrigTable:
    """Shared table for index ``n``; rebuilt if the tolerance env vars change."""
    return _cached_table(n, os.environ.get("CYCLICITY_RTOL", ""), os.environ.get("CYCLICITY_ATOL", ""))


def period_tn(n: int) -> float:
    """``T_n`` via the Gamma formula, cross-validated by the integrator."""
    return get_table(n).period


def gen_trig(n: int, theta):
    """``(Cs theta, Sn theta)`` for index ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return get_table(n)(theta)
