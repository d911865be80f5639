"""Flow on the cylinder: Poincare map, displacement, multiplicity, characteristic exponent."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .cylinder import CylinderEquation

DEFAULT_ATOL = 1e-12
DEFAULT_RTOL = 1e-10
# the solver runs tighter than the advertised tolerance so that the global
# error of one full turn stays inside it
SOLVER_SAFETY = 0.02
FIT_POINTS = 8
FIT_NOISE_FACTOR = 100.0
CENTER_NOISE_FACTOR = 10.0
SNAP_LIMIT = 0.25
# accuracy of the exit screen; exits only feed signs and brackets
SCREEN_RTOL = 1e-7


class IntegrationExit(RuntimeError):
    """A trajectory left the validity window before completing a turn."""

    def __init__(self, message: str, r0: float, theta: float):
        super().__init__(message)
        self.r0 = r0
        self.theta = theta


class MultiplicityError(RuntimeError):
    """The log-log slope is not close to an admissible integer."""

    def __init__(self, message: str, slope: float):
        super().__init__(message)
        self.slope = slope


@dataclass(frozen=True)
class Tolerances:
    atol: float = DEFAULT_ATOL
    rtol: float = DEFAULT_RTOL

    @classmethod
    def from_env(cls) -> "Tolerances":
        """Defaults, overridden by ``CYCLICITY_ATOL`` / ``CYCLICITY_RTOL``."""
        atol = float(os.environ.get("CYCLICITY_ATOL", DEFAULT_ATOL))
        rtol = float(os.environ.get("CYCLICITY_RTOL", DEFAULT_RTOL))
        return cls(atol, rtol)

    def noise(self, r):
        return self.atol + self.rtol * np.abs(r)


@dataclass(frozen=True)
class FlowResult:
    r0: np.ndarray
    r_end: np.ndarray
    dr_end: np.ndarray
    exited: np.ndarray
    exit_theta: np.ndarray
    exit_direction: np.ndarray  # +1 outward, -1 toward r = 0, 0 inside


def _bound(cyl: CylinderEquation, r0: np.ndarray) -> float:
    if math.isfinite(cyl.delta):
        return cyl.delta
    m = float(np.max(np.abs(r0))) if r0.size else 1.0
    return max(1e3 * m, 1.0)


class _Escape(Exception):
    pass


def _solve_vector(cyl, r0, t_end, tol: Tolerances, bound: float, floor: np.ndarray):
    """One vectorized run; aborts as soon as any component leaves ``floor < |r| < bound``."""
    N = r0.size
    scale = SOLVER_SAFETY / math.sqrt(2 * N)

    def fun(theta, y):
        r = y[:N]
        a = np.abs(r)
        if not np.all((a < bound) & (a > floor)):
            raise _Escape
        F, dF = cyl.rhs(r, theta)
        return np.concatenate([F, dF * y[N:]])

    y0 = np.concatenate([r0, np.ones(N)])
    try:
        with np.errstate(all="ignore"):
            sol = solve_ivp(fun, (0.0, t_end), y0, method="DOP853",
                            rtol=tol.rtol * scale, atol=tol.atol * scale)
    except _Escape:
        return None
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        return None
    return sol.y[:N, -1], sol.y[N:, -1]


def _screen(cyl, r0, t_end, bound, floor):
    """Loose pass that freezes components once they leave the window.

    Returns ``(left, theta, direction)`` or ``None`` if the pass fails. Only
    the exits are used; trajectories that stay inside are integrated again
    at full accuracy.
    """
    N = r0.size

    def fun(theta, r):
        a = np.abs(r)
        inside = (a < bound) & (a > floor)
        F = np.zeros(N)
        if np.any(inside):
            F[inside] = cyl.rhs(r[inside], theta)[0]
        return F

    with np.errstate(all="ignore"):
        sol = solve_ivp(fun, (0.0, t_end), r0, method="DOP853", rtol=SCREEN_RTOL,
                        atol=SCREEN_RTOL * np.maximum(np.abs(r0), 1e-300))
    if not sol.success:
        return None
    a = np.abs(sol.y)
    outside = (a >= bound) | (a <= floor[:, None])
    left = outside[:, -1]
    first = np.argmax(outside, axis=1)
    theta = np.where(left, sol.t[first], np.nan)
    direction = np.where(left, np.where(a[np.arange(N), first] >= bound, 1, -1), 0)
    return left, theta, direction


def _solve_group(cyl, r0, idx, t_end, tol, bound, floor, out):
    """Vectorized solve of ``r0[idx]``, halving by ``|r0|`` on failure."""
    res = _solve_vector(cyl, r0[idx], t_end, tol, bound, floor[idx])
    if res is not None:
        out["r"][idx], out["s"][idx] = res
        return
    if idx.size == 1:
        k = int(idx[0])
        Pi, dPi, th, direction = _solve_single(cyl, float(r0[k]), t_end, tol, bound)
        if direction:
            out["exited"][k] = True
            out["theta"][k] = th
            out["dir"][k] = direction
        else:
            out["r"][k], out["s"][k] = Pi, dPi
        return
    order = idx[np.argsort(np.abs(r0[idx]), kind="stable")]
    half = order.size // 2
    _solve_group(cyl, r0, np.sort(order[:half]), t_end, tol, bound, floor, out)
    _solve_group(cyl, r0, np.sort(order[half:]), t_end, tol, bound, floor, out)


def _solve_single(cyl, r0: float, t_end: float, tol: Tolerances, bound: float):
    scale = SOLVER_SAFETY / math.sqrt(2)

    def fun(theta, y):
        F, dF = cyl.rhs(np.array([y[0]]), theta)
        return [float(F[0]), float(dF[0]) * y[1]]

    def leave(theta, y):
        return abs(y[0]) - bound

    leave.terminal = True
    events = [leave]
    if not cyl.analytic:
        floor = 1e-3 * abs(r0)

        def collapse(theta, y):
            return abs(y[0]) - floor

        collapse.terminal = True
        events.append(collapse)
    with np.errstate(all="ignore"):
        sol = solve_ivp(fun, (0.0, t_end), [r0, 1.0], method="DOP853",
                        rtol=tol.rtol * scale, atol=tol.atol * scale, events=events)
    if sol.status == 1:
        if sol.t_events[0].size:
            return None, None, float(sol.t_events[0][0]), 1
        return None, None, float(sol.t_events[1][0]), -1
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        grow = abs(sol.y[0, -1]) > abs(r0)
        return None, None, float(sol.t[-1]), 1 if grow else -1
    return float(sol.y[0, -1]), float(sol.y[1, -1]), math.nan, 0


def flow(cyl: CylinderEquation, r0, t_end: Optional[float] = None,
         tol: Optional[Tolerances] = None) -> FlowResult:
    """Integrate ``r(theta)`` and ``dr/dr0`` from ``theta = 0`` to ``t_end``."""
    tol = tol or Tolerances.from_env()
    r0 = np.atleast_1d(np.asarray(r0, dtype=float))
    if t_end is None:
        t_end = cyl.period
    bound = _bound(cyl, r0)
    if np.any(np.abs(r0) >= bound):
        raise IntegrationExit(f"initial radius outside validity window |r| < {bound:g}",
                              float(np.max(np.abs(r0))), 0.0)
    if not cyl.analytic and np.any(r0 == 0.0):
        raise IntegrationExit("r0 = 0 is singular in a non-analytic chart", 0.0, 0.0)
    N = r0.size
    out = {"r": np.full(N, np.nan), "s": np.full(N, np.nan), "exited": np.zeros(N, dtype=bool),
           "theta": np.full(N, np.nan), "dir": np.zeros(N, dtype=int)}
    floor = 1e-3 * np.abs(r0) if not cyl.analytic else np.full(N, -1.0)
    res = _solve_vector(cyl, r0, t_end, tol, bound, floor) if N > 1 else None
    if res is not None:
        out["r"], out["s"] = res
    else:
        idx = np.arange(N)
        scr = _screen(cyl, r0, t_end, bound, floor) if N > 1 else None
        if scr is not None:
            left, theta, direction = scr
            out["exited"][left] = True
            out["theta"][left] = theta[left]
            out["dir"][left] = direction[left]
            idx = idx[~left]
        if idx.size:
            _solve_group(cyl, r0, idx, t_end, tol, bound, floor, out)
    return FlowResult(r0, out["r"], out["s"], out["exited"], out["theta"], out["dir"])


def poincare_map(cyl: CylinderEquation, r0, tol: Optional[Tolerances] = None):
    """``(Pi(r0), Pi'(r0))`` over one period.

    Raises
    ------
    IntegrationExit
        If a trajectory leaves ``|r| < delta`` before ``theta = T``.
    """
    scalar = np.ndim(r0) == 0
    res = flow(cyl, r0, None, tol)
    if np.any(res.exited):
        k = int(np.argmax(res.exited))
        raise IntegrationExit(
            f"trajectory from r0={res.r0[k]!r} left the window at theta={res.exit_theta[k]!r}",
            float(res.r0[k]), float(res.exit_theta[k]))
    if scalar:
        return float(res.r_end[0]), float(res.dr_end[0])
    return res.r_end, res.dr_end


# ----------------------------------------------------------------------
# displacement profile and multiplicity
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplicityEstimate:
    """``d(r0) ~ c r0^m`` read off the displacement on ``r0 > 0``.

    ``m_hat`` is ``None`` when the profile is center-like.
    """

    m_hat: Optional[int]
    c_hat: Optional[float]
    c_interval: Optional[Tuple[float, float]]
    slope: Optional[float]
    center_like: bool
    snapped: bool
    fit_radii: Tuple[float, ...] = ()


@dataclass(frozen=True)
class PoincareData:
    r0: np.ndarray
    Pi: np.ndarray
    dPi: np.ndarray
    d: np.ndarray
    atol: float
    rtol: float
    exited: np.ndarray
    sign_pattern: Dict[str, str]
    estimate: Optional[MultiplicityEstimate] = None
    estimate_error: Optional[str] = None

    @property
    def m_hat(self):
        return None if self.estimate is None else self.estimate.m_hat

    @property
    def c_hat(self):
        return None if self.estimate is None else self.estimate.c_hat

    @property
    def semistable(self) -> bool:
        sp = self.sign_pattern
        return sp.get("positive") in ("+", "-") and sp.get("positive") == sp.get("negative")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r0", "Pi", "dPi", "d"])
        for row in zip(self.r0, self.Pi, self.dPi, self.d):
            w.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()


def _sign_of(values: np.ndarray, noise: np.ndarray) -> str:
    big = np.abs(values) > CENTER_NOISE_FACTOR * noise
    if not np.any(big):
        return "0"
    s = np.sign(values[big])
    if np.all(s > 0):
        return "+"
    if np.all(s < 0):
        return "-"
    return "mixed"


def radius_grid(cyl: CylinderEquation, r_max: Optional[float] = None,
                r_min: Optional[float] = None, count: int = 32) -> np.ndarray:
    if r_max is None:
        r_max = 0.1
    if math.isfinite(cyl.delta):
        r_max = min(r_max, 0.5 * cyl.delta)
    if r_min is None:
        r_min = r_max * 1e-4
    return np.geomspace(r_min, r_max, count)


def displacement_profile(cyl: CylinderEquation, r_max: Optional[float] = None,
                         r_min: Optional[float] = None, count: int = 32,
                         both_signs: bool = True, tol: Optional[Tolerances] = None,
                         estimate: bool = True) -> PoincareData:
    """Sample ``d(r0) = Pi(r0) - r0`` on a geometric grid of both signs.

    Trajectories that leave the window are kept with ``NaN`` values and a
    signed infinite displacement (``+inf`` outward) for sign reading.
    """
    tol = tol or Tolerances.from_env()
    pos = radius_grid(cyl, r_max, r_min, count)
    r0 = np.concatenate([-pos[::-1], pos]) if both_signs else pos
    res = flow(cyl, r0, None, tol)
    d = res.r_end - r0
    ex = res.exited
    d[ex] = np.sign(r0[ex]) * res.exit_direction[ex] * np.inf
    noise = tol.noise(r0)
    pattern = {"positive": _sign_of(d[r0 > 0], noise[r0 > 0])}
    if both_signs:
        pattern["negative"] = _sign_of(d[r0 < 0], noise[r0 < 0])
    data = PoincareData(r0=r0, Pi=res.r_end, dPi=res.dr_end, d=d, atol=tol.atol, rtol=tol.rtol,
                        exited=res.exited, sign_pattern=pattern)
    if not estimate:
        return data
    try:
        est = estimate_from_data(data, cyl.parity)
        err = None
    except MultiplicityError as exc:
        est, err = None, f"{exc} (raw slope {exc.slope:.6g})"
    return PoincareData(**{**data.__dict__, "estimate": est, "estimate_error": err})


def _snap(slope: float, parity: Optional[int]) -> Tuple[int, bool]:
    if parity is None:
        m = int(round(slope))
    else:
        m = 2 * int(math.floor((slope - parity) / 2.0 + 0.5)) + parity
    if abs(slope - m) > SNAP_LIMIT:
        raise MultiplicityError(f"slope {slope:.4f} is more than {SNAP_LIMIT} from an admissible integer",
                                slope)
    return m, parity is not None


def estimate_from_data(data: PoincareData, parity: Optional[int] = None) -> MultiplicityEstimate:
    """Log-log fit of ``|d|`` against ``r0`` on the positive radii."""
    tol = Tolerances(data.atol, data.rtol)
    mask = (data.r0 > 0) & np.isfinite(data.d)
    r = data.r0[mask]
    d = data.d[mask]
    noise = tol.noise(r)
    if np.all(np.abs(d) < CENTER_NOISE_FACTOR * noise):
        return MultiplicityEstimate(None, None, None, None, True, False)
    above = np.abs(d) > FIT_NOISE_FACTOR * noise
    idx = np.flatnonzero(above)[:FIT_POINTS]
    if idx.size < 3:
        raise MultiplicityError("too few radii above the noise floor for a fit", math.nan)
    rr, dd = r[idx], d[idx]
    if not (np.all(dd > 0) or np.all(dd < 0)):
        raise MultiplicityError("displacement changes sign inside the fit window", math.nan)
    slope, _ = np.polyfit(np.log(rr), np.log(np.abs(dd)), 1)
    m, snapped = _snap(float(slope), parity)
    ratios = dd / rr ** m
    c_hat = float(np.median(ratios))
    return MultiplicityEstimate(m, c_hat, (float(ratios.min()), float(ratios.max())),
                                float(slope), False, snapped, tuple(float(v) for v in rr))


def estimate_multiplicity(cyl: CylinderEquation, tol: Optional[Tolerances] = None,
                          r_max: Optional[float] = None) -> MultiplicityEstimate:
    """``(m_hat, c_hat)`` from the displacement profile, snapped to the chart's parity."""
    data = displacement_profile(cyl, r_max=r_max, both_signs=False, tol=tol, estimate=False)
    return estimate_from_data(data, cyl.parity)


# ----------------------------------------------------------------------
# characteristic exponent
# ----------------------------------------------------------------------

def F1_numeric(cyl: CylinderEquation, theta, h: Optional[float] = None) -> np.ndarray:
    """``dF/dr`` at ``r = 0`` by Richardson-extrapolated central differences."""
    if not cyl.analytic:
        raise ValueError("F is singular at r = 0 in this chart")
    if h is None:
        h = 1e-3 if not math.isfinite(cyl.delta) else min(1e-3, cyl.delta / 8)
    th = np.asarray(theta, dtype=float)

    def D(step):
        return (cyl(step, th) - cyl(-step, th)) / (2 * step)

    return (4 * D(h / 2) - D(h)) / 3


def characteristic_exponent(cyl: CylinderEquation, samples: int = 512) -> float:
    """``integral_0^T F1(theta) dtheta`` by the periodic trapezoid rule."""
    th = np.linspace(0.0, cyl.period, samples, endpoint=False)
    vals = F1_numeric(cyl, th)
    return float(np.sum(vals) * cyl.period / samples)
