"""Large-population limit of the tracked observables.

As N grows, the rescaled triple (advantaged fraction y, advantaged-carried
weight u, disadvantaged-carried weight v) follows a deterministic flow with
an explicit solution: y is obtained by inverting the powered-odds map
x -> x^(1+s) / (1-x) along an exponential clock, and u, v are assembled
from a one-dimensional integral whose integrand has an integrable
singularity at 1. The fixed-step Runge-Kutta integrator at the bottom is an
independent cross-check of those formulas, not a production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = [
    "LimitParams",
    "LimitState",
    "LevelState",
    "QuadratureError",
    "powered_odds",
    "powered_odds_inverse",
    "advantaged_fraction",
    "weight_integral",
    "limit_state",
    "limit_trajectory",
    "state_at_level",
    "asymptotic_weight",
    "infinite_selection_weight",
    "drift",
    "rk4_trajectory",
]

# right-endpoint panel boundary: beyond it the integrand is evaluated in the
# substituted variable u = (1-x)^(1/(2s)), which removes the singularity at 1
_SINGULAR_CUT = 0.75
_LN2 = math.log(2.0)


class QuadratureError(RuntimeError):
    """Raised when the weight integral cannot be resolved to tolerance."""


@dataclass(frozen=True)
class LimitParams:
    """Initial advantaged fraction and selection strength of the limit flow."""

    initial_fraction: float
    selection: float

    def __post_init__(self):
        if not 0.0 < self.initial_fraction < 1.0:
            raise ValueError(
                "initial_fraction must lie in the open interval (0, 1) "
                f"(got {self.initial_fraction})"
            )
        if self.selection <= 0.0:
            raise ValueError(f"selection must be > 0 (got {self.selection})")


@dataclass(frozen=True, slots=True)
class LimitState:
    """Value (y, u, v) of the limit flow at time t.

    ``complement`` is 1 - y carried at full relative precision: for large t
    the fraction saturates in float64 while expressions such as v / (1 - y)
    remain meaningful through the complement.
    """

    t: float
    y: float
    u: float
    v: float
    complement: float

    @property
    def total_weight(self) -> float:
        return self.u + self.v


@dataclass(frozen=True, slots=True)
class LevelState:
    """Limit state read off when the advantaged fraction first reaches a level."""

    level: float
    u: float
    v: float

    @property
    def total_weight(self) -> float:
        return self.u + self.v


def powered_odds(x: float, s: float) -> float:
    """The map x -> x^(1+s) / (1-x), strictly increasing from [0,1) onto [0,inf)."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1) (got {x})")
    if x == 0.0:
        return 0.0
    return math.exp((1.0 + s) * math.log(x) - math.log1p(-x))


def powered_odds_inverse(q: float, s: float) -> float:
    """Inverse of ``powered_odds``: the unique x in [0,1) with x^(1+s)/(1-x) = q."""
    if q < 0.0:
        raise ValueError(f"q must be >= 0 (got {q})")
    if q == 0.0:
        return 0.0
    return _solve_fraction(math.log(q), s)[0]


def _solve_fraction(log_q: float, s: float) -> tuple[float, float]:
    """Solve (1+s) ln x - ln(1-x) = log_q; returns (x, 1-x).

    Whichever of x and 1-x is small is solved for directly (bracketed
    Newton, relative tolerance about 1e-15), so the returned pair keeps full
    relative precision on both sides even when x saturates to 1 in float64.
    """
    if log_q <= -s * _LN2:  # x <= 1/2
        x = _solve_small_fraction(log_q, s)
        return x, 1.0 - x
    eps = _solve_small_complement(log_q, s)
    return 1.0 - eps, eps


def _solve_small_fraction(log_q: float, s: float) -> float:
    """Newton for the x <= 1/2 branch, bracketed by bounds on -ln(1-x)."""
    one_plus_s = 1.0 + s
    hi = min(math.exp(min(log_q / one_plus_s, 0.0)), 0.5)
    lo = min(math.exp((log_q + math.log1p(-hi)) / one_plus_s), hi)
    if lo == hi:
        return hi
    x = math.sqrt(lo * hi)
    for _ in range(200):
        fx = one_plus_s * math.log(x) - math.log1p(-x) - log_q
        if fx > 0.0:
            hi = x
        else:
            lo = x
        dfx = one_plus_s / x + 1.0 / (1.0 - x)
        x_new = x - fx / dfx
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * x_new:
            return x_new
        x = x_new
    raise ArithmeticError(
        f"powered-odds inversion did not converge (log_q={log_q}, s={s})"
    )


def _solve_small_complement(log_q: float, s: float) -> float:
    """Newton in log space for eps = 1 - x on the x > 1/2 branch.

    Works on L = ln(eps), where the equation reads
    (1+s) log1p(-exp(L)) - L = log_q; the log variable keeps the iteration
    stable down to the smallest representable complements.
    """
    one_plus_s = 1.0 + s
    log_hi = min(-log_q, -_LN2)
    log_lo = max(
        -log_q - one_plus_s * _LN2,
        -log_q + one_plus_s * math.log1p(-math.exp(log_hi)),
    )
    level = log_hi
    for _ in range(200):
        eps = math.exp(level)
        h = one_plus_s * math.log1p(-eps) - level - log_q
        if h > 0.0:  # h decreases in the level
            log_lo = max(log_lo, level)
        else:
            log_hi = min(log_hi, level)
        dh = -one_plus_s * eps / (1.0 - eps) - 1.0
        level_new = level - h / dh
        if not log_lo <= level_new <= log_hi:
            level_new = 0.5 * (log_lo + log_hi)
        if abs(level_new - level) <= 1e-15:
            return math.exp(level_new)
        level = level_new
    raise ArithmeticError(
        f"powered-odds complement solve did not converge (log_q={log_q}, s={s})"
    )


def _fraction_state(params: LimitParams, t: float) -> tuple[float, float]:
    """(y, 1-y) at time t along the exponential powered-odds clock."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0 (got {t})")
    a, s = params.initial_fraction, params.selection
    log_q = (1.0 + s) * math.log(a) - math.log1p(-a) + s * t
    return _solve_fraction(log_q, s)


def advantaged_fraction(params: LimitParams, t: float) -> float:
    """Advantaged fraction y at time t: starts at the initial fraction and
    increases strictly towards 1 along the exponential powered-odds clock."""
    return _fraction_state(params, t)[0]


def _direct_integrand(x: float, s: float) -> float:
    return math.exp(
        math.log1p(-x) / (2.0 * s) - (1.0 + s) / (2.0 * s) * math.log(x)
    ) * (0.5 + 1.0 / (2.0 * s * (1.0 - x)))


def _substituted_integrand(u: float, s: float) -> float:
    # u = (1-x)^(1/(2s)) turns the integrand into (1 + s u^(2s)) x^(-(1+s)/(2s)),
    # smooth down to u = 0 (that is, x = 1)
    if u <= 0.0:
        return 1.0
    t = 2.0 * s * math.log(u)
    x = -math.expm1(t)
    return (1.0 + s * math.exp(t)) * math.exp(-(1.0 + s) / (2.0 * s) * math.log(x))


def _integral_between(
    lo: float,
    hi: float,
    s: float,
    abs_tol: float,
    lo_complement: float | None = None,
    hi_complement: float | None = None,
) -> float:
    """Integrate the weight integrand over [lo, hi], 0 < lo, hi <= 1.

    The optional complements carry 1 - lo and 1 - hi at full relative
    precision for bounds that saturate to 1 in float64; they position the
    endpoints of the substituted right panel.
    """
    if lo_complement is None:
        lo_complement = 1.0 - lo
    if hi_complement is None:
        hi_complement = 1.0 - hi
    if hi_complement >= lo_complement:  # hi <= lo
        return 0.0
    total = 0.0
    err_bound = 0.0
    cut = max(lo, _SINGULAR_CUT)
    direct_hi = min(hi, cut)
    if direct_hi > lo:
        val, err = quad(
            _direct_integrand, lo, direct_hi, args=(s,),
            epsabs=0.25 * abs_tol, epsrel=1e-12, limit=200, full_output=1,
        )[:2]
        total += val
        err_bound += err
    # the substituted panel covers [max(lo, cut), hi]; its endpoints live on
    # the complement scale, where saturation of lo or hi to 1.0 is harmless
    upper_complement = min(lo_complement, 1.0 - _SINGULAR_CUT)
    if hi_complement < upper_complement:
        u_lo = 0.0 if hi_complement <= 0.0 else math.exp(
            math.log(hi_complement) / (2.0 * s)
        )
        u_hi = math.exp(math.log(upper_complement) / (2.0 * s))
        # for very large s the substituted integrand varies in a boundary
        # layer of width ~1/s below u_hi; seed the subdivision there
        points = [
            p for f in (1e-6, 1e-4, 1e-2, 0.5)
            if u_lo < (p := math.exp(math.log(upper_complement * f) / (2.0 * s))) < u_hi
        ]
        val, err = quad(
            _substituted_integrand, u_lo, u_hi, args=(s,),
            epsabs=0.25 * abs_tol, epsrel=1e-12, limit=200, full_output=1,
            points=points or None,
        )[:2]
        total += val
        err_bound += err
    # conservative QUADPACK estimates cannot beat float64 on huge integrands,
    # so the non-convergence flag carries a machine-precision-relative floor
    if err_bound > abs_tol + 1e-12 * abs(total):
        raise QuadratureError(
            f"weight integral over [{lo}, {hi}] only resolved to "
            f"{err_bound:.3e} (requested {abs_tol:.3e})"
        )
    return total


def weight_integral(params: LimitParams, y_upper: float, abs_tol: float = 1e-10) -> float:
    """Integral of (1-x)^(1/(2s)) x^(-(1+s)/(2s)) [1/2 + 1/(2s(1-x))] from the
    initial fraction up to ``y_upper``.

    The integrand behaves like (1-x)^(1/(2s)-1) near 1, integrable for every
    s > 0; the right-endpoint panel is computed in a substituted variable
    that removes the singularity, so ``y_upper = 1`` is a valid input.

    Raises:
        ValueError: if ``y_upper`` is outside [initial_fraction, 1].
        QuadratureError: if the requested absolute tolerance is not reached.
    """
    a = params.initial_fraction
    if y_upper > 1.0:
        raise ValueError(f"y_upper must be <= 1 (got {y_upper})")
    if y_upper < a:
        raise ValueError(
            f"y_upper must be >= initial_fraction={a} (got {y_upper})"
        )
    return _integral_between(a, y_upper, params.selection, abs_tol)


def _scale_factor(a: float, s: float) -> float:
    """a^((1+s)/(2s)) / (1-a)^(1/(2s)), the initial-condition prefactor."""
    return math.exp(
        (1.0 + s) / (2.0 * s) * math.log(a) - math.log1p(-a) / (2.0 * s)
    )


def _decay_term(complement: float, s: float) -> float:
    """(1-y)^(1/(2s)) / y^((1+s)/(2s)) evaluated from the complement 1-y."""
    if complement <= 0.0:
        return 0.0
    return math.exp(
        (math.log(complement) - (1.0 + s) * math.log1p(-complement)) / (2.0 * s)
    )


def _assemble(
    a: float, s: float, y: float, complement: float, integral: float
) -> tuple[float, float]:
    scale = _scale_factor(a, s)
    u = y * scale * (_decay_term(complement, s) + integral)
    v = complement * scale * integral
    return u, v


def limit_state(params: LimitParams, t: float, abs_tol: float = 1e-10) -> LimitState:
    """Closed-form (y, u, v) of the limit flow at time t.

    Satisfies u/y - v/(1-y) = exp(-t/2) identically (use ``complement`` for
    1-y once the fraction saturates); at t = 0 it returns (a, a, 0).
    """
    a, s = params.initial_fraction, params.selection
    y, complement = _fraction_state(params, t)
    integral = _integral_between(
        a, y, s, abs_tol, lo_complement=1.0 - a, hi_complement=complement
    )
    u, v = _assemble(a, s, y, complement, integral)
    return LimitState(t, y, u, v, complement)


def limit_trajectory(
    params: LimitParams, times, increment_tol: float = 1e-13
) -> list[LimitState]:
    """Closed-form states along a non-decreasing time grid.

    Accumulates the weight integral incrementally between consecutive grid
    fractions, so evaluating a dense grid costs one short quadrature per
    point instead of one full-range quadrature per point.
    """
    states = []
    a, s = params.initial_fraction, params.selection
    prev_y, prev_complement = a, 1.0 - a
    integral = 0.0
    prev_t = 0.0
    for t in times:
        if t < prev_t:
            raise ValueError("times must be non-decreasing")
        y, complement = _fraction_state(params, t)
        integral += _integral_between(
            prev_y, y, s, increment_tol,
            lo_complement=prev_complement, hi_complement=complement,
        )
        u, v = _assemble(a, s, y, complement, integral)
        states.append(LimitState(t, y, u, v, complement))
        if complement < prev_complement:
            prev_y, prev_complement = y, complement
        prev_t = t
    return states


def state_at_level(params: LimitParams, level: float, abs_tol: float = 1e-10) -> LevelState:
    """Limit state when the advantaged fraction first reaches ``level``.

    ``level = 1`` is the t -> infinity limit (u = scale * full integral,
    v = 0); ``level = initial_fraction`` gives (a, 0) back.
    """
    a, s = params.initial_fraction, params.selection
    if not a <= level <= 1.0:
        raise ValueError(
            f"level must lie in [initial_fraction={a}, 1] (got {level})"
        )
    integral = _integral_between(a, level, s, abs_tol)
    if level == 1.0:
        return LevelState(1.0, _scale_factor(a, s) * integral, 0.0)
    u, v = _assemble(a, s, level, 1.0 - level, integral)
    return LevelState(level, u, v)


def asymptotic_weight(params: LimitParams, abs_tol: float = 1e-10) -> float:
    """Long-run weight fraction of the initially advantaged group."""
    return state_at_level(params, 1.0, abs_tol).u


def infinite_selection_weight(a: float) -> float:
    """Limit of the asymptotic weight as selection grows: 2 sqrt(a) - a."""
    return 2.0 * math.sqrt(a) - a


def drift(y: float, u: float, v: float, selection: float) -> tuple[float, float, float]:
    """Right-hand side of the limit flow at (y, u, v).

    This is N times the expected one-step change of the rescaled simulation
    observables, evaluated at the same arguments; the identity is exact for
    finite N, which is what the enumeration checks in the test suite pin.
    """
    s = selection
    den = 1.0 + s * (1.0 - y)
    dy = s * y * (1.0 - y) / den
    du = 0.5 * u + 0.5 * (u + v) * y - u / den
    dv = 0.5 * v + 0.5 * (u + v) * (1.0 - y) - (1.0 + s) * v / den
    return dy, du, dv


def rk4_trajectory(
    params: LimitParams,
    t_max: float,
    dt: float = 1e-4,
    record_every: int | None = None,
):
    """Classic fixed-step fourth-order Runge-Kutta integration of the flow.

    Starts from (a, a, 0) and records every ``record_every`` steps (default:
    about every 0.05 time units). Returns (times, values) with values of
    shape (n_records, 3). The drift is inlined in the loop for speed; keep
    it in sync with ``drift``.
    """
    if t_max < 0.0:
        raise ValueError(f"t_max must be >= 0 (got {t_max})")
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0 (got {dt})")
    if record_every is None:
        record_every = max(1, int(round(0.05 / dt)))
    s = params.selection
    n_steps = int(round(t_max / dt))
    y = params.initial_fraction
    u = params.initial_fraction
    v = 0.0
    half = 0.5 * dt
    sixth = dt / 6.0
    times = [0.0]
    values = [(y, u, v)]
    for i in range(1, n_steps + 1):
        den = 1.0 + s * (1.0 - y)
        ky1 = s * y * (1.0 - y) / den
        ku1 = 0.5 * u + 0.5 * (u + v) * y - u / den
        kv1 = 0.5 * v + 0.5 * (u + v) * (1.0 - y) - (1.0 + s) * v / den

        y2 = y + half * ky1
        u2 = u + half * ku1
        v2 = v + half * kv1
        den = 1.0 + s * (1.0 - y2)
        ky2 = s * y2 * (1.0 - y2) / den
        ku2 = 0.5 * u2 + 0.5 * (u2 + v2) * y2 - u2 / den
        kv2 = 0.5 * v2 + 0.5 * (u2 + v2) * (1.0 - y2) - (1.0 + s) * v2 / den

        y3 = y + half * ky2
        u3 = u + half * ku2
        v3 = v + half * kv2
        den = 1.0 + s * (1.0 - y3)
        ky3 = s * y3 * (1.0 - y3) / den
        ku3 = 0.5 * u3 + 0.5 * (u3 + v3) * y3 - u3 / den
        kv3 = 0.5 * v3 + 0.5 * (u3 + v3) * (1.0 - y3) - (1.0 + s) * v3 / den

        y4 = y + dt * ky3
        u4 = u + dt * ku3
        v4 = v + dt * kv3
        den = 1.0 + s * (1.0 - y4)
        ky4 = s * y4 * (1.0 - y4) / den
        ku4 = 0.5 * u4 + 0.5 * (u4 + v4) * y4 - u4 / den
        kv4 = 0.5 * v4 + 0.5 * (u4 + v4) * (1.0 - y4) - (1.0 + s) * v4 / den

        y += sixth * (ky1 + 2.0 * (ky2 + ky3) + ky4)
        u += sixth * (ku1 + 2.0 * (ku2 + ku3) + ku4)
        v += sixth * (kv1 + 2.0 * (kv2 + kv3) + kv4)
        if i % record_every == 0 or i == n_steps:
            times.append(i * dt)
            values.append((y, u, v))
    return np.array(times), np.array(values)
