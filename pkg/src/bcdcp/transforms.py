"""Joint Laplace transforms and probability generating functions.

For a query ``(theta, eta, nu, zeta, upsilon, gamma)`` the transform at
horizon T is ``exp(-B1(0) lam1_0 - B2(0) lam2_0 - C(T))``.  In reversed time
``tau = T - t`` each ``B_d`` solves the scalar autonomous ODE

    dPsi/dtau = 1 - delta * Psi - multiplier * ghat(Psi),   Psi(0) = boundary

where ``ghat`` is the Laplace transform of the line's self-jump law and the
multiplier is ``theta * jhat(nu)`` (line 1) or ``eta * khat(zeta)`` (line 2).

Two independent routes give ``B_d(0)``: adaptive Runge-Kutta integration of
the ODE, and inversion of ``tau(Psi) = int_boundary^Psi du / f(u)`` by
bracketed root finding.  The right-hand side ``f`` is concave with a single
root (the singular point) on ``[0, 1/delta]``; ``Psi`` moves monotonically
from the boundary toward it, upward when ``f(boundary) > 0`` and downward
when ``f(boundary) < 0``.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericFailure

ODE_TOL = 1e-10
CROSS_CHECK_TOL = 1e-8
ROOT_XTOL = 1e-14
QUAD_TOL = 1e-9
ASYMPTOTIC_FLOOR = 1e-12
ABS_TOL_SCALE = 1e-20


@lru_cache(maxsize=1 << 16)
def _ghat(law, eps):
    return law.laplace_transform(eps)


def laplace(law, eps):
    """Cached Laplace transform of a law; tiny negative round-off is clipped to zero."""
    return _ghat(law, max(float(eps), 0.0))


@lru_cache(maxsize=1 << 16)
def _ghat_complement(law, eps):
    return law.laplace_complement(eps)


def laplace_complement(law, eps):
    """Cached ``1 - laplace(law, eps)`` computed without cancellation."""
    return _ghat_complement(law, max(float(eps), 0.0))


@dataclass(frozen=True)
class TransformQuery:
    theta: float = 1.0
    eta: float = 1.0
    nu: float = 0.0
    zeta: float = 0.0
    upsilon: float = 0.0
    gamma: float = 0.0
    horizon: float = 1.0
    lam1: Optional[float] = None
    lam2: Optional[float] = None

    def check(self):
        for name in ("theta", "eta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        for name in ("nu", "zeta", "upsilon", "gamma"):
            v = getattr(self, name)
            if not v >= 0.0:
                raise DomainError(f"{name} must be nonnegative, got {v}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")


@dataclass
class BSolution:
    line: int
    boundary: float
    multiplier: float
    horizon: float
    b0: float                     # B(0) = Psi(horizon)
    grid: np.ndarray              # tau values
    values: np.ndarray            # Psi on the grid
    psi: Callable                 # dense Psi(tau)
    error_estimate: float
    b0_inversion: Optional[float] = None

    def B(self, t):
        """B at calendar time t in [0, horizon]."""
        return float(self.psi(self.horizon - t))


def _line_parts(model, line):
    ln = model.line(line)
    return ln.self_jump, ln.delta


def multiplier_for(model, line, query):
    """theta * jhat(nu) for line 1, eta * khat(zeta) for line 2."""
    ln = model.line(line)
    if line == 1:
        return query.theta * laplace(ln.severity, query.nu)
    return query.eta * laplace(ln.severity, query.zeta)


def multiplier_gap(model, line, query):
    """1 - multiplier, kept separately so that small gaps are not lost to rounding."""
    ln = model.line(line)
    scale, arg = (query.theta, query.nu) if line == 1 else (query.eta, query.zeta)
    return (1.0 - scale) + scale * laplace_complement(ln.severity, arg)


def _check_condition(law, delta, multiplier, line):
    if multiplier == 0:
        return
    if not law.has_mean():
        raise DomainError(f"line {line}: requires delta > multiplier * mean self jump, "
                          "but the self-jump mean is infinite")
    mu = law.mean()
    if delta < multiplier * mu:
        raise DomainError(f"line {line}: requires delta{line} >= multiplier * mean self jump "
                          f"(delta={delta}, multiplier={multiplier}, mean={mu})")


def drift(law, delta, multiplier, gap=None):
    """Right-hand side f(u) = 1 - delta u - multiplier * ghat(u).

    Evaluated as gap - delta u + multiplier (1 - ghat(u)) with
    gap = 1 - multiplier, which keeps full relative accuracy near u = 0.
    """
    if gap is None:
        gap = 1.0 - multiplier

    def f(u):
        return gap - delta * u + multiplier * laplace_complement(law, u)

    return f


def singular_point(multiplier, law, delta, gap=None):
    """Root of 1 - delta u - multiplier * ghat(u) on [0, 1/delta].

    Zero when the multiplier is one (``gap == 0``, the stationary case),
    1/delta when it is zero, otherwise the unique interior root found by Brent's method.
    """
    if not 0.0 <= multiplier <= 1.0:
        raise DomainError(f"multiplier must lie in [0, 1], got {multiplier}")
    if gap is None:
        gap = 1.0 - multiplier
    if gap == 0.0:
        return 0.0
    if multiplier == 0.0:
        return 1.0 / delta
    f = drift(law, delta, multiplier, gap)
    if f(1.0 / delta) >= 0.0:
        # root within rounding of the right end (negligible multiplier)
        return 1.0 / delta
    return optimize.brentq(f, 0.0, 1.0 / delta, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _integrate_psi(law, delta, multiplier, boundary, tau_end, tol=ODE_TOL, gap=None):
    f = drift(law, delta, multiplier, gap)
    # Psi can be tiny (small transform arguments), so control relative error only
    sol = integrate.solve_ivp(lambda tau, y: [f(y[0])], (0.0, tau_end), [boundary], method="DOP853",
                              rtol=tol, atol=tol * ABS_TOL_SCALE, dense_output=True)
    if not sol.success:
        raise NumericFailure(f"ODE integration failed: {sol.message}", math.nan)
    return sol


def invert_b0(law, delta, multiplier, boundary, horizon, gap=None):
    """B(0) from the integral inversion, independent of the ODE solver.

    The elapsed time ``tau(Psi)`` is accumulated piece by piece while a
    bracket ``[lo, hi]`` around the target is kept; inside it a Newton step
    (``dPsi = f dtau``) is taken when it stays in the bracket, a bisection
    step otherwise.
    """
    f = drift(law, delta, multiplier, gap)
    f_b = f(boundary)
    if f_b == 0.0:
        return boundary
    star = singular_point(multiplier, law, delta, gap)
    if (star - boundary) * f_b <= 0:
        raise NumericFailure("singular point lies on the wrong side of the boundary value", math.nan)

    def piece(a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda u: 1.0 / f(u), a, b, epsabs=1e-14, epsrel=1e-13, limit=400)
        return val

    # walk toward the singular point until the elapsed time passes the horizon
    lo, t_lo = boundary, 0.0
    hi = boundary + 0.5 * (star - boundary)
    t_hi = piece(lo, hi)
    while t_hi <= horizon:
        if not t_hi > t_lo:
            raise NumericFailure("elapsed-time integral is not monotone along the bracket", math.nan)
        nxt = star - 0.5 * (star - hi)
        if nxt == hi or nxt == star:
            # Psi(horizon) is within rounding of the singular point
            return star
        lo, t_lo = hi, t_hi
        t_hi = t_lo + piece(hi, nxt)
        hi = nxt

    p, t_p = lo, t_lo
    for _ in range(200):
        cand = p + (horizon - t_p) * f(p)
        if not min(lo, hi) < cand < max(lo, hi):
            cand = 0.5 * (lo + hi)
        t_c = t_p + piece(p, cand)
        if t_c < horizon:
            lo, t_lo = cand, t_c
        else:
            hi, t_hi = cand, t_c
        moved = abs(cand - p)
        p, t_p = cand, t_c
        if moved <= ROOT_XTOL * max(1.0, abs(p)) or abs(t_c - horizon) <= 1e-15 * horizon:
            return p
    raise NumericFailure("integral inversion did not converge", abs(hi - lo))


def solve_B(model, line, boundary, multiplier, horizon, tol=ODE_TOL, cross_check=True, gap=None):
    """Solve for B on [0, horizon] with B(horizon) = ``boundary``."""
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if not boundary >= 0:
        raise DomainError(f"boundary value must be nonnegative, got {boundary}")
    law, delta = _line_parts(model, line)
    _check_condition(law, delta, multiplier, line)
    sol = _integrate_psi(law, delta, multiplier, boundary, horizon, tol, gap)
    b0 = float(sol.y[0, -1])
    inverted = None
    err = tol * max(1.0, abs(b0))
    if cross_check:
        inverted = invert_b0(law, delta, multiplier, boundary, horizon, gap)
        err = abs(b0 - inverted)
        if err > CROSS_CHECK_TOL * max(1.0, abs(b0)):
            raise NumericFailure(f"ODE and inversion disagree on B(0): {b0} vs {inverted}", err)
    return BSolution(line, boundary, multiplier, horizon, b0, sol.t, sol.y[0],
                     lambda tau: sol.sol(tau)[0], err, inverted)


def c_term(b1, b2, model):
    """C(T): integral over [0, T] of rho (1 - fhat(B1, B2)) + a1 delta1 B1 + a2 delta2 B2."""
    if b1.horizon != b2.horizon:
        raise DomainError("B solutions must share the horizon")
    rho = model.shocks.rho
    a1d1 = model.line1.a * model.line1.delta
    a2d2 = model.line2.a * model.line2.delta

    def integrand(tau):
        p1 = max(float(b1.psi(tau)), 0.0)
        p2 = max(float(b2.psi(tau)), 0.0)
        shock = rho * (1.0 - model.shocks.laplace(p1, p2)) if rho > 0 else 0.0
        return shock + a1d1 * p1 + a2d2 * p2

    if rho == 0 and a1d1 == 0 and a2d2 == 0:
        return 0.0, 0.0
    val, err = integrate.quad(integrand, 0.0, b1.horizon, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    if err > 10 * QUAD_TOL * max(1.0, abs(val)):
        raise NumericFailure(f"C(T) quadrature error {err:.2e} exceeds tolerance", err)
    return val, err


@dataclass
class TransformResult:
    value: float
    error_estimate: float
    b1: float
    b2: float
    c: float


def evaluate(query, model, cross_check=True, tol=ODE_TOL):
    """E[theta^N1 eta^N2 exp(-nu L1 - zeta L2 - upsilon lam1_T - gamma lam2_T) | lam_0]."""
    query.check()
    lam1 = model.line1.lam0 if query.lam1 is None else query.lam1
    lam2 = model.line2.lam0 if query.lam2 is None else query.lam2
    m1 = multiplier_for(model, 1, query)
    m2 = multiplier_for(model, 2, query)
    s1 = solve_B(model, 1, query.upsilon, m1, query.horizon, tol, cross_check, multiplier_gap(model, 1, query))
    s2 = solve_B(model, 2, query.gamma, m2, query.horizon, tol, cross_check, multiplier_gap(model, 2, query))
    c, c_err = c_term(s1, s2, model)
    exponent = s1.b0 * lam1 + s2.b0 * lam2 + c
    value = math.exp(-exponent)
    err = value * (s1.error_estimate * lam1 + s2.error_estimate * lam2 + c_err)
    return TransformResult(value, err, s1.b0, s2.b0, c)


def _level_term(law, delta, a, boundary):
    # int_0^boundary a delta u / (delta u + ghat(u) - 1) du
    if a == 0 or boundary == 0:
        return 0.0
    val, _ = integrate.quad(lambda u: a * delta * u / (delta * u - laplace_complement(law, u)), 0.0, boundary,
                            epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return val


def evaluate_asymptotic(model, upsilon, gamma, tol=ODE_TOL):
    """Joint Laplace transform of the stationary law of (lambda1, lambda2).

    The shock integral runs in tau up to the point where both Psi fall below
    1e-12; the cutoff is doubled once and the two results compared.
    """
    model.require_stationary()
    if upsilon < 0 or gamma < 0:
        raise DomainError("Laplace arguments must be nonnegative")
    rates = model.relaxation_rates()
    bounds = (upsilon, gamma)
    tau_max = 1.0
    for d in (1, 2):
        if bounds[d - 1] > 0:
            tau_max = max(tau_max, math.log(bounds[d - 1] / ASYMPTOTIC_FLOOR) / rates[d - 1])

    def shock_integral(t_end):
        if model.shocks.rho == 0:
            return 0.0
        sols = [_integrate_psi(*_line_parts(model, d), 1.0, bounds[d - 1], t_end, tol, 0.0) for d in (1, 2)]

        def integrand(tau):
            p1 = max(float(sols[0].sol(tau)[0]), 0.0)
            p2 = max(float(sols[1].sol(tau)[0]), 0.0)
            return 1.0 - model.shocks.laplace(p1, p2)

        edges = np.linspace(0.0, t_end, 9)
        return model.shocks.rho * math.fsum(
            integrate.quad(integrand, lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
            for lo, hi in zip(edges[:-1], edges[1:]))

    first = shock_integral(tau_max)
    second = shock_integral(2.0 * tau_max)
    level = sum(_level_term(model.line(d).self_jump, model.line(d).delta, model.line(d).a, bounds[d - 1])
                for d in (1, 2))
    value = math.exp(-(second + level))
    return TransformResult(value, value * abs(second - first), math.nan, math.nan, second + level)
