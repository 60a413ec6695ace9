"""Jump-size and severity laws, copulas for the joint external shocks.

Every law knows its first two moments, its Laplace transform, its CDF and
how to sample itself from a stream.  Copulas expose the CDF, the conditional
distribution ``h(v | u) = dC/du`` and a sampler; together with exponential
marginals they give the shock cross moment and the joint Laplace transform.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats

from . import _kernel_py as kp
from . import backend
from .errors import DomainError, NumericFailure

LT_ABS_TOL = 1e-10
LT_MAX_LEVELS = 60


def _half_line_integral(func, abs_tol=LT_ABS_TOL):
    """Integral of ``func`` over (0, inf) after the map x = s / (1 - s)."""

    def integrand(s):
        one_minus = 1.0 - s
        return func(s / one_minus) / (one_minus * one_minus)

    value, err, info, *rest = integrate.quad(integrand, 0.0, 1.0, epsabs=abs_tol, epsrel=1e-12,
                                             limit=2 ** 10, full_output=True)
    if err > abs_tol and info["last"] >= 2 ** 10:
        raise NumericFailure(f"Laplace transform quadrature did not converge (error estimate {err:.2e})", err)
    return value


class Law:
    """Common interface; subclasses are frozen dataclasses."""

    code = None

    def mean(self):
        raise NotImplementedError

    def second_moment(self):
        raise NotImplementedError

    def has_mean(self):
        return True

    def has_second_moment(self):
        return True

    def variance(self):
        return self.second_moment() - self.mean() ** 2

    def laplace_transform(self, eps):
        if eps < 0:
            raise DomainError(f"Laplace argument must be nonnegative, got {eps}")
        if eps == 0:
            return 1.0
        return _half_line_integral(lambda x: math.exp(-eps * x) * self.pdf(x))

    def laplace_complement(self, eps):
        """1 - LT(eps), accurate to relative precision even as eps -> 0.

        Uses 1 - E e^{-eps Y} = eps * int_0^inf e^{-eps y} P(Y > y) dy.
        """
        if eps < 0:
            raise DomainError(f"Laplace argument must be nonnegative, got {eps}")
        if eps == 0:
            return 0.0
        return eps * _half_line_integral(lambda x: math.exp(-eps * x) * float(self.sf(x)), abs_tol=0.0)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def kernel_params(self):
        raise NotImplementedError

    def sample(self, stream):
        code, p1, p2, p3 = self.kernel_params()
        return kp.sample_law(code, p1, p2, p3, stream)

    def sample_many(self, seed, n, path_index=0):
        return backend.sample_law_many(self.kernel_params(), seed, n, path_index)


@dataclass(frozen=True)
class ZeroLaw(Law):
    """Point mass at zero; switches self-excitation off (shot-noise case)."""

    def mean(self):
        return 0.0

    def second_moment(self):
        return 0.0

    def laplace_transform(self, eps):
        if eps < 0:
            raise DomainError(f"Laplace argument must be nonnegative, got {eps}")
        return 1.0

    def laplace_complement(self, eps):
        if eps < 0:
            raise DomainError(f"Laplace argument must be nonnegative, got {eps}")
        return 0.0

    def cdf(self, x):
        return np.where(np.asarray(x) >= 0, 1.0, 0.0)

    def kernel_params(self):
        return (kp.LAW_ZERO, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ExponentialLaw(Law):
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"exponential rate must be positive, got {self.rate}")

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / self.rate ** 2

    def laplace_transform(self, eps):
        if eps < 0:
            raise DomainError(f"Laplace argument must be nonnegative, got {eps}")
        return self.rate / (self.rate + eps)

    def laplace_complement(self, eps):
        if eps < 0:
            raise DomainError(f"Laplace argument must be nonnegative, got {eps}")
        return eps / (self.rate + eps)

    def pdf(self, x):
        return self.rate * math.exp(-self.rate * x) if x >= 0 else 0.0

    def cdf(self, x):
        return -np.expm1(-self.rate * np.maximum(x, 0.0))

    def quantile(self, u):
        return -np.log1p(-np.asarray(u)) / self.rate

    def kernel_params(self):
        return (kp.LAW_EXPONENTIAL, self.rate, 0.0, 0.0)


@dataclass(frozen=True)
class LoggammaLaw(Law):
    """Y = scale * (exp(W) - 1) with W ~ Gamma(shape ``c``, rate ``rate``)."""

    scale: float
    rate: float
    c: float

    def __post_init__(self):
        for name in ("scale", "rate", "c"):
            if not getattr(self, name) > 0:
                raise DomainError(f"loggamma {name} must be positive, got {getattr(self, name)}")

    def raw_moment(self, k):
        # E[(1 + Y/scale)^j] = (rate / (rate - j))^c, expand the binomial
        if not self.rate > k:
            raise DomainError(f"loggamma moment of order {k} needs rate > {k}, got {self.rate}")
        total = 0.0
        for j in range(k + 1):
            total += math.comb(k, j) * (-1) ** (k - j) * (self.rate / (self.rate - j)) ** self.c
        return self.scale ** k * total

    def has_mean(self):
        return self.rate > 1

    def has_second_moment(self):
        return self.rate > 2

    def mean(self):
        return self.raw_moment(1)

    def second_moment(self):
        return self.raw_moment(2)

    def pdf(self, y):
        if y <= 0:
            return 0.0
        z = math.log1p(y / self.scale)
        return math.exp(self.c * math.log(self.rate) - math.lgamma(self.c) - math.log(self.scale)
                        + (self.c - 1.0) * math.log(z) - (self.rate + 1.0) * z)

    def cdf(self, y):
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        return special.gammainc(self.c, self.rate * np.log1p(y / self.scale))

    def sf(self, y):
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        return special.gammaincc(self.c, self.rate * np.log1p(y / self.scale))

    def kernel_params(self):
        return (kp.LAW_LOGGAMMA, self.scale, self.rate, self.c)


@dataclass(frozen=True)
class FrechetLaw(Law):
    scale: float
    shape: float

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0):
            raise DomainError(f"Frechet parameters must be positive, got {self.scale}, {self.shape}")

    def has_mean(self):
        return self.shape > 1

    def has_second_moment(self):
        return self.shape > 2

    def mean(self):
        if not self.has_mean():
            raise DomainError(f"Frechet mean needs shape > 1, got {self.shape}")
        return self.scale * math.gamma(1.0 - 1.0 / self.shape)

    def second_moment(self):
        if not self.has_second_moment():
            raise DomainError(f"Frechet second moment needs shape > 2, got {self.shape}")
        return self.scale ** 2 * math.gamma(1.0 - 2.0 / self.shape)

    def pdf(self, z):
        if z <= 0:
            return 0.0
        r = z / self.scale
        return self.shape / self.scale * r ** (-self.shape - 1.0) * math.exp(-r ** (-self.shape))

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(z > 0, np.exp(-np.power(np.maximum(z, 1e-300) / self.scale, -self.shape)), 0.0)

    def sf(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(z > 0, -np.expm1(-np.power(np.maximum(z, 1e-300) / self.scale, -self.shape)), 1.0)

    def kernel_params(self):
        return (kp.LAW_FRECHET, self.scale, self.shape, 0.0)


@dataclass(frozen=True)
class ParetoLaw(Law):
    """Beta-prime form: xi = scale * G_k / G_omega with unit gammas."""

    omega: float
    scale: float
    k: float

    def __post_init__(self):
        for name in ("omega", "scale", "k"):
            if not getattr(self, name) > 0:
                raise DomainError(f"Pareto {name} must be positive, got {getattr(self, name)}")

    def has_mean(self):
        return self.omega > 1

    def has_second_moment(self):
        return self.omega > 2

    def mean(self):
        if not self.has_mean():
            raise DomainError(f"Pareto mean needs omega > 1, got {self.omega}")
        return self.scale * self.k / (self.omega - 1.0)

    def second_moment(self):
        if not self.has_second_moment():
            raise DomainError(f"Pareto second moment needs omega > 2, got {self.omega}")
        return self.scale ** 2 * self.k * (self.k + 1.0) / ((self.omega - 1.0) * (self.omega - 2.0))

    def pdf(self, x):
        if x <= 0:
            return 0.0
        w, z, k = self.omega, self.scale, self.k
        return math.exp(math.lgamma(w + k) - math.lgamma(w) - math.lgamma(k) + w * math.log(z)
                        + (k - 1.0) * math.log(x) - (w + k) * math.log(z + x))

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return special.betainc(self.k, self.omega, x / (x + self.scale))

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return special.betainc(self.omega, self.k, self.scale / (x + self.scale))

    def kernel_params(self):
        return (kp.LAW_PARETO, self.omega, self.scale, self.k)


# --------------------------------------------------------------------------
# copulas

FAMILIES = ("fgm", "gaussian", "student_t", "gumbel")
_FAMILY_CODE = {"fgm": kp.COP_FGM, "gaussian": kp.COP_GAUSSIAN,
                "student_t": kp.COP_STUDENT_T, "gumbel": kp.COP_GUMBEL}


@dataclass(frozen=True)
class CopulaSpec:
    family: str
    theta: float
    dof: float = 5.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown copula family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "gumbel":
            if not self.theta >= 1:
                raise DomainError(f"Gumbel copula needs theta >= 1, got {self.theta}")
        elif not -1 <= self.theta <= 1:
            raise DomainError(f"{self.family} copula needs theta in [-1, 1], got {self.theta}")
        if self.family == "student_t" and not self.dof > 0:
            raise DomainError(f"t copula needs positive degrees of freedom, got {self.dof}")

    @property
    def code(self):
        return _FAMILY_CODE[self.family]

    def is_independent(self):
        return self.theta == (1.0 if self.family == "gumbel" else 0.0) and self.family != "student_t"

    def is_degenerate(self):
        """Perfect dependence: comonotone (+1) or countermonotone (-1), else 0."""
        if self.family in ("gaussian", "student_t") and abs(self.theta) == 1:
            return int(self.theta)
        return 0

    def cdf(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        th = self.theta
        if self.family == "fgm":
            return u * v * (1.0 + th * (1.0 - u) * (1.0 - v))
        if self.family == "gumbel":
            with np.errstate(divide="ignore"):
                x = -np.log(u)
                y = -np.log(v)
                return np.exp(-np.power(np.power(x, th) + np.power(y, th), 1.0 / th))
        deg = self.is_degenerate()
        if deg == 1:
            return np.minimum(u, v)
        if deg == -1:
            return np.maximum(u + v - 1.0, 0.0)
        cov = [[1.0, th], [th, 1.0]]
        uu, vv = np.broadcast_arrays(u, v)
        out = np.empty(uu.shape)
        flat_u, flat_v, flat_out = uu.ravel(), vv.ravel(), out.reshape(-1)
        for i, (a, b) in enumerate(zip(flat_u, flat_v)):
            if a <= 0 or b <= 0:
                flat_out[i] = 0.0
            elif a >= 1:
                flat_out[i] = b
            elif b >= 1:
                flat_out[i] = a
            elif self.family == "gaussian":
                flat_out[i] = stats.multivariate_normal(mean=[0, 0], cov=cov).cdf([special.ndtri(a), special.ndtri(b)])
            else:
                q = stats.t.ppf([a, b], self.dof)
                flat_out[i] = stats.multivariate_t(loc=[0, 0], shape=cov, df=self.dof).cdf(q)
        return out if out.ndim else float(out)

    def conditional_tail(self, tu, tv):
        """1 - h(v | u) evaluated from tail masses tu = 1 - u and tv = 1 - v.

        Working with tails keeps precision where u or v approach 1.
        """
        tu = np.asarray(tu, dtype=float)
        tv = np.asarray(tv, dtype=float)
        th = self.theta
        if self.family == "fgm":
            u = 1.0 - tu
            v = 1.0 - tv
            return tv * (1.0 - th * v * (1.0 - 2.0 * u))
        if self.family == "gaussian":
            x = -special.ndtri(tu)
            y = -special.ndtri(tv)
            return special.ndtr(-(y - th * x) / math.sqrt(1.0 - th * th))
        if self.family == "student_t":
            nu = self.dof
            x = -special.stdtrit(nu, tu)
            y = -special.stdtrit(nu, tv)
            s = np.sqrt((nu + x * x) * (1.0 - th * th) / (nu + 1.0))
            return special.stdtr(nu + 1.0, -(y - th * x) / s)
        # gumbel, in log space: h = exp(-A) (x/A)^(theta-1) / u
        x = -np.log1p(-tu)
        y = -np.log1p(-tv)
        hi = np.maximum(x, y)
        lo = np.minimum(x, y)
        A = hi * np.power(1.0 + np.power(lo / hi, th), 1.0 / th)
        log_h = -A + (th - 1.0) * (np.log(x) - np.log(A)) + x
        return -np.expm1(log_h)

    def conditional(self, v, u):
        """h(v | u) = P(V <= v | U = u)."""
        return 1.0 - self.conditional_tail(1.0 - np.asarray(u, dtype=float), 1.0 - np.asarray(v, dtype=float))

    def sample(self, stream):
        t1, t2 = kp.sample_copula_tails(self.code, self.theta, self.dof, stream)
        return 1.0 - t1, 1.0 - t2


@dataclass(frozen=True)
class JointShockLaw:
    """External joint jump (X1, X2): exponential marginals tied by a copula."""

    marg1: ExponentialLaw
    marg2: ExponentialLaw
    copula: CopulaSpec

    def kernel_params(self):
        return (self.marg1.rate, self.marg2.rate, float(self.copula.code), self.copula.theta, self.copula.dof)

    def _packed(self):
        P = [0.0] * kp.N_PARAMS
        P[21], P[22], P[23], P[24], P[25] = self.kernel_params()
        return P

    def sample(self, stream):
        return kp.sample_shock(self._packed(), stream)

    def sample_many(self, seed, n, path_index=0):
        return backend.sample_shocks_many(self._packed(), seed, n, path_index)


def sample_joint_shock(copula, marg1, marg2, stream):
    return JointShockLaw(marg1, marg2, copula).sample(stream)


# --------------------------------------------------------------------------
# cross moment and joint Laplace transform


@lru_cache(maxsize=8)
def _unit_rule(n):
    """Gauss-Legendre on (0,1) pushed towards 1 by u = 1 - (1 - s)^2.

    Returns the tail masses t = 1 - u = (1 - s)^2 and the matching weights.
    """
    s, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    tail = (1.0 - s) ** 2
    return tail, w * 2.0 * (1.0 - s)


@lru_cache(maxsize=64)
def _tensor_grid(copula, rate1, rate2, nodes):
    tail, weight = _unit_rule(nodes)
    q1 = -np.log(tail) / rate1
    q2 = -np.log(tail) / rate2
    dq2 = weight / (rate2 * tail)
    hbar = copula.conditional_tail(tail[:, None], tail[None, :])
    if not np.all(np.isfinite(hbar)):
        raise NumericFailure("conditional copula evaluation produced non-finite values")
    return weight, q1, q2, dq2, hbar


def _degenerate_cross_moment(sign, rate1, rate2):
    if sign > 0:
        return 2.0 / (rate1 * rate2)
    # integral of log(u) log(1 - u) over (0, 1)
    return (2.0 - math.pi ** 2 / 6.0) / (rate1 * rate2)


def cross_moment(copula, marg1, marg2, nodes=256, method="auto", mc_paths=10 ** 6, seed=0):
    """E[X1 X2] for the external joint jump.

    FGM has a closed form.  Other families use a tensor Gauss-Legendre rule on
    E[X1 X2] = int int q1(u) q2'(v) (1 - h(v|u)) du dv.  ``method="mc"`` gives
    a fixed-seed sampling estimate instead.
    """
    r1, r2 = marg1.rate, marg2.rate
    if method == "auto":
        method = "closed" if copula.family == "fgm" else "quadrature"
    if method == "closed":
        if copula.family != "fgm":
            raise DomainError("closed-form cross moment exists only for the FGM copula")
        return (1.0 + copula.theta / 4.0) / (r1 * r2)
    if method == "mc":
        draws = JointShockLaw(marg1, marg2, copula).sample_many(seed, mc_paths)
        return math.fsum(draws[:, 0] * draws[:, 1]) / mc_paths
    if method != "quadrature":
        raise ValueError(f"unknown cross-moment method {method!r}")
    deg = copula.is_degenerate()
    if deg:
        return _degenerate_cross_moment(deg, r1, r2)
    weight, q1, _, dq2, hbar = _tensor_grid(copula, r1, r2, nodes)
    value = float((weight * q1) @ (hbar @ dq2))
    if not math.isfinite(value):
        raise NumericFailure("cross-moment quadrature returned a non-finite value")
    return value


def cross_moment_mc(copula, marg1, marg2, paths=10 ** 6, seed=0):
    """Fixed-seed estimate and standard error of E[X1 X2]."""
    draws = JointShockLaw(marg1, marg2, copula).sample_many(seed, paths)
    prod = draws[:, 0] * draws[:, 1]
    return float(np.mean(prod)), float(np.std(prod, ddof=1) / math.sqrt(paths))


def joint_laplace(shock, eps, kappa, nodes=256, method="auto"):
    """E[exp(-eps X1 - kappa X2)] for the external joint jump."""
    if eps < 0 or kappa < 0:
        raise DomainError("joint Laplace arguments must be nonnegative")
    if eps == 0 and kappa == 0:
        return 1.0
    r1, r2 = shock.marg1.rate, shock.marg2.rate
    cop = shock.copula
    if method == "auto":
        method = "closed" if cop.family == "fgm" else "quadrature"
    if method == "closed":
        if cop.family != "fgm":
            raise DomainError("closed-form joint Laplace transform exists only for the FGM copula")
        # int e^{-eps x} (1 - 2F(x)) dF(x) for an exponential F
        e1 = -r1 / (r1 + eps) + 2.0 * r1 / (2.0 * r1 + eps)
        e2 = -r2 / (r2 + kappa) + 2.0 * r2 / (2.0 * r2 + kappa)
        return r1 / (r1 + eps) * r2 / (r2 + kappa) + cop.theta * e1 * e2
    if kappa == 0:
        return r1 / (r1 + eps)
    if eps == 0:
        return r2 / (r2 + kappa)
    deg = cop.is_degenerate()
    if deg:
        return _degenerate_joint_laplace(deg, r1, r2, eps, kappa)
    weight, q1, q2, dq2, hbar = _tensor_grid(cop, r1, r2, nodes)
    inner = hbar @ (dq2 * np.exp(-kappa * q2))
    return float(weight @ (np.exp(-eps * q1) * (1.0 - kappa * inner)))


def _degenerate_joint_laplace(sign, r1, r2, eps, kappa):
    if sign > 0:
        # E[u^{eps/r1 + kappa/r2}] with U uniform, since X_i = -log(1-U)/r_i
        return 1.0 / (1.0 + eps / r1 + kappa / r2)
    return float(special.beta(1.0 + eps / r1, 1.0 + kappa / r2))
