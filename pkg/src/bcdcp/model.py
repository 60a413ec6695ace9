"""Model parameters, validity checks and the deterministic decay between jumps."""

import math
from dataclasses import dataclass, field, replace

from . import _kernel_py as kp
from .distributions import (CopulaSpec, ExponentialLaw, JointShockLaw, Law, ZeroLaw,
                            cross_moment, joint_laplace)
from .errors import DomainError


@dataclass(frozen=True)
class LineParams:
    """One business line: level ``a``, decay rate ``delta``, start intensity ``lam0``,
    the law of its self-excited intensity jumps and the law of its loss severities."""

    a: float
    delta: float
    lam0: float
    self_jump: Law
    severity: Law

    def self_mean(self):
        return self.self_jump.mean()

    def net_decay(self):
        """delta minus the mean self-excited jump; positive in the stationary regime."""
        return self.delta - self.self_jump.mean()

    def is_stationary(self):
        return self.self_jump.has_mean() and self.net_decay() > 0


@dataclass(frozen=True)
class JointShockSpec:
    rho: float
    marg1: ExponentialLaw
    marg2: ExponentialLaw
    copula: CopulaSpec
    cross_nodes: int = 256
    cross_method: str = "auto"
    cross_mc_paths: int = 10 ** 6
    cross_seed: int = 0

    @property
    def law(self):
        return JointShockLaw(self.marg1, self.marg2, self.copula)

    def marginal(self, line):
        return self.marg1 if line == 1 else self.marg2

    def cross_moment(self):
        return cross_moment(self.copula, self.marg1, self.marg2, nodes=self.cross_nodes,
                            method=self.cross_method, mc_paths=self.cross_mc_paths, seed=self.cross_seed)

    def cross_method_tag(self):
        method = self.cross_method
        if method == "auto":
            method = "closed" if self.copula.family == "fgm" else "quadrature"
        return {"closed": "closed-form", "quadrature": "quadrature", "mc": "MC"}[method]

    def laplace(self, eps, kappa):
        return joint_laplace(self.law, eps, kappa, nodes=self.cross_nodes)


@dataclass(frozen=True)
class BcdcpModel:
    line1: LineParams
    line2: LineParams
    shocks: JointShockSpec

    def line(self, d):
        if d == 1:
            return self.line1
        if d == 2:
            return self.line2
        raise ValueError(f"line index must be 1 or 2, got {d}")

    @property
    def stationary1(self):
        return self.line1.is_stationary()

    @property
    def stationary2(self):
        return self.line2.is_stationary()

    def is_stationary(self):
        return self.stationary1 and self.stationary2

    def require_stationary(self, lines=(1, 2)):
        for d in lines:
            ln = self.line(d)
            if not ln.is_stationary():
                law = "G" if d == 1 else "H"
                mu = ln.self_jump.mean() if ln.self_jump.has_mean() else math.inf
                raise DomainError(
                    f"line {d} is not stationary: requires delta{d} > mean of {law} "
                    f"(got delta{d}={ln.delta}, mean={mu})")

    def shot_noise(self):
        """Same model with the self-excited intensity jumps switched off."""
        return replace(self, line1=replace(self.line1, self_jump=ZeroLaw()),
                       line2=replace(self.line2, self_jump=ZeroLaw()))

    def with_copula(self, copula):
        return replace(self, shocks=replace(self.shocks, copula=copula))

    def with_lam0(self, lam1, lam2):
        return replace(self, line1=replace(self.line1, lam0=lam1), line2=replace(self.line2, lam0=lam2))

    def relaxation_rates(self):
        return self.line1.net_decay(), self.line2.net_decay()

    def pack_parameters(self):
        """Flat float vector consumed by the simulation kernels."""
        P = [0.0] * kp.N_PARAMS
        P[0], P[1] = self.line1.a, self.line1.delta
        P[2], P[3] = self.line2.a, self.line2.delta
        P[4] = self.shocks.rho
        P[5:9] = self.line1.self_jump.kernel_params()
        P[9:13] = self.line2.self_jump.kernel_params()
        P[13:17] = self.line1.severity.kernel_params()
        P[17:21] = self.line2.severity.kernel_params()
        P[21:26] = self.shocks.law.kernel_params()
        return [float(p) for p in P]


def decay(line, lam_from, dt):
    """Intensity after ``dt`` time units without jumps."""
    if dt < 0:
        raise DomainError(f"elapsed time must be nonnegative, got {dt}")
    return line.a + (lam_from - line.a) * math.exp(-line.delta * dt)


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    def add(self, name, ok, detail=""):
        self.checks.append(Check(name, bool(ok), detail))

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.ok]

    def get(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def rows(self):
        return [(c.name, "ok" if c.ok else "FAIL", c.detail) for c in self.checks]


def validate(model, want_variance=True, want_losses=True):
    """Collect every side condition the enabled formulas rely on.

    Never raises and never mutates the model.
    """
    rep = ValidationReport()
    for d in (1, 2):
        ln = model.line(d)
        jump = "G" if d == 1 else "H"
        sev = "J" if d == 1 else "K"
        rep.add(f"line{d}.delta_positive", ln.delta > 0, f"delta{d}={ln.delta}")
        rep.add(f"line{d}.lam0_positive", ln.lam0 > 0, f"lam0_{d}={ln.lam0}")
        rep.add(f"line{d}.a_nonnegative", ln.a >= 0, f"a{d}={ln.a}")
        rep.add(f"line{d}.mean_{jump}_exists", ln.self_jump.has_mean(), repr(ln.self_jump))
        if ln.self_jump.has_mean():
            mu = ln.self_jump.mean()
            gap = ln.delta - mu
            detail = f"delta{d}={ln.delta}, mean {jump}={mu}"
            if gap == 0:
                detail += " (boundary case delta = mean)"
            rep.add(f"line{d}.stationary", gap > 0, detail)
        else:
            rep.add(f"line{d}.stationary", False, f"mean of {jump} does not exist")
        if want_variance:
            rep.add(f"line{d}.second_moment_{jump}_exists", ln.self_jump.has_second_moment(), repr(ln.self_jump))
        if want_losses:
            rep.add(f"line{d}.mean_{sev}_exists", ln.severity.has_mean(), repr(ln.severity))
            if want_variance:
                rep.add(f"line{d}.second_moment_{sev}_exists", ln.severity.has_second_moment(), repr(ln.severity))
    rep.add("shocks.rho_nonnegative", model.shocks.rho >= 0, f"rho={model.shocks.rho}")
    return rep
