"""Pure-Python simulation kernel.

This module fixes the exact order in which uniforms are consumed.  The compiled
kernel in ``_kernel.pyx`` repeats the same floating-point operations in the
same order, so both produce identical numbers for the same stream.

Parameter vector layout (see ``model.pack_parameters``)::

    0 a1   1 delta1   2 a2   3 delta2   4 rho
    5..8 self-jump law line 1    9..12 self-jump law line 2
    13..16 severity law line 1   17..20 severity law line 2
    21 shock rate line 1   22 shock rate line 2
    23 copula code   24 copula theta   25 t-copula degrees of freedom

A law occupies four slots: ``(code, p1, p2, p3)``.
"""

import math

from scipy.special import ndtr, ndtri, stdtr

from .rng import Stream

LAW_ZERO, LAW_EXPONENTIAL, LAW_LOGGAMMA, LAW_FRECHET, LAW_PARETO = 0, 1, 2, 3, 4
COP_FGM, COP_GAUSSIAN, COP_STUDENT_T, COP_GUMBEL = 0, 1, 2, 3

KIND_EXTERNAL, KIND_SELF1, KIND_SELF2 = 0, 1, 2
N_PARAMS = 26
INF = math.inf

# state slots
T, LAM1, REF1, LAM2, REF2, CLK1, CLK2, CLKE, N1, N2, L1, L2, PRE1, PRE2, ON1, ON2 = range(16)


def std_exponential(stream):
    return -math.log(stream.uniform())


def std_normal(stream):
    return float(ndtri(stream.uniform()))


def std_gamma(shape, stream):
    """Unit-scale gamma draw.

    Small integer shapes use a product of uniforms; everything else goes
    through Marsaglia-Tsang with the usual boost for shape < 1.
    """
    if shape == math.floor(shape) and shape <= 16.0:
        prod = 1.0
        for _ in range(int(shape)):
            prod *= stream.uniform()
        return -math.log(prod)
    if shape < 1.0:
        g = std_gamma(shape + 1.0, stream)
        return g * stream.uniform() ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = std_normal(stream)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = stream.uniform()
        if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
            return d * v


def sample_law(code, p1, p2, p3, stream):
    if code == LAW_ZERO:
        return 0.0
    if code == LAW_EXPONENTIAL:
        return -math.log(stream.uniform()) * (1.0 / p1)
    if code == LAW_LOGGAMMA:
        if p3 == math.floor(p3) and p3 <= 16.0:
            # e^{Gamma/rate} = prod^{-1/rate}: one pow instead of log and exp
            prod = 1.0
            for _ in range(int(p3)):
                prod *= stream.uniform()
            return p1 * (prod ** (-1.0 / p2) - 1.0)
        w = std_gamma(p3, stream) * (1.0 / p2)
        return p1 * (math.exp(w) - 1.0)
    if code == LAW_FRECHET:
        return p1 * (-math.log(stream.uniform())) ** (-1.0 / p2)
    if code == LAW_PARETO:
        num = std_gamma(p3, stream)
        den = std_gamma(p1, stream)
        return p2 * num / den
    raise ValueError(f"unknown law code {code}")


def sample_copula_tails(code, theta, dof, stream):
    """Draw (U1, U2) from the copula and return (1 - U1, 1 - U2).

    Upper-tail complements keep full precision for the exponential quantile
    x = -log(1 - u) / rate.
    """
    if code == COP_FGM:
        u = stream.uniform()
        w = stream.uniform()
        b = theta * (1.0 - 2.0 * u)
        v = 2.0 * w / ((1.0 + b) + math.sqrt((1.0 + b) * (1.0 + b) - 4.0 * b * w))
        return 1.0 - u, 1.0 - v
    if code == COP_GAUSSIAN:
        z1 = std_normal(stream)
        z2 = std_normal(stream)
        y = theta * z1 + math.sqrt(1.0 - theta * theta) * z2
        return float(ndtr(-z1)), float(ndtr(-y))
    if code == COP_STUDENT_T:
        z1 = std_normal(stream)
        z2 = std_normal(stream)
        chi2 = 2.0 * std_gamma(0.5 * dof, stream)
        scale = math.sqrt(dof / chi2)
        t1 = z1 * scale
        t2 = (theta * z1 + math.sqrt(1.0 - theta * theta) * z2) * scale
        return float(stdtr(dof, -t1)), float(stdtr(dof, -t2))
    if code == COP_GUMBEL:
        # Marshall-Olkin: U_i = exp(-(E_i / V)^(1/theta)) with V positive stable
        e1 = std_exponential(stream)
        e2 = std_exponential(stream)
        if theta == 1.0:
            log_v = 0.0
        else:
            alpha = 1.0 / theta
            ang = math.pi * stream.uniform()
            e = std_exponential(stream)
            log_v = (math.log(math.sin(alpha * ang)) - math.log(math.sin(ang)) / alpha
                     + (1.0 - alpha) / alpha * (math.log(math.sin((1.0 - alpha) * ang)) - math.log(e)))
        s1 = math.exp((math.log(e1) - log_v) / theta)
        s2 = math.exp((math.log(e2) - log_v) / theta)
        return -math.expm1(-s1), -math.expm1(-s2)
    raise ValueError(f"unknown copula code {code}")


def sample_shock(P, stream):
    """External joint jump sizes (x1, x2) with exponential marginals."""
    c1, c2 = sample_copula_tails(int(P[23]), P[24], P[25], stream)
    return -math.log(c1) / P[21], -math.log(c2) / P[22]


def self_wait(lam, a, delta, stream):
    """Waiting time to the next self-excited event of one line.

    Inverse transform of the decaying intensity a + (lam - a)e^{-delta s}:
    the decaying part fires after -log(d)/delta when d > 0 and never
    otherwise; the constant level a adds an independent Exp(a) clock.
    Also returns the intensity just before that event, since the decay
    factor over the wait is d itself when the decaying part fires.
    """
    u = stream.uniform()
    excess = lam - a
    if excess > 0.0:
        d = 1.0 + delta * math.log(u) / excess
        if d > 0.0:
            s = -math.log(d) * (1.0 / delta)
            pre = a + excess * d
        else:
            s = INF
            pre = a
    else:
        s = INF
        pre = a
    if a > 0.0:
        s2 = -math.log(stream.uniform()) / a
        if s2 < s:
            s = s2
            pre = a + excess * math.exp(-delta * s2)
    return s, pre


def shock_wait(rho, stream):
    if rho > 0.0:
        return -math.log(stream.uniform()) / rho
    return INF


def decay(lam, a, delta, dt):
    return a + (lam - a) * math.exp(-delta * dt)


def new_state(P, lam1, lam2, stream, on1=True, on2=True):
    """Fresh state at time 0.

    Slots are named by the module constants: intensity ``LAM_d`` is the value
    at time ``REF_d``; ``CLK*`` are absolute times of the pending events;
    ``PRE_d`` is line d's intensity just before its pending self event.  A
    line that is switched off neither fires nor reacts to shocks.
    """
    S = [0.0, lam1, 0.0, lam2, 0.0, INF, INF, INF, 0, 0, 0.0, 0.0, lam1, lam2, on1, on2]
    if on1:
        S[CLK1], S[PRE1] = self_wait(lam1, P[0], P[1], stream)
    if on2:
        S[CLK2], S[PRE2] = self_wait(lam2, P[2], P[3], stream)
    S[CLKE] = shock_wait(P[4], stream)
    return S


def switch_on(S, P, line, lam, time, stream):
    if line == 1:
        S[LAM1] = lam
        S[REF1] = time
        w, S[PRE1] = self_wait(lam, P[0], P[1], stream)
        S[CLK1] = time + w
        S[ON1] = True
    else:
        S[LAM2] = lam
        S[REF2] = time
        w, S[PRE2] = self_wait(lam, P[2], P[3], stream)
        S[CLK2] = time + w
        S[ON2] = True


def step(S, P, stream, until, with_losses=True):
    """Advance to the next event if it happens no later than ``until``.

    Mutates ``S`` in place.  Returns ``(kind, m1, m2, severity)`` or ``None``
    when the next event lies beyond ``until`` (or the process is extinct).
    Clocks of lines whose intensity did not jump stay valid and are kept.
    """
    c1 = S[CLK1]
    c2 = S[CLK2]
    ce = S[CLKE]
    if ce <= c1 and ce <= c2:
        te = ce
        if te > until:
            return None
        x1, x2 = sample_shock(P, stream)
        S[T] = te
        if S[ON1]:
            lam1 = decay(S[LAM1], P[0], P[1], te - S[REF1]) + x1
            S[LAM1] = lam1
            S[REF1] = te
            w1, S[PRE1] = self_wait(lam1, P[0], P[1], stream)
            S[CLK1] = te + w1
        if S[ON2]:
            lam2 = decay(S[LAM2], P[2], P[3], te - S[REF2]) + x2
            S[LAM2] = lam2
            S[REF2] = te
            w2, S[PRE2] = self_wait(lam2, P[2], P[3], stream)
            S[CLK2] = te + w2
        S[CLKE] = te + shock_wait(P[4], stream)
        return (KIND_EXTERNAL, x1, x2, 0.0)
    if c1 <= c2:
        te = c1
        if te > until:
            return None
        y = sample_law(int(P[5]), P[6], P[7], P[8], stream)
        xi = sample_law(int(P[13]), P[14], P[15], P[16], stream) if with_losses else 0.0
        lam1 = S[PRE1] + y
        S[T] = te
        S[LAM1] = lam1
        S[REF1] = te
        S[N1] += 1
        S[L1] += xi
        w1, S[PRE1] = self_wait(lam1, P[0], P[1], stream)
        S[CLK1] = te + w1
        return (KIND_SELF1, y, 0.0, xi)
    te = c2
    if te > until:
        return None
    z = sample_law(int(P[9]), P[10], P[11], P[12], stream)
    xi = sample_law(int(P[17]), P[18], P[19], P[20], stream) if with_losses else 0.0
    lam2 = S[PRE2] + z
    S[T] = te
    S[LAM2] = lam2
    S[REF2] = te
    S[N2] += 1
    S[L2] += xi
    w2, S[PRE2] = self_wait(lam2, P[2], P[3], stream)
    S[CLK2] = te + w2
    return (KIND_SELF2, 0.0, z, xi)


def intensity_at(S, P, line, time):
    if line == 1:
        return decay(S[LAM1], P[0], P[1], time - S[REF1])
    return decay(S[LAM2], P[2], P[3], time - S[REF2])


def burn_in_phase(P, lam1, lam2, stream, burn1, burn2):
    """Run the warm-up without losses and return the state at its end.

    Each line gets its own warm-up length; the shorter one is switched on
    late so both end together at ``max(burn1, burn2)``.
    """
    total = burn1 if burn1 > burn2 else burn2
    start1 = total - burn1
    start2 = total - burn2
    S = new_state(P, lam1, lam2, stream, start1 <= 0.0, start2 <= 0.0)
    if not S[ON1]:
        while step(S, P, stream, start1, False) is not None:
            pass
        switch_on(S, P, 1, lam1, start1, stream)
    if not S[ON2]:
        while step(S, P, stream, start2, False) is not None:
            pass
        switch_on(S, P, 2, lam2, start2, stream)
    if total > 0.0:
        while step(S, P, stream, total, False) is not None:
            pass
    S[N1] = 0
    S[N2] = 0
    S[L1] = 0.0
    S[L2] = 0.0
    return S, total


def run_terminal(P, lam1, lam2, stream, burn1, burn2, horizon):
    """One path; returns (lam1, lam2, N1, N2, L1, L2) at the end of the window."""
    S, start = burn_in_phase(P, lam1, lam2, stream, burn1, burn2)
    end = start + horizon
    while step(S, P, stream, end, True) is not None:
        pass
    return (intensity_at(S, P, 1, end), intensity_at(S, P, 2, end),
            float(S[N1]), float(S[N2]), S[L1], S[L2])


def simulate_terminal(P, lam1, lam2, seed, first_path, n_paths, burn1, burn2, horizon):
    """Terminal states for paths ``first_path .. first_path + n_paths - 1``."""
    P = [float(p) for p in P]
    out = []
    for i in range(n_paths):
        stream = Stream(seed, first_path + i)
        out.append(run_terminal(P, lam1, lam2, stream, burn1, burn2, horizon))
    return out


def sample_law_many(law, seed, n, path_index=0):
    stream = Stream(seed, path_index)
    code, p1, p2, p3 = int(law[0]), float(law[1]), float(law[2]), float(law[3])
    return [sample_law(code, p1, p2, p3, stream) for _ in range(n)]


def sample_shocks_many(P, seed, n, path_index=0):
    stream = Stream(seed, path_index)
    P = [float(p) for p in P]
    return [sample_shock(P, stream) for _ in range(n)]
