# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernel.

Mirrors ``_kernel_py`` operation for operation (same uniform consumption,
same floating-point expression order), so the two backends agree bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, expm1, sqrt, pow, sin, floor, INFINITY, M_PI
from libc.stdint cimport uint64_t
from scipy.special.cython_special cimport ndtri, ndtr, stdtr

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t PATH_STRIDE = 0xD1B54A32D192ED03ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef struct Stream:
    uint64_t key
    uint64_t counter


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t path) noexcept nogil:
    cdef uint64_t base = mix64(seed + GOLDEN)
    return mix64(base + path * PATH_STRIDE)


cdef inline double uniform(Stream* s) noexcept nogil:
    s.counter += 1
    return (<double>(mix64(s.key + s.counter * GOLDEN) >> 11) + 0.5) * INV_2_53


cdef inline double std_exponential(Stream* s) noexcept nogil:
    return -log(uniform(s))


cdef inline double std_normal(Stream* s) noexcept nogil:
    return ndtri(uniform(s))


cdef double std_gamma(double shape, Stream* s) noexcept nogil:
    cdef double prod, g, d, c, x, v, u
    cdef int i
    if shape == floor(shape) and shape <= 16.0:
        prod = 1.0
        for i in range(<int>shape):
            prod *= uniform(s)
        return -log(prod)
    if shape < 1.0:
        g = std_gamma(shape + 1.0, s)
        return g * pow(uniform(s), 1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = std_normal(s)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = uniform(s)
        if log(u) < 0.5 * x * x + d - d * v + d * log(v):
            return d * v


cdef inline double uniform_product(int count, Stream* s) noexcept nogil:
    cdef double prod = 1.0
    cdef int i
    for i in range(count):
        prod *= uniform(s)
    return prod


cdef double sample_law(const double* L, Stream* s) noexcept nogil:
    cdef int code = <int>L[0]
    cdef double w, num, den
    if code == 0:
        return 0.0
    if code == 1:
        return -log(uniform(s)) * (1.0 / L[1])
    if code == 2:
        if L[3] == floor(L[3]) and L[3] <= 16.0:
            # e^{Gamma/rate} = prod^{-1/rate}: one pow instead of log and exp
            return L[1] * (pow(uniform_product(<int>L[3], s), -1.0 / L[2]) - 1.0)
        w = std_gamma(L[3], s) * (1.0 / L[2])
        return L[1] * (exp(w) - 1.0)
    if code == 3:
        return L[1] * pow(-log(uniform(s)), -1.0 / L[2])
    num = std_gamma(L[3], s)
    den = std_gamma(L[1], s)
    return L[2] * num / den


cdef void sample_shock(const double* P, Stream* s, double* x1, double* x2) noexcept nogil:
    cdef int code = <int>P[23]
    cdef double theta = P[24]
    cdef double dof = P[25]
    cdef double c1, c2, u, w, b, v, z1, z2, y, chi2, scale, e1, e2, alpha, ang, e, log_v
    if code == 0:
        u = uniform(s)
        w = uniform(s)
        b = theta * (1.0 - 2.0 * u)
        v = 2.0 * w / ((1.0 + b) + sqrt((1.0 + b) * (1.0 + b) - 4.0 * b * w))
        c1 = 1.0 - u
        c2 = 1.0 - v
    elif code == 1:
        z1 = std_normal(s)
        z2 = std_normal(s)
        y = theta * z1 + sqrt(1.0 - theta * theta) * z2
        c1 = ndtr(-z1)
        c2 = ndtr(-y)
    elif code == 2:
        z1 = std_normal(s)
        z2 = std_normal(s)
        chi2 = 2.0 * std_gamma(0.5 * dof, s)
        scale = sqrt(dof / chi2)
        c1 = stdtr(dof, -(z1 * scale))
        c2 = stdtr(dof, -((theta * z1 + sqrt(1.0 - theta * theta) * z2) * scale))
    else:
        e1 = std_exponential(s)
        e2 = std_exponential(s)
        if theta == 1.0:
            log_v = 0.0
        else:
            alpha = 1.0 / theta
            ang = M_PI * uniform(s)
            e = std_exponential(s)
            log_v = (log(sin(alpha * ang)) - log(sin(ang)) / alpha
                     + (1.0 - alpha) / alpha * (log(sin((1.0 - alpha) * ang)) - log(e)))
        c1 = -expm1(-exp((log(e1) - log_v) / theta))
        c2 = -expm1(-exp((log(e2) - log_v) / theta))
    x1[0] = -log(c1) / P[21]
    x2[0] = -log(c2) / P[22]


cdef inline double self_wait(double lam, double a, double delta, Stream* s, double* pre) noexcept nogil:
    cdef double u = uniform(s)
    cdef double excess = lam - a
    cdef double d, w, w2
    if excess > 0.0:
        d = 1.0 + delta * log(u) / excess
        if d > 0.0:
            w = -log(d) * (1.0 / delta)
            pre[0] = a + excess * d
        else:
            w = INFINITY
            pre[0] = a
    else:
        w = INFINITY
        pre[0] = a
    if a > 0.0:
        w2 = -log(uniform(s)) / a
        if w2 < w:
            w = w2
            pre[0] = a + excess * exp(-delta * w2)
    return w


cdef inline double shock_wait(double rho, Stream* s) noexcept nogil:
    if rho > 0.0:
        return -log(uniform(s)) / rho
    return INFINITY


cdef inline double decay(double lam, double a, double delta, double dt) noexcept nogil:
    return a + (lam - a) * exp(-delta * dt)


cdef struct State:
    double t
    double lam1
    double ref1
    double lam2
    double ref2
    double c1
    double c2
    double ce
    double n1
    double n2
    double l1
    double l2
    double pre1
    double pre2
    bint on1
    bint on2


cdef inline int step(State* S, const double* P, Stream* s, double until, bint with_losses) noexcept nogil:
    """Returns 0 for an external event, 1 or 2 for self events, -1 when past ``until``."""
    cdef double te, x1, x2, lam1, lam2, y, xi
    if S.ce <= S.c1 and S.ce <= S.c2:
        te = S.ce
        if te > until:
            return -1
        sample_shock(P, s, &x1, &x2)
        S.t = te
        if S.on1:
            lam1 = decay(S.lam1, P[0], P[1], te - S.ref1) + x1
            S.lam1 = lam1
            S.ref1 = te
            S.c1 = te + self_wait(lam1, P[0], P[1], s, &S.pre1)
        if S.on2:
            lam2 = decay(S.lam2, P[2], P[3], te - S.ref2) + x2
            S.lam2 = lam2
            S.ref2 = te
            S.c2 = te + self_wait(lam2, P[2], P[3], s, &S.pre2)
        S.ce = te + shock_wait(P[4], s)
        return 0
    if S.c1 <= S.c2:
        te = S.c1
        if te > until:
            return -1
        y = sample_law(&P[5], s)
        xi = sample_law(&P[13], s) if with_losses else 0.0
        lam1 = S.pre1 + y
        S.t = te
        S.lam1 = lam1
        S.ref1 = te
        S.n1 += 1.0
        S.l1 += xi
        S.c1 = te + self_wait(lam1, P[0], P[1], s, &S.pre1)
        return 1
    te = S.c2
    if te > until:
        return -1
    y = sample_law(&P[9], s)
    xi = sample_law(&P[17], s) if with_losses else 0.0
    lam2 = S.pre2 + y
    S.t = te
    S.lam2 = lam2
    S.ref2 = te
    S.n2 += 1.0
    S.l2 += xi
    S.c2 = te + self_wait(lam2, P[2], P[3], s, &S.pre2)
    return 2


cdef inline void switch_on(State* S, const double* P, int line, double lam, double time, Stream* s) noexcept nogil:
    if line == 1:
        S.lam1 = lam
        S.ref1 = time
        S.c1 = time + self_wait(lam, P[0], P[1], s, &S.pre1)
        S.on1 = True
    else:
        S.lam2 = lam
        S.ref2 = time
        S.c2 = time + self_wait(lam, P[2], P[3], s, &S.pre2)
        S.on2 = True


cdef void run_terminal(const double* P, double lam1, double lam2, Stream* s,
                       double burn1, double burn2, double horizon, double* out) noexcept nogil:
    cdef State S
    cdef double total = burn1 if burn1 > burn2 else burn2
    cdef double start1 = total - burn1
    cdef double start2 = total - burn2
    cdef double end = total + horizon
    S.t = 0.0
    S.lam1 = lam1
    S.ref1 = 0.0
    S.lam2 = lam2
    S.ref2 = 0.0
    S.c1 = INFINITY
    S.c2 = INFINITY
    S.pre1 = lam1
    S.pre2 = lam2
    S.on1 = start1 <= 0.0
    S.on2 = start2 <= 0.0
    if S.on1:
        S.c1 = self_wait(lam1, P[0], P[1], s, &S.pre1)
    if S.on2:
        S.c2 = self_wait(lam2, P[2], P[3], s, &S.pre2)
    S.ce = shock_wait(P[4], s)
    S.n1 = 0.0
    S.n2 = 0.0
    S.l1 = 0.0
    S.l2 = 0.0
    if not S.on1:
        while step(&S, P, s, start1, False) >= 0:
            pass
        switch_on(&S, P, 1, lam1, start1, s)
    if not S.on2:
        while step(&S, P, s, start2, False) >= 0:
            pass
        switch_on(&S, P, 2, lam2, start2, s)
    if total > 0.0:
        while step(&S, P, s, total, False) >= 0:
            pass
    S.n1 = 0.0
    S.n2 = 0.0
    S.l1 = 0.0
    S.l2 = 0.0
    while step(&S, P, s, end, True) >= 0:
        pass
    out[0] = decay(S.lam1, P[0], P[1], end - S.ref1)
    out[1] = decay(S.lam2, P[2], P[3], end - S.ref2)
    out[2] = S.n1
    out[3] = S.n2
    out[4] = S.l1
    out[5] = S.l2


def simulate_terminal(P, double lam1, double lam2, seed, Py_ssize_t first_path,
                      Py_ssize_t n_paths, double burn1, double burn2, double horizon):
    """Terminal states (lam1, lam2, N1, N2, L1, L2) for a contiguous block of paths."""
    cdef double[::1] params = np.ascontiguousarray(P, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n_paths, 6), dtype=np.float64)
    cdef double[:, ::1] view = out
    cdef uint64_t seed64 = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Stream s
    cdef Py_ssize_t i
    with nogil:
        for i in range(n_paths):
            s.key = stream_key(seed64, <uint64_t>(first_path + i))
            s.counter = 0
            run_terminal(&params[0], lam1, lam2, &s, burn1, burn2, horizon, &view[i, 0])
    return out


def sample_law_many(law, seed, Py_ssize_t n, path_index=0):
    cdef double[::1] L = np.ascontiguousarray(law, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] view = out
    cdef Stream s
    cdef Py_ssize_t i
    s.key = stream_key(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF), <uint64_t>path_index)
    s.counter = 0
    with nogil:
        for i in range(n):
            view[i] = sample_law(&L[0], &s)
    return out


def sample_shocks_many(P, seed, Py_ssize_t n, path_index=0):
    cdef double[::1] params = np.ascontiguousarray(P, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] view = out
    cdef Stream s
    cdef Py_ssize_t i
    s.key = stream_key(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF), <uint64_t>path_index)
    s.counter = 0
    with nogil:
        for i in range(n):
            sample_shock(&params[0], &s, &view[i, 0], &view[i, 1])
    return out
