# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; ``_kernels_py`` is the reference implementation."""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport INFINITY, floor, log1p, log2, sqrt
from numpy.random cimport bitgen_t

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef int[4] DEJMPS_PERM = [0, 3, 2, 1]


cdef struct Stage:
    double w[4]
    double mean
    double var


cdef inline void _purify(Stage *s, double hop, bint dejmps, double q) noexcept nogil:
    cdef double a0, a1, a2, a3, n0, n1, n2, n3, d, r, step, step_var
    if dejmps:
        a0 = s.w[0]; a1 = s.w[3]; a2 = s.w[2]; a3 = s.w[1]
    else:
        r = (1.0 - s.w[0]) / 3.0
        a0 = s.w[0]; a1 = r; a2 = r; a3 = r
    n0 = a0 * a0 + a1 * a1
    n1 = 2.0 * a0 * a1
    n2 = a2 * a2 + a3 * a3
    n3 = 2.0 * a2 * a3
    d = (a0 + a1) * (a0 + a1) + (a2 + a3) * (a2 + a3)
    s.w[0] = n0 / d; s.w[1] = n1 / d; s.w[2] = n2 / d; s.w[3] = n3 / d
    if not dejmps:
        r = (1.0 - s.w[0]) / 3.0
        s.w[1] = r; s.w[2] = r; s.w[3] = r
    s.w[0] = (1.0 - q) * s.w[0] + 0.25 * q
    s.w[1] = (1.0 - q) * s.w[1] + 0.25 * q
    s.w[2] = (1.0 - q) * s.w[2] + 0.25 * q
    s.w[3] = (1.0 - q) * s.w[3] + 0.25 * q
    step = s.mean + 0.5 * sqrt(s.var) + hop
    step_var = 1.25 * s.var
    s.mean = step / d
    s.var = step_var / d + (1.0 - d) / (d * d) * step * step


cdef inline void _swap(Stage *s, double hop, double q) noexcept nogil:
    cdef double w0 = s.w[0], w1 = s.w[1], w2 = s.w[2], w3 = s.w[3]
    cdef double s0, s1, s2, s3
    s0 = w0 * w0 + w1 * w1 + w2 * w2 + w3 * w3
    s1 = 2.0 * (w0 * w1 + w2 * w3)
    s2 = 2.0 * (w0 * w2 + w1 * w3)
    s3 = 2.0 * (w0 * w3 + w1 * w2)
    s.w[0] = (1.0 - q) * s0 + 0.25 * q
    s.w[1] = (1.0 - q) * s1 + 0.25 * q
    s.w[2] = (1.0 - q) * s2 + 0.25 * q
    s.w[3] = (1.0 - q) * s3 + 0.25 * q
    s.mean = s.mean + 0.5 * sqrt(s.var) + hop
    s.var = 1.25 * s.var


cdef inline double _h(double p) noexcept nogil:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * log2(p) - (1.0 - p) * log2(1.0 - p)


cdef inline double _key_fraction(Stage *s) noexcept nogil:
    cdef double e_z = s.w[2] + s.w[3]
    cdef double e_x = s.w[1] + s.w[3]
    cdef double f
    if e_z >= 0.5 or e_x >= 0.5:
        return 0.0
    f = 1.0 - _h(e_z) - _h(e_x)
    return f if f > 0.0 else 0.0


cdef inline void _init(Stage *s, link_weights, double p):
    cdef int i
    for i in range(4):
        s.w[i] = link_weights[i]
    s.mean = 1.0 / p
    s.var = (1.0 - p) / (p * p)


def g1_chain(link_weights, rounds, bint dejmps, double gate_error, double p_link):
    cdef Stage s
    cdef Py_ssize_t n = len(rounds) - 1, k
    cdef long j, m
    cdef double hop
    _init(&s, link_weights, p_link)
    for k in range(n + 1):
        hop = <double>(1 << k)
        m = rounds[k]
        for j in range(m):
            _purify(&s, hop, dejmps, gate_error)
        if k < n:
            _swap(&s, hop, gate_error)
    return np.array([s.w[0], s.w[1], s.w[2], s.w[3]]), s.mean, s.var


cdef struct Sweep:
    long *choices
    int nchoices
    int nesting
    bint dejmps
    double q
    double unit_s
    double mux
    double links
    double total_km
    double *out
    Py_ssize_t idx


cdef void _rec(Sweep *sw, int level, Stage s, long total) noexcept nogil:
    cdef double hop = <double>(1 << level)
    cdef long done = 0, r
    cdef int c
    cdef Stage s2
    cdef double sf, rate, qubits
    for c in range(sw.nchoices):
        r = sw.choices[c]
        while done < r:
            _purify(&s, hop, sw.dejmps, sw.q)
            done += 1
        if level < sw.nesting:
            s2 = s
            _swap(&s2, hop, sw.q)
            _rec(sw, level + 1, s2, total + r)
        else:
            sf = _key_fraction(&s)
            if sf > 0.0:
                rate = sf / (s.mean * sw.unit_s)
                qubits = 2.0 * sw.mux * (2.0 ** <double>(total + r)) * sw.links
                sw.out[sw.idx] = qubits / (rate * sw.total_km)
            else:
                sw.out[sw.idx] = INFINITY
            sw.idx += 1


def g1_schedule_costs(link_weights, choices, int nesting, bint dejmps, double gate_error,
                      double p_link, double unit_s, double mux, double total_km):
    cdef cnp.ndarray[long, ndim=1] carr = np.ascontiguousarray(choices, dtype=np.int64)
    cdef Py_ssize_t size = carr.shape[0] ** (nesting + 1)
    out = np.empty(size)
    cdef double[::1] ov = out
    cdef Sweep sw
    cdef Stage s
    _init(&s, link_weights, p_link)
    sw.choices = <long *> carr.data
    sw.nchoices = <int> carr.shape[0]
    sw.nesting = nesting
    sw.dejmps = dejmps
    sw.q = gate_error
    sw.unit_s = unit_s
    sw.mux = mux
    sw.links = <double>(1 << nesting)
    sw.total_km = total_km
    sw.out = &ov[0]
    sw.idx = 0
    with nogil:
        _rec(&sw, 0, s, 0)
    return out


cdef struct Chain:
    bitgen_t *rng
    double log_fail
    bint certain
    double cum[3]
    long *rounds
    bint dejmps
    double q


cdef inline double _next(Chain *c) noexcept nogil:
    return c.rng.next_double(c.rng.state)


cdef inline int _noise(Chain *c, int label) noexcept nogil:
    if c.q > 0.0 and _next(c) < c.q:
        label = <int>(_next(c) * 4.0)
    return label


cdef inline int _twirl(Chain *c, int label) noexcept nogil:
    if label != 0:
        label = 1 + <int>(_next(c) * 3.0)
    return label


cdef double _produce(Chain *c, int level, long rnd, int *label) noexcept nogil:
    cdef double v, attempts, ta, tb, total, hop
    cdef int la = 0, lb = 0, out
    if rnd == 0:
        if level == 0:
            v = _next(c)
            if c.certain:
                attempts = 1.0
            else:
                attempts = floor(log1p(-v) / c.log_fail) + 1.0
            v = _next(c)
            out = 0
            while out < 3 and v >= c.cum[out]:
                out += 1
            label[0] = out
            return attempts
        ta = _produce(c, level - 1, c.rounds[level - 1], &la)
        tb = _produce(c, level - 1, c.rounds[level - 1], &lb)
        label[0] = _noise(c, la ^ lb)
        return (ta if ta > tb else tb) + <double>(1 << (level - 1))
    hop = <double>(1 << level)
    total = 0.0
    while True:
        ta = _produce(c, level, rnd - 1, &la)
        tb = _produce(c, level, rnd - 1, &lb)
        total += (ta if ta > tb else tb) + hop
        if c.dejmps:
            la = DEJMPS_PERM[la]
            lb = DEJMPS_PERM[lb]
        else:
            la = _twirl(c, la)
            lb = _twirl(c, lb)
        if (la >> 1) == (lb >> 1):
            out = (la & 2) | ((la ^ lb) & 1)
            if not c.dejmps:
                out = _twirl(c, out)
            label[0] = _noise(c, out)
            return total


def mc_chain(rng, Py_ssize_t trials, double p_link, link_weights, rounds,
             bint dejmps, double gate_error):
    cdef Chain c
    cdef Py_ssize_t i, n
    cdef int lab = 0
    cdef double acc = 0.0
    bit_generator = rng.bit_generator
    capsule = bit_generator.capsule
    c.rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    c.certain = p_link >= 1.0
    c.log_fail = 0.0 if c.certain else log1p(-p_link)
    for i in range(3):
        acc += link_weights[i]
        c.cum[i] = acc
    cdef cnp.ndarray[long, ndim=1] rarr = np.ascontiguousarray(rounds, dtype=np.int64)
    c.rounds = <long *> rarr.data
    c.dejmps = dejmps
    c.q = gate_error
    n = rarr.shape[0] - 1
    times = np.empty(trials)
    labels = np.empty(trials, dtype=np.int64)
    cdef double[::1] tv = times
    cdef long[::1] lv = labels
    with bit_generator.lock, nogil:
        for i in range(trials):
            tv[i] = _produce(&c, <int>n, c.rounds[n], &lab)
            lv[i] = lab
    return times, labels
