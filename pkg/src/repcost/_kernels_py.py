"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Both implementations perform the same floating-point operations in the same
order, and the samplers consume uniforms from the same numpy bit generator in
the same order, so the two backends return identical numbers.

Times are in units of the elementary-link signalling time L0/c; a level-k
hop costs ``2**k`` units.  Waiting times are tracked by mean and variance and
treated as shifted exponentials when two inputs are awaited in parallel:
E[max] = mean + sd/2 and Var[max] = 5/4 var, which is the usual 3/2 rule for
a pure exponential.
"""

import math

import numpy as np

_DEJMPS_PERM = (0, 3, 2, 1)


def _purify(w, mean, var, hop, dejmps, q):
    w0, w1, w2, w3 = w
    if dejmps:
        a0, a1, a2, a3 = w0, w3, w2, w1
    else:
        r = (1.0 - w0) / 3.0
        a0, a1, a2, a3 = w0, r, r, r
    n0 = a0 * a0 + a1 * a1
    n1 = 2.0 * a0 * a1
    n2 = a2 * a2 + a3 * a3
    n3 = 2.0 * a2 * a3
    d = (a0 + a1) * (a0 + a1) + (a2 + a3) * (a2 + a3)
    w0, w1, w2, w3 = n0 / d, n1 / d, n2 / d, n3 / d
    if not dejmps:
        r = (1.0 - w0) / 3.0
        w1 = w2 = w3 = r
    w0 = (1.0 - q) * w0 + 0.25 * q
    w1 = (1.0 - q) * w1 + 0.25 * q
    w2 = (1.0 - q) * w2 + 0.25 * q
    w3 = (1.0 - q) * w3 + 0.25 * q
    # failed rounds restart both inputs: geometric number of attempts
    step = mean + 0.5 * math.sqrt(var) + hop
    step_var = 1.25 * var
    mean = step / d
    var = step_var / d + (1.0 - d) / (d * d) * step * step
    return (w0, w1, w2, w3), mean, var


def _swap(w, mean, var, hop, q):
    w0, w1, w2, w3 = w
    # XOR convolution of identical label distributions
    s0 = w0 * w0 + w1 * w1 + w2 * w2 + w3 * w3
    s1 = 2.0 * (w0 * w1 + w2 * w3)
    s2 = 2.0 * (w0 * w2 + w1 * w3)
    s3 = 2.0 * (w0 * w3 + w1 * w2)
    w0 = (1.0 - q) * s0 + 0.25 * q
    w1 = (1.0 - q) * s1 + 0.25 * q
    w2 = (1.0 - q) * s2 + 0.25 * q
    w3 = (1.0 - q) * s3 + 0.25 * q
    mean = mean + 0.5 * math.sqrt(var) + hop
    var = 1.25 * var
    return (w0, w1, w2, w3), mean, var


def _h(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _key_fraction(w):
    e_z = w[2] + w[3]
    e_x = w[1] + w[3]
    if e_z >= 0.5 or e_x >= 0.5:
        return 0.0
    return max(0.0, 1.0 - _h(e_z) - _h(e_x))


def g1_chain(link_weights, rounds, dejmps, gate_error, p_link):
    """Analytic first-generation chain recursion.

    Returns ``(weights, mean_time_units, var_time_units)``.
    """
    w = tuple(float(x) for x in link_weights)
    q = float(gate_error)
    p = float(p_link)
    mean = 1.0 / p
    var = (1.0 - p) / (p * p)
    n = len(rounds) - 1
    for k in range(n + 1):
        hop = float(2**k)
        for _ in range(int(rounds[k])):
            w, mean, var = _purify(w, mean, var, hop, dejmps, q)
        if k < n:
            w, mean, var = _swap(w, mean, var, hop, q)
    return np.array(w), mean, var


def g1_schedule_costs(link_weights, choices, nesting, dejmps, gate_error, p_link,
                      unit_s, mux, total_km):
    """Cost coefficient of every schedule in ``product(choices, repeat=nesting+1)``.

    ``choices`` must be sorted ascending.  Entries follow ``itertools.product``
    order (level 0 varies slowest); schedules with no secret key get ``inf``.
    Shared schedule prefixes are evaluated once.
    """
    choices = [int(c) for c in choices]
    q = float(gate_error)
    p = float(p_link)
    links = float(2**nesting)
    out = np.empty(len(choices) ** (nesting + 1))
    idx = 0

    def rec(level, w, mean, var, total):
        nonlocal idx
        hop = float(2**level)
        done = 0
        for r in choices:
            while done < r:
                w, mean, var = _purify(w, mean, var, hop, dejmps, q)
                done += 1
            if level < nesting:
                w2, m2, v2 = _swap(w, mean, var, hop, q)
                rec(level + 1, w2, m2, v2, total + r)
            else:
                sf = _key_fraction(w)
                if sf > 0.0:
                    rate = sf / (mean * unit_s)
                    qubits = 2.0 * mux * 2.0 ** (total + r) * links
                    out[idx] = qubits / (rate * total_km)
                else:
                    out[idx] = math.inf
                idx += 1

    rec(0, tuple(float(x) for x in link_weights), 1.0 / p, (1.0 - p) / (p * p), 0)
    return out


class _Uniforms:
    """Buffered stream of doubles drawn with ``Generator.random``."""

    def __init__(self, rng, block=8192):
        self._rng = rng
        self._block = block
        self._buf = rng.random(block)
        self._i = 0

    def next(self):
        if self._i == self._block:
            self._buf = self._rng.random(self._block)
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return float(u)


class _Chain:
    def __init__(self, uniforms, p_link, cum_weights, rounds, dejmps, gate_error):
        self.u = uniforms
        self.log_fail = math.log1p(-p_link) if p_link < 1.0 else 0.0
        self.certain = p_link >= 1.0
        self.cum = cum_weights
        self.rounds = rounds
        self.dejmps = dejmps
        self.q = gate_error

    def _noise(self, label):
        if self.q > 0.0 and self.u.next() < self.q:
            label = int(self.u.next() * 4.0)
        return label

    def _twirl(self, label):
        if label != 0:
            label = 1 + int(self.u.next() * 3.0)
        return label

    def produce(self, level, rnd):
        if rnd == 0:
            if level == 0:
                v = self.u.next()
                if self.certain:
                    attempts = 1.0
                else:
                    attempts = math.floor(math.log1p(-v) / self.log_fail) + 1.0
                v = self.u.next()
                label = 0
                while label < 3 and v >= self.cum[label]:
                    label += 1
                return attempts, label
            ta, la = self.produce(level - 1, self.rounds[level - 1])
            tb, lb = self.produce(level - 1, self.rounds[level - 1])
            t = max(ta, tb) + float(2 ** (level - 1))
            return t, self._noise(la ^ lb)
        hop = float(2**level)
        total = 0.0
        while True:
            ta, la = self.produce(level, rnd - 1)
            tb, lb = self.produce(level, rnd - 1)
            total += max(ta, tb) + hop
            if self.dejmps:
                la = _DEJMPS_PERM[la]
                lb = _DEJMPS_PERM[lb]
            else:
                la = self._twirl(la)
                lb = self._twirl(lb)
            if (la >> 1) == (lb >> 1):
                out = (la & 2) | ((la ^ lb) & 1)
                if not self.dejmps:
                    out = self._twirl(out)
                return total, self._noise(out)


def mc_chain(rng, trials, p_link, link_weights, rounds, dejmps, gate_error):
    """Sample ``trials`` end-to-end pairs of a first-generation chain.

    Returns ``(times, labels)``: per-trial generation time in units of L0/c and
    the final Bell label (0 means Phi+).
    """
    cum = np.cumsum(np.asarray(link_weights, dtype=float))
    cum = [float(c) for c in cum[:3]]
    rounds = [int(r) for r in rounds]
    chain = _Chain(_Uniforms(rng), float(p_link), cum, rounds, bool(dejmps), float(gate_error))
    n = len(rounds) - 1
    times = np.empty(trials)
    labels = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        times[i], labels[i] = chain.produce(n, rounds[n])
    return times, labels
