"""Compiled inner loop of :func:`softquant.sgd.run`.

Mirrors ``sgd._update`` step for step; ``tests/test_sgd.py`` checks the two
agree.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _cost_grad(y, xi, w, pn, r, cost, grad):
    m, d = y.shape
    for j in range(m):
        if pn == 2.0 and r == 2.0:
            c = 0.0
            for l in range(d):
                t = y[j, l] - xi[l]
                c += w[l] * t * t
                grad[j, l] = 2.0 * w[l] * t
            cost[j] = c
            continue
        s = 0.0
        for l in range(d):
            s += w[l] * abs(y[j, l] - xi[l]) ** pn
        norm = s ** (1.0 / pn)
        cost[j] = norm**r
        for l in range(d):
            t = y[j, l] - xi[l]
            if norm > 0.0 and t != 0.0:
                grad[j, l] = r * w[l] * norm ** (r - pn) * abs(t) ** (pn - 1.0) * math.copysign(1.0, t)
            else:
                grad[j, l] = 0.0


@njit(cache=True)
def run_steps(y, p, k0, samples, lam, pn, r, w, scale, offset, expo, floor):
    """Apply ``samples.shape[0]`` steps in place; ``samples`` is (steps, batch, d)."""
    nsteps, nb, d = samples.shape
    m = y.shape[0]
    cost = np.empty(m)
    grad = np.empty((m, d))
    assign = np.empty(m)
    gsum = np.empty((m, d))
    asum = np.empty(m)
    for s in range(nsteps):
        k = k0 + s
        alpha = scale / (offset + k) ** expo
        gsum[:] = 0.0
        asum[:] = 0.0
        used = 0
        for b in range(nb):
            _cost_grad(y, samples[s, b], w, pn, r, cost, grad)
            cmin = np.inf
            jmin = 0
            for j in range(m):
                if p[j] > 0.0 and cost[j] < cmin:
                    cmin = cost[j]
                    jmin = j
            if lam == 0.0:
                assign[:] = 0.0
                assign[jmin] = 1.0
            else:
                z = 0.0
                for j in range(m):
                    assign[j] = p[j] * math.exp(-(cost[j] - cmin) / lam)
                    z += assign[j]
                for j in range(m):
                    assign[j] /= z
            finite = True
            for j in range(m):
                if not math.isfinite(assign[j]):
                    finite = False
                for l in range(d):
                    if not math.isfinite(assign[j] * grad[j, l]):
                        finite = False
            if not finite:
                continue
            used += 1
            for j in range(m):
                asum[j] += assign[j]
                for l in range(d):
                    gsum[j, l] += assign[j] * grad[j, l]
        if used == 0:
            continue
        tot = 0.0
        for j in range(m):
            for l in range(d):
                y[j, l] -= alpha * gsum[j, l] / used
            v = (k * p[j] + asum[j] / used) / (k + 1)
            if v < floor:
                v = floor
            p[j] = v
            tot += v
        for j in range(m):
            p[j] /= tot
