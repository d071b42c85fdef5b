"""Randomized property suite for the smooth minimum and the combined verification report."""

from __future__ import annotations

import numpy as np

from . import oracle
from .softmin import conditional_smooth_min, smin_gradient, smin_hessian, smooth_min

__all__ = ["softmin_property_suite", "run_verification", "format_report"]

LAMBDAS = (0.05, 0.5, 2.0, 10.0)


def _random_input(rng):
    m = int(rng.integers(1, 9))
    x = rng.normal(0, 3, size=m)
    p = rng.dirichlet(np.ones(m))
    lam = float(rng.choice(LAMBDAS))
    return x, p, lam


def _fd_gradient(x, p, lam, h=1e-6):
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (smooth_min(x + e, p, lam) - smooth_min(x - e, p, lam)) / (2 * h)
    return g


def _fd_hessian(x, p, lam, h=1e-5):
    H = np.empty((x.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        H[:, j] = (smin_gradient(x + e, p, lam) - smin_gradient(x - e, p, lam)) / (2 * h)
    return H


def _record(check, i, gap, ok, lam=float("nan"), n=0):
    return dict(check=check, instance=i, n=n, m=0, lam=lam, gap=float(gap), ok=bool(ok))


def softmin_property_suite(n_instances=100, seed=0):
    """Bounds, normalization, equivariance, nesting and derivative checks.

    Returns report records in the format of :func:`oracle.verify_suite`.
    """
    rng = np.random.default_rng([seed, 1])
    out = []
    for i in range(n_instances):
        x, p, lam = _random_input(rng)
        n = x.size
        s = smooth_min(x, p, lam)
        lo, hi = x.min(), float(p @ x)
        slack = 1e-12 * (1 + abs(s))
        out.append(_record("bounds", i, max(lo - s, s - hi, 0.0),
                           lo - slack <= s <= hi + slack, lam, n))
        g = smin_gradient(x, p, lam)
        out.append(_record("normalization", i, abs(g.sum() - 1), abs(g.sum() - 1) <= 1e-10, lam, n))
        c = float(rng.normal(0, 5))
        gap = abs(smooth_min(x + c, p, lam) - (s + c))
        out.append(_record("translation", i, gap, gap <= 1e-9 * (1 + abs(c) + abs(s)), lam, n))
        gap = abs(smooth_min(2 * x, p, 2 * lam) - 2 * s)
        out.append(_record("homogeneity", i, gap, gap <= 1e-9 * (1 + abs(s)), lam, n))
        gap = s - smooth_min(x, p, 2 * lam)
        out.append(_record("lambda_monotone", i, max(gap, 0.0), gap <= 1e-12 * (1 + abs(s)), lam, n))
        blocks = rng.integers(0, n, size=n)
        blocks = np.unique(blocks, return_inverse=True)[1].ravel()
        cx, cw = conditional_smooth_min(x, p, blocks, lam)
        gap = abs(smooth_min(cx, cw / cw.sum(), lam) - s)
        out.append(_record("nesting", i, gap, gap <= 1e-10 * (1 + abs(s)), lam, n))
        gap = float(np.abs(g - _fd_gradient(x, p, lam)).max())
        out.append(_record("gradient_fd", i, gap, gap <= 1e-5, lam, n))
        gap = float(np.abs(smin_hessian(x, p, lam) - _fd_hessian(x, p, lam)).max())
        out.append(_record("hessian_fd", i, gap, gap <= 1e-5 * max(1.0, 1 / lam), lam, n))
    return out


def run_verification(seed=0, n_instances=100, closed_form=oracle.closed_form_value):
    """All oracle and property records for one seed."""
    records = oracle.verify_suite(n_instances, seed, closed_form=closed_form)
    return records + softmin_property_suite(n_instances, seed)


def format_report(records, seed):
    """Structured text report: a header, one line per failure, a per-check table."""
    lines = [f"seed: {seed}", f"records: {len(records)}"]
    checks = {}
    for r in records:
        checks.setdefault(r["check"], []).append(r)
    for name, rs in checks.items():
        worst = max(r["gap"] for r in rs)
        nfail = sum(not r["ok"] for r in rs)
        lines.append(f"check: {name} count={len(rs)} failed={nfail} max_gap={worst:.3e}")
    for r in records:
        if not r["ok"]:
            lines.append(
                f"FAIL: {r['check']} instance={r['instance']} n={r['n']} m={r['m']} "
                f"lam={r['lam']:g} gap={r['gap']:.6e}"
            )
    ok = all(r["ok"] for r in records)
    lines.append(f"status: {'pass' if ok else 'fail'}")
    return "\n".join(lines) + "\n", ok
