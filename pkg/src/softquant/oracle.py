"""Brute-force checks of the regularized transport identities on small discrete instances.

An instance is a source vector ``P`` (n atoms), a reference vector ``Q``
(m atoms), an ``n x m`` cost matrix and ``lam > 0``.  The quantity of
interest is

    min over plans pi with row marginal P of  E_pi cost + lam * KL(pi || P x Q)

which has the closed form ``sum_i P_i smin_lam(cost_i; Q)``.
:func:`brute_force_solve` minimizes the same objective numerically without
using that formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objective import INFINITE_DIVERGENCE, entropy, kl_divergence
from .softmin import smooth_min

__all__ = [
    "DiscreteInstance",
    "TransportPlan",
    "ConvergenceError",
    "closed_form_value",
    "optimal_plan",
    "plan_objective",
    "brute_force_solve",
    "brute_force_value",
    "marginal_projection_gap",
    "entropy_form_value",
    "random_instance",
    "random_plan",
    "verify_suite",
]


class ConvergenceError(RuntimeError):
    def __init__(self, msg, best_value):
        super().__init__(f"{msg} (best value {best_value!r})")
        self.best_value = best_value


def _prob(v, name):
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0 or (v < 0).any() or abs(v.sum() - 1) > 1e-12 * max(1, v.size):
        raise ValueError(f"{name} must be a probability vector")
    return v


@dataclass
class DiscreteInstance:
    P: np.ndarray
    Q: np.ndarray
    cost: np.ndarray
    lam: float

    def __post_init__(self):
        self.P = _prob(self.P, "P")
        self.Q = _prob(self.Q, "Q")
        self.cost = np.asarray(self.cost, dtype=float)
        if self.cost.shape != (self.P.size, self.Q.size):
            raise ValueError(f"cost must have shape {(self.P.size, self.Q.size)}")
        if (self.cost < 0).any():
            raise ValueError("costs must be nonnegative")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def product(self):
        return np.outer(self.P, self.Q)


@dataclass
class TransportPlan:
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or (self.matrix < 0).any():
            raise ValueError("a plan is a nonnegative matrix")
        if abs(self.matrix.sum() - 1) > 1e-12 * max(1, self.matrix.size):
            raise ValueError("a plan has total mass 1")

    @property
    def row_marginal(self):
        return self.matrix.sum(axis=1)

    @property
    def col_marginal(self):
        return self.matrix.sum(axis=0)


def closed_form_value(inst):
    """``sum_i P_i * smin_lam(cost[i, :]; Q)``."""
    return float(sum(p * smooth_min(c, inst.Q, inst.lam) for p, c in zip(inst.P, inst.cost)))


def optimal_plan(inst):
    """Gibbs plan ``pi_ij = P_i Q_j exp(-c_ij/lam) / sum_k Q_k exp(-c_ik/lam)``."""
    c = inst.cost
    masked = np.where(inst.Q > 0, c, np.inf)
    e = inst.Q * np.exp(-(c - masked.min(axis=1, keepdims=True)) / inst.lam)
    rows = e / e.sum(axis=1, keepdims=True)
    return TransportPlan(inst.P[:, None] * rows)


def plan_objective(plan, inst):
    """``E_pi cost + lam * KL(pi || P x Q)``; ``inf`` off the product support."""
    pi = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, float)
    kl = kl_divergence(pi.ravel(), inst.product.ravel())
    if kl is INFINITE_DIVERGENCE:
        return float("inf")
    return float(np.sum(pi * inst.cost) + inst.lam * kl)


def _row_objective(z, c, q, lam):
    pos = z > 0
    return float(z @ c + lam * np.sum(z[pos] * np.log(z[pos] / q[pos])))


def _solve_row(c, q, lam, tol, max_iter):
    # exponentiated gradient on the simplex restricted to supp(q)
    sup = q > 0
    c, q = c[sup], q[sup]
    z = q.copy()
    spread = c.max() - c.min()
    eta = 1.0 / (2 * lam + spread + 1e-300)
    f = _row_objective(z, c, q, lam)
    for _ in range(max_iter):
        g = c + lam * (np.log(z / q) + 1)
        logz = np.log(z) - eta * g
        z_new = np.exp(logz - logz.max())
        z_new /= z_new.sum()
        f_new = _row_objective(z_new, c, q, lam)
        z, decrease, f = z_new, f - f_new, min(f, f_new)
        if abs(decrease) < tol:
            break
    else:
        raise ConvergenceError("row problem did not converge", f)
    out = np.zeros(sup.size)
    out[sup] = z
    return out, f


def brute_force_solve(inst, tol=1e-15, max_iter=100_000):
    """Numerically minimize the regularized objective over plans with row marginal ``P``.

    The problem splits into one strictly convex problem per row (the
    conditional distribution of the second coordinate), each solved by
    exponentiated gradient descent until the decrease drops below ``tol``.

    Returns
    -------
    value : float
    plan : TransportPlan
    """
    if inst.P.size * inst.Q.size > 64:
        raise ValueError("brute force is limited to n * m <= 64")
    rows, value = [], 0.0
    for p, c in zip(inst.P, inst.cost):
        z, f = _solve_row(c, inst.Q, inst.lam, tol, max_iter)
        rows.append(p * z)
        value += p * f
    return float(value), TransportPlan(np.array(rows))


def brute_force_value(inst, tol=1e-15):
    return brute_force_solve(inst, tol)[0]


def marginal_projection_gap(plan, P, Q):
    """Return ``(KL(pi || P x pi_2), KL(pi || P x Q))``.

    Either entry may be :data:`INFINITE_DIVERGENCE`.
    """
    pi = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, float)
    P = np.asarray(P, float)
    if not np.allclose(pi.sum(axis=1), P, atol=1e-12, rtol=0):
        raise ValueError("row marginal of the plan differs from P")
    col = pi.sum(axis=0)
    d_proj = kl_divergence(pi.ravel(), np.outer(P, col).ravel())
    d_orig = kl_divergence(pi.ravel(), np.outer(P, Q).ravel())
    return d_proj, d_orig


def entropy_form_value(plan, inst):
    """``E_pi cost - lam * H(pi)`` for a plan with marginals ``P`` and ``Q``."""
    pi = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, float)
    if np.abs(pi.sum(axis=1) - inst.P).max() > 1e-8 or np.abs(pi.sum(axis=0) - inst.Q).max() > 1e-8:
        raise ValueError("plan marginals do not match the instance")
    return float(np.sum(pi * inst.cost) - inst.lam * entropy(pi.ravel()))


# randomized suites -------------------------------------------------------

LAMBDAS = (0.1, 0.5, 2.0)


def random_instance(rng, max_n=4, max_m=4, lambdas=LAMBDAS):
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    return DiscreteInstance(
        rng.dirichlet(np.ones(n)),
        rng.dirichlet(np.ones(m)),
        rng.uniform(0, 1, size=(n, m)),
        float(rng.choice(lambdas)),
    )


def random_plan(rng, n, m):
    pi = rng.dirichlet(np.ones(n * m)).reshape(n, m)
    return TransportPlan(pi)


def verify_suite(n_instances=100, seed=0, closed_form=closed_form_value, tol_value=1e-6,
                 tol_plan=1e-5, tol_identity=1e-10):
    """Run the randomized oracle checks and return a list of report records.

    Each record is a dict with ``check``, ``instance``, ``gap`` and ``ok``.
    ``closed_form`` can be swapped to test that a broken formula is caught.
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_instances):
        inst = random_instance(rng)
        bf_value, bf_plan = brute_force_solve(inst)
        gap = abs(closed_form(inst) - bf_value)
        records.append(dict(check="closed_form_vs_brute_force", instance=i, n=inst.P.size,
                            m=inst.Q.size, lam=inst.lam, gap=gap, ok=gap <= tol_value))
        plan_gap = float(np.abs(optimal_plan(inst).matrix - bf_plan.matrix).max())
        records.append(dict(check="plan_vs_brute_force", instance=i, n=inst.P.size,
                            m=inst.Q.size, lam=inst.lam, gap=plan_gap, ok=plan_gap <= tol_plan))
    for i in range(n_instances):
        n, m = (int(v) for v in rng.integers(1, 5, size=2))
        pi = random_plan(rng, n, m)
        Q = rng.dirichlet(np.ones(m))
        d_proj, d_orig = marginal_projection_gap(pi, pi.row_marginal, Q)
        gap = abs((d_orig - d_proj) - kl_divergence(pi.col_marginal, Q))
        ok = d_proj <= d_orig + 1e-12 and gap <= tol_identity
        records.append(dict(check="marginal_projection", instance=i, n=n, m=m, lam=float("nan"),
                            gap=gap, ok=bool(ok)))
    return records
