"""Damped Levenberg-Marquardt over a plain residual function.

The Jacobian comes from forward finite differences; ``batch_fun`` lets
the caller evaluate all perturbed states in one vectorized call, which
is where the bulk of the time goes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    energy_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    reason: str = ""
    grad_norm: float = np.inf
    damping: float = 1e-3


def levenberg_marquardt(
    fun,
    x0: np.ndarray,
    *,
    fd_step: float,
    batch_fun=None,
    ftol: float = 1e-6,
    gtol: float = 1e-8,
    max_iters: int = 200,
    time_budget: float | None = None,
    damping: float = 1e-3,
    trace: list[float] | None = None,
) -> LMResult:
    """Minimize sum(fun(x)^2).

    Accepted steps strictly decrease the cost; rejected steps only raise
    the damping. Terminates on relative cost decrease <= ftol, gradient
    max-norm <= gtol, max_iters, or an exhausted time budget.
    """
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=np.float64).copy()
    nx = len(x)
    r = fun(x)
    cost = float(r @ r)
    energy_trace = trace if trace is not None else []
    energy_trace.append(cost)
    result = LMResult(x, cost, energy_trace, damping=damping)

    if nx == 0:
        result.converged = True
        result.reason = "no free variables"
        result.grad_norm = 0.0
        return result

    def jacobian(x, r):
        if batch_fun is not None:
            pert = x[None, :] + fd_step * np.eye(nx)
            return (batch_fun(pert) - r[None, :]).T / fd_step
        cols = np.empty((len(r), nx))
        for k in range(nx):
            xp = x.copy()
            xp[k] += fd_step
            cols[:, k] = (fun(xp) - r) / fd_step
        return cols

    lam = damping
    it = 0
    while it < max_iters:
        it += 1
        jac = jacobian(x, r)
        grad = 2.0 * (jac.T @ r)
        gnorm = float(np.abs(grad).max())
        result.grad_norm = gnorm
        if gnorm <= gtol:
            result.converged = True
            result.reason = "gradient tolerance"
            break
        jtj = jac.T @ jac
        diag = np.maximum(np.diag(jtj), 1e-12 * max(np.diag(jtj).max(), 1e-300))
        accepted = False
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -0.5 * grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                x_new = x + step
                r_new = fun(x_new)
                cost_new = float(r_new @ r_new)
                if np.isfinite(cost_new) and cost_new < cost:
                    drop = cost - cost_new
                    x, r, cost = x_new, r_new, cost_new
                    energy_trace.append(cost)
                    lam = max(lam / 3.0, 1e-12)
                    accepted = True
                    if drop <= ftol * max(cost, 1e-300):
                        result.converged = True
                        result.reason = "function tolerance"
                    break
            lam *= 2.0
            if lam > 1e12:
                result.converged = True
                result.reason = "damping limit (stationary)"
                break
        result.x = x
        result.cost = cost
        result.iterations = it
        result.damping = lam
        if result.converged:
            break
        if not accepted:
            break
        if time_budget is not None and time.perf_counter() - t0 > time_budget:
            result.reason = "time budget"
            break
    else:
        result.reason = "max iterations"

    result.x = x
    result.cost = cost
    result.iterations = it
    result.damping = lam
    return result
