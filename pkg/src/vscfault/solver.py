"""Damped least-squares (Levenberg-Marquardt) solver for square systems.

Non-convergence is a meaningful outcome here, not an error: the outer
saturation-state loop uses it to rule out state combinations that admit no
solution (a partially-saturated PV converter under a deep fault, for
example).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .converter import VscSpec
from .system import PackedSystem

CONVERGED = "converged"
NO_CONVERGENCE = "no_convergence"


@dataclass(frozen=True)
class SolveOptions:
    tol_residual: float = 1e-8
    max_iters: int = 200
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    fd_step: float = 1e-7
    lambda_max: float = 1e12

    def __post_init__(self):
        for name in ("tol_residual", "max_iters", "lambda0", "lambda_up",
                     "lambda_down", "fd_step", "lambda_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SolveOutcome:
    status: str  # "converged" | "no_convergence"
    x: np.ndarray
    residual_norm: float  # inf-norm of the residual at x
    iters: int

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def _generic_fd_jacobian(residual_fn, x, r0, step):
    n = x.shape[0]
    jac = np.empty((n, n))
    xw = x.copy()
    for j in range(n):
        old = xw[j]
        xw[j] = old + step
        jac[:, j] = (residual_fn(xw) - r0) / step
        xw[j] = old
    return jac


def solve(residual_fn, x0, opts: SolveOptions | None = None) -> SolveOutcome:
    """Minimize ||R(x)|| with classic lambda-damped Gauss-Newton steps.

    ``residual_fn`` maps an n-vector to an n-vector; if it has a
    ``jacobian(x, step)`` method returning ``(R(x), J)`` that is used,
    otherwise the Jacobian comes from forward differences of the callable.
    Steps are accepted on 2-norm decrease; on acceptance a smaller damping
    factor is tried first, so near-linear systems converge in one or two
    steps. Convergence is declared when the residual inf-norm drops below
    ``tol_residual``; damping overflow or the iteration cap end the solve
    with ``no_convergence``.
    """
    opts = opts or SolveOptions()
    x = np.array(x0, dtype=np.float64)
    n = x.shape[0]
    has_jac = hasattr(residual_fn, "jacobian")

    r = np.asarray(residual_fn(x), dtype=np.float64)
    if r.shape[0] != n:
        raise ValueError(f"residual size {r.shape[0]} != unknown size {n}")
    if not np.all(np.isfinite(r)):
        return SolveOutcome(NO_CONVERGENCE, x, np.inf, 0)

    lam = opts.lambda0
    eye = np.eye(n)
    iters = 0
    for _ in range(opts.max_iters):
        norm_inf = float(np.max(np.abs(r))) if n else 0.0
        if norm_inf < opts.tol_residual:
            return SolveOutcome(CONVERGED, x, norm_inf, iters)

        if has_jac:
            _, jac = residual_fn.jacobian(x, opts.fd_step)
        else:
            jac = _generic_fd_jacobian(residual_fn, x, r, opts.fd_step)
        if not np.all(np.isfinite(jac)):
            return SolveOutcome(NO_CONVERGENCE, x, norm_inf, iters)
        a = jac.T @ jac
        g = jac.T @ r
        r2 = float(np.dot(r, r))

        # optimistic first: try a smaller damping before the current one
        lam_try = max(lam * opts.lambda_down, 1e-14)
        accepted = False
        while True:
            try:
                step = np.linalg.solve(a + lam_try * eye, g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                xn = x - step
                rn = np.asarray(residual_fn(xn), dtype=np.float64)
                if np.all(np.isfinite(rn)) and float(np.dot(rn, rn)) < r2:
                    x, r, lam = xn, rn, lam_try
                    accepted = True
                    break
            lam_try = lam if lam_try < lam else lam_try * opts.lambda_up
            if lam_try > opts.lambda_max:
                break
        iters += 1
        if not accepted:
            return SolveOutcome(NO_CONVERGENCE, x, float(np.max(np.abs(r))), iters)

    norm_inf = float(np.max(np.abs(r))) if n else 0.0
    status = CONVERGED if norm_inf < opts.tol_residual else NO_CONVERGENCE
    return SolveOutcome(status, x, norm_inf, iters)


def flat_start(system: PackedSystem) -> np.ndarray:
    """Initial point: unit positive-sequence voltages, nominal frequency.

    Converter positive-sequence currents are seeded slightly off zero,
    rotated to the reactive-injection side (-90 degrees from the bus
    voltage, i.e. a leading current in the clockwise phasor convention)
    with a small active component matching the sign of the dispatch, so
    the solver lands on the voltage-supporting branch of the saturated
    states.
    """
    layout = system.layout
    x = np.zeros(layout.n_unknowns)
    for d in range(layout.nbus):
        x[layout.u_slot(d, 0)] = 1.0
    for k, e in enumerate(system.model.elements):
        if isinstance(e, VscSpec):
            scale = min(e.i_max, 0.1)
            seed = complex(0.3 * np.sign(e.p_disp), -0.95)
            seed = scale * seed / abs(seed)
            x[layout.i_slot(k, 0)] = seed.real
            x[layout.i_slot(k, 0) + 1] = seed.imag
    if layout.omega_unknown:
        x[-1] = system.model.omega0
    return x
