"""Injection-space norms, voltage-margin quantities, and the two
existence/uniqueness/convergence certificates.

Both certificates are computed around a base pair ``(v_hat, s_hat)`` that
must itself satisfy the power-flow equations; the canonical choice is the
zero-load pair ``(w, 0)``.  A passing certificate names a ball around the
base, scaled entrywise by ``|w|``, that contains exactly one solution for
the target injections and on which the fixed-point iteration converges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProfileError, InvalidBaseError
from .netmodel import ConnectionMatrix, NetworkModel, ZeroLoadProfile, complex_to_doc
from .powerflow import InjectionSet, power_flow_residual

BASE_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class XiQuantities:
    """Weighted injection norms: wye part, delta part, and their sum.

    The total is a norm on stacked injections; homogeneity, the triangle
    inequality, and definiteness are exercised by the property tests.
    """

    xi_wye: float
    xi_delta: float

    @property
    def xi_total(self) -> float:
        return self.xi_wye + self.xi_delta


@dataclass(frozen=True)
class GammaQuantities:
    """Minimum voltage margins of a profile relative to the zero-load one.

    ``beta`` is ``inf`` when the model has no phase-pair connections, so the
    combined margin reduces to the wye-only form.  At ``v = w`` all three
    equal one.
    """

    alpha: float
    beta: float

    @property
    def gamma(self) -> float:
        return min(self.alpha, self.beta)


def xi_norms(
    model: NetworkModel,
    w_profile: ZeroLoadProfile,
    connection: ConnectionMatrix,
    inj: InjectionSet,
) -> XiQuantities:
    """Evaluate the injection norms.

    The wye part is the max absolute row sum of
    ``diag(w)^-1 yll^-1 diag(w)^-1 diag(s_wye)`` and the delta part the same
    for ``diag(w)^-1 yll^-1 H^T diag(L|w|)^-1 diag(s_delta)``; column scaling
    by a diagonal reduces both to weighted absolute matrix-vector products.
    """
    w = w_profile.w
    yinv = model.yll_inverse
    weights_w = np.abs(yinv / w[:, None] / w[None, :])
    xi_wye = float((weights_w @ np.abs(inj.s_wye)).max()) if model.n_phases else 0.0
    if model.n_delta:
        weights_d = np.abs((yinv @ connection.H.T) / w[:, None] / w_profile.Lw[None, :])
        xi_delta = float((weights_d @ np.abs(inj.s_delta)).max())
    else:
        xi_delta = 0.0
    return XiQuantities(xi_wye=xi_wye, xi_delta=xi_delta)


def gamma_quantities(w_profile: ZeroLoadProfile, connection: ConnectionMatrix, v) -> GammaQuantities:
    """Minimum phase and phase-pair voltage margins of ``v``."""
    v = np.asarray(v, dtype=complex)
    alpha = float((np.abs(v) / w_profile.w_abs).min())
    if connection.H.shape[0]:
        if w_profile.Lw.min() <= 0.0:
            raise DegenerateProfileError("zero phase-pair entry in the zero-load profile")
        beta = float((np.abs(connection.H @ v) / w_profile.Lw).min())
    else:
        beta = math.inf
    return GammaQuantities(alpha=alpha, beta=beta)


@dataclass
class Certificate:
    """Outcome of a solvability certificate around a base pair.

    ``rho_used`` is the self-mapping radius (for the explicit certificate,
    the larger root; for the scanned one, the smallest passing grid point)
    and ``rho_dagger`` the tight containment radius, populated only when the
    explicit certificate is satisfied.  ``diagnostics`` records left/right
    values of every condition for audit.
    """

    kind: str
    satisfied: bool
    rho_used: float | None
    rho_dagger: float | None
    base_v: np.ndarray = field(repr=False)
    base_s: InjectionSet = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    def ball_radii(self, w_profile: ZeroLoadProfile, rho: float | None = None) -> np.ndarray:
        """Entrywise radii of the uniqueness ball around ``base_v``."""
        if rho is None:
            rho = self.rho_used
        if rho is None:
            raise ValueError("certificate not satisfied; no ball radius available")
        return rho * w_profile.w_abs

    def to_dict(self) -> dict:
        def scrub(value):
            if isinstance(value, dict):
                return {k: scrub(v) for k, v in value.items()}
            if isinstance(value, float) and math.isinf(value):
                return None
            return value

        return {
            "kind": self.kind,
            "satisfied": bool(self.satisfied),
            "rho_used": self.rho_used,
            "rho_dagger": self.rho_dagger,
            "base": {
                "v": [complex_to_doc(z) for z in self.base_v],
                "s_wye": [complex_to_doc(z) for z in self.base_s.s_wye],
                "s_delta": [complex_to_doc(z) for z in self.base_s.s_delta],
            },
            "diagnostics": scrub(self.diagnostics),
        }


def _validate_base(model, w_profile, base, tol_residual):
    v_hat, s_hat = base
    v_hat = np.asarray(v_hat, dtype=complex)
    residual = power_flow_residual(model, w_profile, v_hat, s_hat)
    res_inf = float(residual.max()) if residual.size else 0.0
    if res_inf > tol_residual:
        raise InvalidBaseError(
            f"base pair residual {res_inf:.3e} exceeds tolerance {tol_residual:.1e}"
        )
    return v_hat, s_hat


def check_theorem2(
    model: NetworkModel,
    w_profile: ZeroLoadProfile,
    base,
    target: InjectionSet,
    tol_residual: float = BASE_RESIDUAL_TOL,
) -> Certificate:
    """Evaluate the explicit (closed-form) certificate.

    Conditions: the base loading must satisfy ``xi(s_hat) < gamma^2`` and the
    injection change ``xi(s - s_hat) < ((gamma^2 - xi(s_hat)) / (2 gamma))^2``
    (both strict).  On success the ball radii are::

        rho_used   = (gamma^2 - xi(s_hat)) / (2 gamma)
        rho_dagger = rho_used - sqrt(rho_used^2 - xi(s - s_hat))

    and the solution for ``target`` is unique in the ``rho_used`` ball,
    reachable by the fixed-point iteration from anywhere in it, and contained
    in the tighter ``rho_dagger`` ball.
    """
    conn = model.connection
    v_hat, s_hat = _validate_base(model, w_profile, base, tol_residual)
    gam = gamma_quantities(w_profile, conn, v_hat)
    xi_hat = xi_norms(model, w_profile, conn, s_hat)
    xi_diff = xi_norms(model, w_profile, conn, target - s_hat)

    cond1_rhs = gam.gamma**2
    cond1_ok = xi_hat.xi_total < cond1_rhs
    cond2_rhs = 0.25 * ((cond1_rhs - xi_hat.xi_total) / gam.gamma) ** 2
    cond2_ok = xi_diff.xi_total < cond2_rhs
    satisfied = cond1_ok and cond2_ok

    rho_used = rho_dagger = None
    if satisfied:
        rho_used = 0.5 * (cond1_rhs - xi_hat.xi_total) / gam.gamma
        rho_dagger = rho_used - math.sqrt(max(rho_used**2 - xi_diff.xi_total, 0.0))

    return Certificate(
        kind="theorem2",
        satisfied=satisfied,
        rho_used=rho_used,
        rho_dagger=rho_dagger,
        base_v=v_hat,
        base_s=s_hat,
        diagnostics={
            "condition1": {"lhs": xi_hat.xi_total, "rhs": cond1_rhs, "satisfied": cond1_ok},
            "condition2": {"lhs": xi_diff.xi_total, "rhs": cond2_rhs, "satisfied": cond2_ok},
            "alpha": gam.alpha,
            "beta": gam.beta,
            "gamma": gam.gamma,
            "xi_base": {"wye": xi_hat.xi_wye, "delta": xi_hat.xi_delta},
            "xi_change": {"wye": xi_diff.xi_wye, "delta": xi_diff.xi_delta},
        },
    )


def check_theorem1(
    model: NetworkModel,
    w_profile: ZeroLoadProfile,
    base,
    target: InjectionSet,
    scan_points: int = 10000,
    tol_residual: float = BASE_RESIDUAL_TOL,
) -> Certificate:
    """Evaluate the general (scanned) certificate.

    A uniform grid over the open interval ``(0, gamma)`` is scanned for a
    radius satisfying both the self-mapping inequality and the strict
    contraction inequality; the left side of the first is not unimodal in
    general, so a grid is used instead of root finding.  The smallest
    passing radius is returned.
    """
    conn = model.connection
    v_hat, s_hat = _validate_base(model, w_profile, base, tol_residual)
    gam = gamma_quantities(w_profile, conn, v_hat)
    xi_hat = xi_norms(model, w_profile, conn, s_hat)
    xi_diff = xi_norms(model, w_profile, conn, target - s_hat)
    xi_target = xi_norms(model, w_profile, conn, target)

    if scan_points < 1:
        raise ValueError("scan_points must be positive")
    rho = gam.gamma * np.arange(1, scan_points + 1) / (scan_points + 1)

    lhs1 = (xi_diff.xi_wye + xi_hat.xi_wye * rho / gam.alpha) / (gam.alpha - rho)
    lhs2 = xi_target.xi_wye / (gam.alpha - rho) ** 2
    if model.n_delta:
        lhs1 = lhs1 + (xi_diff.xi_delta + xi_hat.xi_delta * rho / gam.beta) / (gam.beta - rho)
        lhs2 = lhs2 + xi_target.xi_delta / (gam.beta - rho) ** 2
    ok = (lhs1 <= rho) & (lhs2 < 1.0)

    satisfied = bool(ok.any())
    if satisfied:
        at = int(np.argmax(ok))
        rho_used = float(rho[at])
    else:
        # Report the grid point closest to self-mapping feasibility.
        at = int(np.argmin(lhs1 - rho))
        rho_used = None

    return Certificate(
        kind="theorem1",
        satisfied=satisfied,
        rho_used=rho_used,
        rho_dagger=None,
        base_v=v_hat,
        base_s=s_hat,
        diagnostics={
            "condition1": {
                "lhs": float(lhs1[at]),
                "rhs": float(rho[at]),
                "satisfied": bool(lhs1[at] <= rho[at]),
            },
            "condition2": {
                "lhs": float(lhs2[at]),
                "rhs": 1.0,
                "satisfied": bool(lhs2[at] < 1.0),
            },
            "rho_at_diagnostics": float(rho[at]),
            "scan_points": int(scan_points),
            "alpha": gam.alpha,
            "beta": gam.beta,
            "gamma": gam.gamma,
            "xi_base": {"wye": xi_hat.xi_wye, "delta": xi_hat.xi_delta},
            "xi_change": {"wye": xi_diff.xi_wye, "delta": xi_diff.xi_delta},
            "xi_target": {"wye": xi_target.xi_wye, "delta": xi_target.xi_delta},
        },
    )
