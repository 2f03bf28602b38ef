"""Linear surrogate models of the load-flow solution.

Two constructions share one model container: the tangent model obtained by
differentiating the balance equations at a solved base point (FOT), and the
explicit model given by a single voltage-update step frozen at the base
(FPL).  Both predict complex voltages and, through a separate affine map,
voltage magnitudes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .certify import check_theorem2, gamma_quantities, xi_norms
from .errors import (
    CertificateRequiredError,
    DegenerateVoltageError,
    InvalidBaseError,
    SingularSensitivityError,
)
from .netmodel import NetworkModel, ZeroLoadProfile, complex_to_doc
from .powerflow import EPS_DELTA, EPS_V, InjectionSet, SolveResult, power_flow_residual

BASE_RESIDUAL_TOL = 1e-8


def stack_injections(inj: InjectionSet) -> np.ndarray:
    """Stack an injection set as the real vector (Re wye, Im wye, Re delta, Im delta)."""
    return np.concatenate(
        [inj.s_wye.real, inj.s_wye.imag, inj.s_delta.real, inj.s_delta.imag]
    )


@dataclass
class LinearModel:
    """Affine voltage and magnitude predictors around a base operating point.

    ``m_wye``/``m_delta`` map stacked real injections to complex voltages
    with offset ``a``; ``k_wye``/``k_delta`` with offset ``b`` give the
    magnitude predictor (an affine map of its own, not the magnitude of the
    complex prediction).  Evaluating at the base injections reproduces the
    base voltages.
    """

    kind: str
    m_wye: np.ndarray = field(repr=False)
    m_delta: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    k_wye: np.ndarray = field(repr=False)
    k_delta: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    base_v: np.ndarray = field(repr=False)
    base_x: np.ndarray = field(repr=False)

    @property
    def n_phases(self) -> int:
        return self.a.size

    @property
    def n_delta(self) -> int:
        return self.m_delta.shape[1] // 2

    def to_dict(self) -> dict:
        def cmat(mat):
            return [[complex_to_doc(z) for z in row] for row in mat]

        def rmat(mat):
            return [[float(x) for x in row] for row in mat]

        return {
            "kind": self.kind,
            "m_wye": cmat(self.m_wye),
            "m_delta": cmat(self.m_delta),
            "a": [complex_to_doc(z) for z in self.a],
            "k_wye": rmat(self.k_wye),
            "k_delta": rmat(self.k_delta),
            "b": [float(x) for x in self.b],
            "base_v": [complex_to_doc(z) for z in self.base_v],
            "base_x": [float(x) for x in self.base_x],
        }


def _magnitude_maps(v_hat, m_wye, m_delta, x_wye_hat, x_delta_hat):
    # d|v|/dx = Re(conj(v) dv/dx) / |v|, applied column-wise to both maps.
    scale = np.conj(v_hat)[:, None]
    vabs = np.abs(v_hat)
    k_wye = np.real(scale * m_wye) / vabs[:, None]
    k_delta = np.real(scale * m_delta) / vabs[:, None]
    b = vabs - k_wye @ x_wye_hat - k_delta @ x_delta_hat
    return k_wye, k_delta, b


def _check_base(model, base_solution, base_inj, tol_residual):
    # The balance mismatch does not involve the zero-load profile.
    v_hat = np.asarray(base_solution.v, dtype=complex)
    residual = power_flow_residual(model, None, v_hat, base_inj)
    if residual.size and residual.max() > tol_residual:
        raise InvalidBaseError(
            f"linearization base residual {residual.max():.3e} exceeds {tol_residual:.1e}"
        )
    return v_hat


def fot_linearize(
    model: NetworkModel,
    base_solution: SolveResult,
    base_inj: InjectionSet,
    tol_residual: float = BASE_RESIDUAL_TOL,
) -> LinearModel:
    """Tangent (first-order) model at a solved base point.

    The sensitivity equations couple the unknown columns to their conjugates,
    so they are real-linear but not complex-linear; the unknowns are stacked
    as (Re dV, Im dV, Re dI, Im dI) into one real operator that is factorized
    once and reused for every right-hand-side column.

    Raises
    ------
    SingularSensitivityError
        The stacked operator is singular: the tangent model is not uniquely
        defined at this base (neither solvability hypothesis holds).
    """
    v_hat = _check_base(model, base_solution, base_inj, tol_residual)
    H = model.connection.H
    n, d = model.n_phases, model.n_delta

    hv = H @ v_hat
    live = base_inj.s_delta != 0
    if np.any(live & (np.abs(hv) <= EPS_DELTA)):
        raise DegenerateVoltageError("degenerate phase-pair voltage at the base point")
    ic_delta = np.zeros(d, dtype=complex)
    ic_delta[live] = base_inj.s_delta[live] / hv[live]
    i_hat = model.yl0 @ model.v0 + model.yll @ v_hat

    # Balance rows: complex-linear part in dV, conjugate part, and the dI part.
    a1 = np.diag(H.T @ ic_delta) - np.diag(np.conj(i_hat))
    a2 = -v_hat[:, None] * np.conj(model.yll)
    a3 = v_hat[:, None] * H.T
    # Pair-definition rows.
    b1 = ic_delta[:, None] * H
    b2 = np.diag(hv)

    size = 2 * (n + d)
    op = np.zeros((size, size))
    op[: 2 * n, : 2 * n] = np.block(
        [[a1.real + a2.real, -a1.imag + a2.imag], [a1.imag + a2.imag, a1.real - a2.real]]
    )
    op[: 2 * n, 2 * n :] = np.block([[a3.real, -a3.imag], [a3.imag, a3.real]])
    op[2 * n :, : 2 * n] = np.block([[b1.real, -b1.imag], [b1.imag, b1.real]])
    op[2 * n :, 2 * n :] = np.block([[b2.real, -b2.imag], [b2.imag, b2.real]])

    # Right-hand sides: injection coordinates enter the balance rows with a
    # minus sign, pair coordinates enter the pair rows directly.
    rhs = np.zeros((size, 2 * n + 2 * d))
    rhs[: 2 * n, : 2 * n] = -np.eye(2 * n)
    rhs[2 * n :, 2 * n :] = np.eye(2 * d)

    try:
        with warnings.catch_warnings():
            # Exact singularity is detected below from the factor diagonals.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(op)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise SingularSensitivityError(f"stacked sensitivity operator: {exc}") from exc
    udiag = np.abs(np.diag(lu[0]))
    if udiag.size and (udiag.min() == 0.0 or udiag.min() < 1e-14 * udiag.max()):
        raise SingularSensitivityError(
            "stacked sensitivity operator is singular at this base point"
        )
    sol = scipy.linalg.lu_solve(lu, rhs)

    dv = sol[:n, :] + 1j * sol[n : 2 * n, :]
    m_wye = dv[:, : 2 * n]
    m_delta = dv[:, 2 * n :]

    x_wye_hat = np.concatenate([base_inj.s_wye.real, base_inj.s_wye.imag])
    x_delta_hat = np.concatenate([base_inj.s_delta.real, base_inj.s_delta.imag])
    a = v_hat - m_wye @ x_wye_hat - m_delta @ x_delta_hat
    k_wye, k_delta, b = _magnitude_maps(v_hat, m_wye, m_delta, x_wye_hat, x_delta_hat)
    return LinearModel(
        kind="fot",
        m_wye=m_wye,
        m_delta=m_delta,
        a=a,
        k_wye=k_wye,
        k_delta=k_delta,
        b=b,
        base_v=v_hat,
        base_x=np.concatenate([x_wye_hat, x_delta_hat]),
    )


def fpl_linearize(
    model: NetworkModel,
    w_profile: ZeroLoadProfile,
    base_solution: SolveResult,
    base_inj: InjectionSet,
    tol_residual: float = BASE_RESIDUAL_TOL,
) -> LinearModel:
    """Explicit model from one voltage-update step frozen at the base.

    The coefficient blocks are closed-form; the offset is always the
    zero-load voltage, so the model interpolates both the zero-load pair and
    the base pair.
    """
    v_hat = _check_base(model, base_solution, base_inj, tol_residual)
    H = model.connection.H
    if np.abs(v_hat).min() <= EPS_V:
        raise DegenerateVoltageError("degenerate phase voltage at the base point")
    p = model.solve_yll(np.diag(1.0 / np.conj(v_hat)))
    m_wye = np.hstack([p, -1j * p])
    if model.n_delta:
        hv_conj = H @ np.conj(v_hat)
        if np.abs(hv_conj).min() <= EPS_DELTA:
            raise DegenerateVoltageError("degenerate phase-pair voltage at the base point")
        q = model.solve_yll(H.T @ np.diag(1.0 / hv_conj))
        m_delta = np.hstack([q, -1j * q])
    else:
        m_delta = np.zeros((model.n_phases, 0), dtype=complex)

    x_wye_hat = np.concatenate([base_inj.s_wye.real, base_inj.s_wye.imag])
    x_delta_hat = np.concatenate([base_inj.s_delta.real, base_inj.s_delta.imag])
    k_wye, k_delta, b = _magnitude_maps(v_hat, m_wye, m_delta, x_wye_hat, x_delta_hat)
    return LinearModel(
        kind="fpl",
        m_wye=m_wye,
        m_delta=m_delta,
        a=w_profile.w.copy(),
        k_wye=k_wye,
        k_delta=k_delta,
        b=b,
        base_v=v_hat,
        base_x=np.concatenate([x_wye_hat, x_delta_hat]),
    )


def evaluate_linear(linmodel: LinearModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate both affine maps at a stacked real injection vector.

    Returns the complex voltage prediction and the magnitude prediction;
    the latter is its own affine map, not the magnitude of the former.
    """
    x = np.asarray(x, dtype=float)
    n2 = linmodel.m_wye.shape[1]
    d2 = linmodel.m_delta.shape[1]
    if x.shape != (n2 + d2,):
        raise ValueError(f"expected stacked injection vector of length {n2 + d2}")
    x_wye, x_delta = x[:n2], x[n2:]
    v = linmodel.m_wye @ x_wye + linmodel.m_delta @ x_delta + linmodel.a
    vabs = linmodel.k_wye @ x_wye + linmodel.k_delta @ x_delta + linmodel.b
    return v, vabs


def fpl_error_bound(
    model: NetworkModel,
    w_profile: ZeroLoadProfile,
    base,
    target: InjectionSet,
    tol_residual: float = BASE_RESIDUAL_TOL,
) -> tuple[float, float]:
    """A priori bound on the FPL prediction error for certified targets.

    Returns ``(bound, q)`` where ``q`` is the contraction coefficient at the
    tight containment radius and ``bound = q * rho_dagger * max|w|``.  The
    certificate guarantees ``q < 1``.

    Raises
    ------
    CertificateRequiredError
        The explicit certificate does not hold for this base/target pair.
    """
    cert = check_theorem2(model, w_profile, base, target, tol_residual=tol_residual)
    if not cert.satisfied:
        raise CertificateRequiredError(
            "explicit certificate fails for the target injections; no bound available"
        )
    rho_d = cert.rho_dagger
    gam = gamma_quantities(w_profile, model.connection, np.asarray(base[0], dtype=complex))
    xi_t = xi_norms(model, w_profile, model.connection, target)
    q = xi_t.xi_wye / (gam.alpha - rho_d) ** 2
    if model.n_delta:
        q += xi_t.xi_delta / (gam.beta - rho_d) ** 2
    assert q < 1.0, "contraction coefficient must be < 1 under a passing certificate"
    bound = q * rho_d * float(w_profile.w_abs.max())
    return bound, q
