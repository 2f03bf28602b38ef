"""Power-flow evaluation, the fixed-point solver, and a Newton test oracle.

Sign convention: injections are generation-positive, so loads carry negative
real parts.  All quantities are per unit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateVoltageError,
    InputFormatError,
    NonConvergenceError,
    SingularJacobianError,
)
from .netmodel import NetworkModel, ZeroLoadProfile, zero_load_voltage

log = logging.getLogger(__name__)

# Guards for the diagonal inversions in the fixed-point map; voltages this
# small with a nonzero injection mean the map is no longer well defined.
EPS_V = 1e-9
EPS_DELTA = 1e-9


@dataclass
class InjectionSet:
    """Wye injections per existing phase and delta injections per existing
    phase-pair connection, stacked in index order."""

    s_wye: np.ndarray
    s_delta: np.ndarray

    def __post_init__(self):
        self.s_wye = np.asarray(self.s_wye, dtype=complex)
        self.s_delta = np.asarray(self.s_delta, dtype=complex)
        if not (np.all(np.isfinite(self.s_wye)) and np.all(np.isfinite(self.s_delta))):
            raise InputFormatError("injections must be finite")

    @classmethod
    def zeros(cls, model: NetworkModel) -> "InjectionSet":
        return cls(
            s_wye=np.zeros(model.n_phases, dtype=complex),
            s_delta=np.zeros(model.n_delta, dtype=complex),
        )

    def __add__(self, other: "InjectionSet") -> "InjectionSet":
        return InjectionSet(self.s_wye + other.s_wye, self.s_delta + other.s_delta)

    def __sub__(self, other: "InjectionSet") -> "InjectionSet":
        return InjectionSet(self.s_wye - other.s_wye, self.s_delta - other.s_delta)

    def scaled(self, factor) -> "InjectionSet":
        return InjectionSet(factor * self.s_wye, factor * self.s_delta)


@dataclass
class SolveResult:
    """A load-flow solution with its iteration diagnostics.

    ``i = yl0 @ v0 + yll @ v`` holds by construction; ``i_delta`` are the
    recovered phase-to-phase currents (zero where the injection is zero).
    ``contraction_estimate`` is the largest observed ratio of consecutive
    update norms, reported as a diagnostic whether or not a certificate
    exists.
    """

    v: np.ndarray
    i_delta: np.ndarray
    i: np.ndarray
    iterations: int
    residual_inf: float
    converged: bool
    contraction_estimate: float
    step_norms: tuple = ()


def _conj_delta_currents(H, v, s_delta):
    """conj(i_delta) = s_delta / (H v), zero where the injection is zero."""
    if s_delta.size == 0:
        return np.zeros(0, dtype=complex)
    hv = H @ v
    live = s_delta != 0
    if np.any(live & (np.abs(hv) <= EPS_DELTA)):
        raise DegenerateVoltageError(
            "near-zero phase-to-phase voltage with nonzero delta injection"
        )
    out = np.zeros_like(hv)
    out[live] = s_delta[live] / hv[live]
    return out


def power_flow_residual(model: NetworkModel, w_profile: ZeroLoadProfile, v, inj: InjectionSet):
    """Entrywise magnitude of the power-balance mismatch at voltages ``v``.

    The phase-pair currents are substituted from their defining relation and
    the net currents from the admittance equation, so only the per-phase
    balance can be violated.  Callers reduce with the infinity norm.
    ``w_profile`` is accepted for uniformity with the map-evaluation family;
    the mismatch itself does not depend on it.
    """
    v = np.asarray(v, dtype=complex)
    H = model.connection.H
    ic_delta = _conj_delta_currents(H, v, inj.s_delta)
    i = model.yl0 @ model.v0 + model.yll @ v
    mismatch = (H.T @ ic_delta) * v + inj.s_wye - v * np.conj(i)
    return np.abs(mismatch)


def fixed_point_map(model: NetworkModel, w_profile: ZeroLoadProfile, inj: InjectionSet, v):
    """One application of the voltage-update operator G."""
    v = np.asarray(v, dtype=complex)
    live = inj.s_wye != 0
    if np.any(live & (np.abs(v) <= EPS_V)):
        raise DegenerateVoltageError("near-zero phase voltage with nonzero wye injection")
    term = np.zeros_like(v)
    term[live] = np.conj(inj.s_wye[live] / v[live])
    if model.n_delta:
        H = model.connection.H
        term = term + H.T @ np.conj(_conj_delta_currents(H, v, inj.s_delta))
    return w_profile.w + model.solve_yll(term)


def solve_fixed_point(
    model: NetworkModel,
    w_profile: ZeroLoadProfile,
    inj: InjectionSet,
    v_init=None,
    tol_step: float = 1e-10,
    tol_residual: float = 1e-8,
    max_iter: int = 1000,
) -> SolveResult:
    """Iterate ``v <- G(v)`` until the update norm drops below ``tol_step``.

    The stopping rule is the step norm (what the contraction theory bounds);
    the returned result is then validated against ``tol_residual`` and
    flagged accordingly.

    Raises
    ------
    NonConvergenceError
        If ``max_iter`` updates do not bring the step below ``tol_step``.
        The exception carries the last iterate and all step norms.
    DegenerateVoltageError
        If an iterate degenerates under a nonzero injection.
    """
    v = np.array(w_profile.w if v_init is None else v_init, dtype=complex)
    step_norms = []
    for iteration in range(1, max_iter + 1):
        v_next = fixed_point_map(model, w_profile, inj, v)
        step = float(np.abs(v_next - v).max()) if v.size else 0.0
        step_norms.append(step)
        v = v_next
        if step < tol_step:
            break
    else:
        raise NonConvergenceError(
            f"fixed-point iteration did not converge in {max_iter} iterations "
            f"(last step {step_norms[-1]:.3e})",
            last_v=v,
            step_norms=step_norms,
        )

    residual = power_flow_residual(model, w_profile, v, inj)
    residual_inf = float(residual.max()) if residual.size else 0.0
    converged = residual_inf <= tol_residual
    if not converged:
        log.warning("step converged but residual %.3e exceeds %.1e", residual_inf, tol_residual)

    # Ratios of steps at the rounding floor are measurement noise, not
    # contraction information; skip them.
    floor = 1e3 * np.finfo(float).eps * max(1.0, float(np.abs(v).max()))
    ratios = [b / a for a, b in zip(step_norms, step_norms[1:]) if a > floor]
    contraction = max(ratios) if ratios else 0.0

    H = model.connection.H
    i_delta = np.conj(_conj_delta_currents(H, v, inj.s_delta))
    return SolveResult(
        v=v,
        i_delta=i_delta,
        i=model.yl0 @ model.v0 + model.yll @ v,
        iterations=iteration,
        residual_inf=residual_inf,
        converged=converged,
        contraction_estimate=float(contraction),
        step_norms=tuple(step_norms),
    )


def _complex_mismatch(model, v, inj):
    H = model.connection.H
    ic_delta = _conj_delta_currents(H, v, inj.s_delta)
    i = model.yl0 @ model.v0 + model.yll @ v
    return (H.T @ ic_delta) * v + inj.s_wye - v * np.conj(i), ic_delta, i


def newton_oracle(
    model: NetworkModel,
    inj: InjectionSet,
    v_init=None,
    tol_residual: float = 1e-10,
    max_iter: int = 60,
) -> SolveResult:
    """Damped Newton on the real/imaginary stacked balance equations.

    Test-only cross-validation path: same equations, an unrelated algorithm.
    The step is damped by halving whenever the residual norm would increase.
    """
    n = model.n_phases
    H = model.connection.H
    if v_init is None:
        v = np.array(zero_load_voltage(model).w, dtype=complex)
    else:
        v = np.array(v_init, dtype=complex)

    f, ic_delta, i = _complex_mismatch(model, v, inj)
    fnorm = np.abs(f).max() if f.size else 0.0
    for iteration in range(1, max_iter + 1):
        if fnorm <= tol_residual:
            break
        hv = H @ v if model.n_delta else np.zeros(0, dtype=complex)
        # Wirtinger blocks of the mismatch: d/dv and d/dconj(v).
        j_v = np.diag(H.T @ ic_delta) - np.diag(np.conj(i))
        if model.n_delta:
            dc = np.zeros_like(hv)
            live = inj.s_delta != 0
            dc[live] = inj.s_delta[live] / hv[live] ** 2
            j_v -= (v[:, None] * H.T) @ (dc[:, None] * H)
        j_vbar = -v[:, None] * np.conj(model.yll)
        A = np.block(
            [
                [j_v.real + j_vbar.real, -j_v.imag + j_vbar.imag],
                [j_v.imag + j_vbar.imag, j_v.real - j_vbar.real],
            ]
        )
        rhs = -np.concatenate([f.real, f.imag])
        try:
            delta = scipy.linalg.solve(A, rhs)
        except scipy.linalg.LinAlgError as exc:
            raise SingularJacobianError(f"singular Newton Jacobian: {exc}") from exc
        if not np.all(np.isfinite(delta)):
            raise SingularJacobianError("singular Newton Jacobian (non-finite step)")
        dv = delta[:n] + 1j * delta[n:]

        lam = 1.0
        while True:
            v_try = v + lam * dv
            try:
                f_try, ic_try, i_try = _complex_mismatch(model, v_try, inj)
            except DegenerateVoltageError:
                f_try = None
            if f_try is not None and np.abs(f_try).max() < fnorm:
                v, f, ic_delta, i = v_try, f_try, ic_try, i_try
                fnorm = np.abs(f).max()
                break
            lam *= 0.5
            if lam < 2.0**-30:
                raise NonConvergenceError(
                    "Newton damping exhausted without residual decrease",
                    last_v=v,
                )
    else:
        raise NonConvergenceError(
            f"Newton did not converge in {max_iter} iterations (residual {fnorm:.3e})",
            last_v=v,
        )

    i_delta = np.conj(_conj_delta_currents(H, v, inj.s_delta))
    return SolveResult(
        v=v,
        i_delta=i_delta,
        i=model.yl0 @ model.v0 + model.yll @ v,
        iterations=iteration,
        residual_inf=float(fnorm),
        converged=True,
        contraction_estimate=float("nan"),
    )


# ---------------------------------------------------------------------------
# JSON interface


def injections_from_json(doc: dict, model: NetworkModel) -> InjectionSet:
    """Parse an injection document against a model's index maps.

    Schema::

        {"wye":   [{"bus", "phase", "re", "im"}],
         "delta": [{"bus", "pair",  "re", "im"}]}

    Omitted entries are zero.  Entries referencing phases or connections the
    model does not declare are rejected.
    """
    if not isinstance(doc, dict):
        raise InputFormatError("injection document must be a JSON object")
    inj = InjectionSet.zeros(model)
    for i, entry in enumerate(doc.get("wye", ())):
        where = f"wye[{i}]"
        try:
            key = (str(entry["bus"]), str(entry["phase"]))
            value = complex(float(entry["re"]), float(entry["im"]))
        except (TypeError, KeyError, ValueError):
            raise InputFormatError(f"{where}: expected bus, phase, re, im") from None
        if key not in model.index.phase_index:
            raise InputFormatError(f"{where}: phase {key[1]!r} does not exist at bus {key[0]!r}")
        inj.s_wye[model.index.phase_index[key]] += value
    for i, entry in enumerate(doc.get("delta", ())):
        where = f"delta[{i}]"
        try:
            key = (str(entry["bus"]), str(entry["pair"]))
            value = complex(float(entry["re"]), float(entry["im"]))
        except (TypeError, KeyError, ValueError):
            raise InputFormatError(f"{where}: expected bus, pair, re, im") from None
        if key not in model.index.delta_index:
            raise InputFormatError(
                f"{where}: connection {key[1]!r} is not declared at bus {key[0]!r}"
            )
        inj.s_delta[model.index.delta_index[key]] += value
    return inj


def injections_from_file(path, model: NetworkModel) -> InjectionSet:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}: invalid JSON ({exc})") from None
    return injections_from_json(doc, model)
