"""The metric flow dc/dt = -laplacian(log c): integrator and diagnostics.

The right-hand side is traceless, so the flow conserves trace(c); log det c
and the von Neumann entropy of c / trace(c) are non-decreasing along it, the
squared distance to the flat metric of the same trace is non-increasing, and
every trajectory converges to that flat metric. The integrator is classical
RK4 with step-doubling error control and a positivity guard; the recorded
trace carries enough diagnostics to audit all of those statements per run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore, torus as torus_mod
from .matcore import FN_TOL, PositivityError, hermitian_part, hs_norm
from .metric import Metric
from .torus import FuzzyTorus

TERMINATIONS = ("converged", "horizon", "step-underflow")


class StepRejected(Exception):
    """A trial step left the safe positive cone; retry with a smaller step."""

    def __init__(self, reason: str, lam_min: float):
        super().__init__(f"step rejected ({reason}): lam_min {lam_min:.3e}")
        self.reason = reason
        self.lam_min = lam_min


@dataclass(frozen=True)
class FlowConfig:
    """Integration controls.

    h_init = None means 1e-3 / |rhs(c0)| clamped to [h_min, h_max]. The guard
    rejects any step whose smallest eigenvalue falls below
    guard * min(flat level, current lam_min): the exact flow keeps eigenvalues
    positive, so a fall past that floor marks a discrete overshoot.
    """

    t0: float = 0.0
    t_max: float = 1000.0
    h_init: float | None = None
    atol: float = 1e-9
    conv_tol: float = 1e-8
    h_min: float = 1e-12
    h_max: float = 1.0
    guard: float = 1e-6

    def __post_init__(self):
        if not self.t_max > self.t0:
            raise ValueError(f"t_max ({self.t_max}) must exceed t0 ({self.t0})")
        for name in ("atol", "conv_tol", "h_min", "h_max", "guard"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.h_min > self.h_max:
            raise ValueError(f"h_min ({self.h_min}) must not exceed h_max ({self.h_max})")
        if self.h_init is not None and not self.h_min <= self.h_init <= self.h_max:
            raise ValueError(
                f"h_init ({self.h_init}) must lie in [h_min, h_max] = "
                f"[{self.h_min}, {self.h_max}]"
            )


@dataclass(frozen=True)
class DiagRecord:
    """Scalar diagnostics of one accepted state."""

    trace_c: float
    log_det_c: float
    entropy: float
    dist_flat: float
    curvature_norm: float
    lambda_min: float
    lambda_max: float
    step_used: float


@dataclass(frozen=True)
class FlowState:
    """Time-stamped metric with curvature and diagnostics."""

    t: float
    metric: Metric
    curvature: np.ndarray
    diag: DiagRecord


@dataclass
class FlowTrace:
    """Result of a flow run: per-step diagnostics plus audit counters.

    `rows` holds (t, DiagRecord) for every accepted state including the
    initial one; full states are kept only when requested. `violations`
    counts accepted steps that moved a monotone quantity the wrong way by
    more than its error allowance (expected to stay zero; see integrate).
    `worst_curvature_pairing` is the largest |trace(c R)| / max(1, |c| |R|)
    seen over recorded states: the curvature has zero average against the
    metric, so this stays at roundoff.
    """

    params: torus_mod.TorusParams
    config: FlowConfig
    c_infinity: float
    initial_metric: Metric | None = None
    termination: str = "horizon"
    rows: list[tuple[float, DiagRecord]] = field(default_factory=list)
    states: list[FlowState] | None = None
    final_state: FlowState | None = None
    violations: dict = field(default_factory=lambda: {"log_det": 0, "entropy": 0, "dist_flat": 0})
    worst_curvature_pairing: float = 0.0
    accepted_steps: int = 0
    rejected_steps: int = 0

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.rows]


def rhs(t: FuzzyTorus, metric: Metric) -> np.ndarray:
    """-laplacian(log c). Hermitian and traceless."""
    return hermitian_part(-torus_mod.laplacian(t, metric.log_mat))


def _rhs_arr(t: FuzzyTorus, c: np.ndarray) -> np.ndarray:
    # hot path used for RK stages; raises PositivityError on overshoot
    return -torus_mod.laplacian(t, matcore.mat_log(c))


def _rk4(t: FuzzyTorus, c: np.ndarray, h: float, k1: np.ndarray | None = None) -> np.ndarray:
    if k1 is None:
        k1 = _rhs_arr(t, c)
    k2 = _rhs_arr(t, c + (0.5 * h) * k1)
    k3 = _rhs_arr(t, c + (0.5 * h) * k2)
    k4 = _rhs_arr(t, c + h * k3)
    return hermitian_part(c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def scalar_curvature(t: FuzzyTorus, metric: Metric) -> np.ndarray:
    """Curvature of the metric: minus the instantaneous rate of log c.

    Equals the derivative of the matrix log at c applied to laplacian(log c),
    by the chain rule along the flow. Hermitian, and trace(c R) vanishes.
    """
    r = matcore.frechet_log(
        metric.mat, torus_mod.laplacian(t, metric.log_mat), eig=metric.eig
    )
    return hermitian_part(r)


def entropy(metric: Metric) -> float:
    """Von Neumann entropy of metric / trace(metric)."""
    lam = metric.eig.eigenvalues / metric.trace
    return float(-np.sum(lam * np.log(lam)))


def curvature_pairing(metric: Metric, curvature: np.ndarray) -> float:
    """|trace(c R)| normalized by max(1, |c| |R|); zero up to roundoff."""
    pairing = abs(np.trace(metric.mat @ curvature).real)
    return pairing / max(1.0, hs_norm(metric.mat) * hs_norm(curvature))


def _diag_record(t: FuzzyTorus, metric: Metric, c_infinity: float,
                 step_used: float) -> tuple[DiagRecord, np.ndarray]:
    curv = scalar_curvature(t, metric)
    rec = DiagRecord(
        trace_c=metric.trace,
        log_det_c=metric.log_det,
        entropy=entropy(metric),
        dist_flat=metric.dist_flat(c_infinity),
        curvature_norm=hs_norm(curv),
        lambda_min=metric.lam_min,
        lambda_max=metric.lam_max,
        step_used=step_used,
    )
    return rec, curv


def make_state(t: FuzzyTorus, time: float, metric: Metric, c_infinity: float | None = None,
               step_used: float = 0.0) -> FlowState:
    """Assemble a FlowState with full diagnostics."""
    cinf = metric.flat_level if c_infinity is None else c_infinity
    rec, curv = _diag_record(t, metric, cinf, step_used)
    return FlowState(t=time, metric=metric, curvature=curv, diag=rec)


def step(t: FuzzyTorus, state: FlowState, h: float, guard: float = 1e-6,
         c_infinity: float | None = None) -> tuple[FlowState, float]:
    """One step of size h: RK4 step-doubling with a positivity guard.

    Propagates the two-half-step solution; the error estimate is the
    step-doubling Richardson value |c_full - c_halves| / 15. Raises
    StepRejected when a stage or the candidate leaves the guarded positive
    cone; error acceptance is the caller's policy.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    metric = state.metric
    cinf = metric.flat_level if c_infinity is None else c_infinity
    c = metric.mat
    try:
        k1 = -torus_mod.laplacian(t, metric.log_mat)
        full = _rk4(t, c, h, k1=k1)
        half = _rk4(t, _rk4(t, c, 0.5 * h, k1=k1), 0.5 * h)
    except PositivityError as exc:
        raise StepRejected("stage positivity", exc.lam_min) from exc
    err = hs_norm(full - half) / 15.0
    eig_new = matcore.eigh(half)
    floor = guard * min(cinf, metric.lam_min)
    if eig_new.lam_min <= floor:
        raise StepRejected("positivity guard", eig_new.lam_min)
    try:
        new_metric = Metric.from_eig(half, eig_new)
    except PositivityError as exc:
        raise StepRejected("positivity floor", exc.lam_min) from exc
    rec, curv = _diag_record(t, new_metric, cinf, h)
    return FlowState(t=state.t + h, metric=new_metric, curvature=curv, diag=rec), err


def integrate(t: FuzzyTorus, c0: Metric, config: FlowConfig | None = None,
              keep_states: bool = False) -> FlowTrace:
    """Run the flow from c0 until convergence, the horizon, or step underflow.

    Steps are accepted when the step-doubling error estimate is at most atol;
    the next step size follows the standard fourth-order controller clamped
    to [h_min, h_max]. Rejected steps are halved; needing a step below h_min
    terminates the run as "step-underflow" (recorded, not raised).
    """
    if config is None:
        config = FlowConfig()
    cinf = c0.flat_level
    trace = FlowTrace(params=t.params, config=config, c_infinity=cinf,
                      initial_metric=c0)
    if keep_states:
        trace.states = []

    def record(state: FlowState) -> None:
        trace.worst_curvature_pairing = max(
            trace.worst_curvature_pairing,
            curvature_pairing(state.metric, state.curvature),
        )
        trace.rows.append((state.t, state.diag))
        if trace.states is not None:
            trace.states.append(state)
        trace.final_state = state

    state = make_state(t, config.t0, c0, cinf)
    record(state)
    prev = state.diag

    if state.diag.dist_flat < config.conv_tol ** 2:
        trace.termination = "converged"
        return trace

    if config.h_init is not None:
        h = config.h_init
    else:
        rhs_norm = hs_norm(rhs(t, c0))
        h = min(config.h_max, max(config.h_min, 1e-3 / max(rhs_norm, 1e-30)))

    while True:
        if state.t >= config.t_max:
            trace.termination = "horizon"
            return trace
        h = min(h, config.t_max - state.t)
        if h < config.h_min:
            # remaining horizon shorter than the smallest allowed step
            trace.termination = "horizon"
            return trace
        try:
            candidate, err = step(t, state, h, guard=config.guard, c_infinity=cinf)
            ok = err <= config.atol
        except StepRejected:
            candidate, err, ok = None, np.inf, False
        if ok:
            state = candidate
            record(state)
            trace.accepted_steps += 1
            # the violation allowance is atol plus the first-order image of
            # an atol-sized state error in each monitored quantity:
            #   |d log det| <= |inv(c)| |dc|,  |dS| <= |log rho| |d rho|,
            #   |d dist|    <= 2 sqrt(dist) |dc|
            rt_n = np.sqrt(state.metric.n)
            allow_ld = config.atol * (1.0 + rt_n / prev.lambda_min)
            max_log = max(abs(np.log(prev.lambda_min / prev.trace_c)),
                          abs(np.log(prev.lambda_max / prev.trace_c)))
            allow_s = config.atol * (1.0 + rt_n * (max_log + 1.0) / prev.trace_c)
            allow_df = config.atol * (1.0 + 2.0 * np.sqrt(prev.dist_flat))
            if state.diag.log_det_c < prev.log_det_c - allow_ld:
                trace.violations["log_det"] += 1
            if state.diag.entropy < prev.entropy - allow_s:
                trace.violations["entropy"] += 1
            if state.diag.dist_flat > prev.dist_flat + allow_df:
                trace.violations["dist_flat"] += 1
            prev = state.diag
            if state.diag.dist_flat < config.conv_tol ** 2:
                trace.termination = "converged"
                return trace
            grow = 0.9 * (config.atol / max(err, 1e-300)) ** 0.2
            h = min(config.h_max, h * min(5.0, max(0.2, grow)))
        else:
            trace.rejected_steps += 1
            h *= 0.5
            if h < config.h_min:
                trace.termination = "step-underflow"
                return trace


def integrate_fixed(t: FuzzyTorus, c0: Metric, h: float, t_end: float,
                    method: str = "rk4") -> Metric:
    """Fixed-step reference integration to t_end (no adaptivity, no guard).

    method is "rk4" or "euler". Used as an independent cross-check of the
    adaptive integrator; Euler shares nothing with the RK4 path beyond the
    right-hand side itself.
    """
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown method {method!r}")
    nsteps = round(t_end / h)
    if abs(nsteps * h - t_end) > 1e-12 * max(1.0, abs(t_end)):
        raise ValueError(f"t_end {t_end} is not an integer multiple of h {h}")
    c = c0.mat.copy()
    if method == "euler":
        for _ in range(nsteps):
            c = hermitian_part(c + h * _rhs_arr(t, c))
    else:
        for _ in range(nsteps):
            c = _rk4(t, c, h)
    return Metric.from_matrix(c)


# --- rate cross-checks ------------------------------------------------------
#
# Both checks integrate a short distance with micro RK4 steps and compare a
# finite-difference rate against the closed-form rate at the probe midpoint.
# The probe length adapts to the stiffness of the state so the comparison
# stays inside the resolvable regime of float64.


def _probe_dt(metric: Metric, lap_norm: float) -> float:
    # keep (dt * fastest local rate) small; the fastest rate is bounded by
    # |laplacian| / lam_min through the derivative of log
    return min(1e-6, 0.05 * metric.lam_min / lap_norm)


def _micro_states(t: FuzzyTorus, metric: Metric, dt: float) -> list[np.ndarray]:
    cs = [metric.mat]
    for _ in range(4):
        cs.append(_rk4(t, cs[-1], 0.5 * dt))
    return cs


def entropy_rate_check(t: FuzzyTorus, metric: Metric, dt: float | None = None
                       ) -> tuple[float, float]:
    """(finite-difference dS/dt, closed-form rate trace(l laplacian(l))).

    Requires a density matrix (unit trace). The finite difference is the
    secant over two micro steps, first-order accurate in dt; when dt is not
    given it adapts to the state's rate of change so the relative agreement
    is a few 1e-5 on states away from the fixed point.
    """
    if abs(metric.trace - 1.0) > FN_TOL * metric.n:
        raise ValueError(f"density matrix required: trace is {metric.trace!r}")
    l = metric.log_mat
    lap_l = torus_mod.laplacian(t, l)
    analytic = float(np.trace(l @ lap_l).real)
    if dt is None:
        # bound on |S''| / S': S'' = 2 trace(l' laplacian l) with l' = -curvature
        rate2 = 2.0 * hs_norm(scalar_curvature(t, metric)) * hs_norm(lap_l)
        lam_est = rate2 / max(analytic, 1e-300)
        dt = min(1e-6, 5e-5 / max(lam_est, 1.0))
    c1 = _rk4(t, metric.mat, dt)
    c2 = _rk4(t, c1, dt)
    s0 = entropy(metric)
    s2 = entropy(Metric.from_matrix(c2))
    numeric = (s2 - s0) / (2.0 * dt)
    return numeric, analytic


def log_det_rate_check(t: FuzzyTorus, metric: Metric, dt: float | None = None,
                       lap_norm: float | None = None) -> tuple[float, float]:
    """(finite-difference d/dt log det c, trace(inv(c) rhs(c))), at the probe midpoint.

    Richardson-extrapolated central differences over four micro steps; the
    closed-form side is evaluated at the midpoint state so both sides refer
    to the same instant.
    """
    if lap_norm is None:
        lap_norm = float(torus_mod.laplacian_spectrum(t)[-1])
    if dt is None:
        dt = _probe_dt(metric, lap_norm)
    cs = _micro_states(t, metric, dt)
    lds = [matcore.log_det(c) for c in cs]
    d_fine = (lds[3] - lds[1]) / dt
    d_coarse = (lds[4] - lds[0]) / (2.0 * dt)
    numeric = (4.0 * d_fine - d_coarse) / 3.0
    mid = Metric.from_matrix(cs[2])
    analytic = float(
        np.trace(matcore.mat_inv(mid.mat, eig=mid.eig) @ rhs(t, mid)).real
    )
    return numeric, analytic


def curvature_fd_check(t: FuzzyTorus, metric: Metric, dt: float | None = None,
                       lap_norm: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(finite-difference curvature, closed-form curvature), at the probe midpoint.

    The finite difference is minus the Richardson-extrapolated central
    derivative of log c along the flow, the defining expression for the
    curvature; the closed-form side is the same derivative taken through
    the divided-difference kernel.
    """
    if lap_norm is None:
        lap_norm = float(torus_mod.laplacian_spectrum(t)[-1])
    if dt is None:
        dt = _probe_dt(metric, lap_norm)
    cs = _micro_states(t, metric, dt)
    logs = [matcore.mat_log(c) for c in cs]
    d_fine = (logs[3] - logs[1]) / dt
    d_coarse = (logs[4] - logs[0]) / (2.0 * dt)
    fd = -(4.0 * d_fine - d_coarse) / 3.0
    closed = scalar_curvature(t, Metric.from_matrix(cs[2]))
    return fd, closed
