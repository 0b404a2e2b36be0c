"""Restarted primal-dual hybrid gradient for the transport LP.

One inner iteration alternates a projected gradient step on the plan with an
extrapolated gradient ascent step on the two dual vectors, all matrix-free.
The outer loop restarts from the better of the current iterate and the
running inner average whenever a KKT-decay condition fires; restarts are what
turn the sublinear base method into a linearly converging one.

Two operating modes:

* ``fixed``: constant step size and primal weight, restart on a fixed decay
  factor ``beta``. This is the analyzed algorithm and what the theory checks
  drive.
* ``adaptive`` (default): the practical bundle - three-condition adaptive
  restarts, a halving/growth step-size line search, and a primal weight
  update at each restart.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .instance import OTProblem
from .kkt import Iterate, kkt_error
from .operator import apply_A, apply_At
from .reports import SolveReport
from .rounding import round_to_feasible

FIXED_BETA = "fixed"
ADAPTIVE = "adaptive"

RELATIVE = "relative"
ABSOLUTE = "absolute"

_STEP_GROWTH = 1.05
_MAX_HALVINGS = 80


@dataclass
class SolverConfig:
    tol: float = 1e-4
    time_limit_s: float = 3600.0
    restart_mode: str = ADAPTIVE
    beta: float = 0.5
    beta_sufficient: float = 0.1
    beta_necessary: float = 0.9
    beta_artificial: float = 0.36
    theta: float = 0.5
    eps_zero: float = 1e-10
    max_iters: int = 1_000_000
    deterministic: bool = False
    kkt_mode: str = RELATIVE
    kkt_stride: int = 1
    eta0: float | None = None  # default 1 / (2 sqrt(m + n))
    omega0: float = 1.0

    def __post_init__(self):
        if self.tol <= 0 or self.time_limit_s <= 0 or self.max_iters < 1:
            raise ValueError("tol, time_limit_s and max_iters must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not 0.0 < self.beta_sufficient < self.beta_necessary < 1.0:
            raise ValueError("need 0 < beta_sufficient < beta_necessary < 1")
        if self.restart_mode not in (FIXED_BETA, ADAPTIVE):
            raise ValueError(f"unknown restart mode {self.restart_mode!r}")
        if self.kkt_mode not in (RELATIVE, ABSOLUTE):
            raise ValueError(f"unknown kkt mode {self.kkt_mode!r}")
        if self.kkt_stride < 1:
            raise ValueError("kkt_stride must be >= 1")
        if self.omega0 <= 0 or (self.eta0 is not None and self.eta0 <= 0):
            raise ValueError("step parameters must be positive")


@dataclass
class StepState:
    """Step-size scale eta and primal weight omega; tau*sigma == eta**2."""

    eta: float
    omega: float

    @property
    def tau(self) -> float:
        return self.eta / self.omega

    @property
    def sigma(self) -> float:
        return self.eta * self.omega


@dataclass
class RestartState:
    outer_index: int
    inner_index: int
    epoch_start: Iterate
    epoch_start_kkt: float
    average: Iterate
    current: Iterate
    total_iterations: int
    restart_lengths: list = field(default_factory=list)


@dataclass
class SolveTrace:
    """Optional per-run recordings for analysis and tests."""

    record_inner: bool = False
    etas: list = field(default_factory=list)
    step_bounds: list = field(default_factory=list)
    candidate_kkts: list = field(default_factory=list)
    omegas: list = field(default_factory=list)
    restart_points: list = field(default_factory=list)
    restart_kkts: list = field(default_factory=list)
    inner_iterates: list = field(default_factory=list)
    inner_averages: list = field(default_factory=list)


def pdhg_step(prob: OTProblem, it: Iterate, tau: float, sigma: float) -> Iterate:
    """One primal-dual step: projected primal descent, extrapolated dual ascent."""
    X_next = it.X - tau * (prob.C - apply_At(it.p, it.q))
    np.maximum(X_next, 0.0, out=X_next)
    extra = 2.0 * X_next - it.X
    rows, cols = apply_A(extra)
    p_next = it.p + sigma * (prob.f - rows)
    q_next = it.q + sigma * (prob.g - cols)
    return Iterate(X_next, p_next, q_next)


def stepsize_bound(it: Iterate, it_next: Iterate, omega: float, eps_zero: float = 1e-10) -> float:
    """Largest admissible step-size scale for the displacement pair.

    Ratio of the omega-weighted squared displacement norm to twice the
    absolute bilinear coupling of the primal and dual displacements;
    infinite when the coupling vanishes.
    """
    dX = it_next.X - it.X
    dp = it_next.p - it.p
    dq = it_next.q - it.q
    numer = omega * float(np.vdot(dX, dX)) + (
        float(np.vdot(dp, dp)) + float(np.vdot(dq, dq))
    ) / omega
    rows, cols = apply_A(dX)
    denom = 2.0 * abs(float(dp @ rows + dq @ cols))
    if denom <= eps_zero:
        return math.inf
    return numer / denom


def adaptive_stepsize(
    it: Iterate,
    it_next: Iterate,
    omega: float,
    eta_current: float,
    eps_zero: float = 1e-10,
) -> float:
    """Line-search step-size update for the displacement (it -> it_next).

    Halves ``eta_current`` until it satisfies the bound, then proposes a mild
    1.05x growth capped by the bound. With an infinite bound (zero coupling)
    eta is returned unchanged. The result never exceeds the bound.
    """
    bound = stepsize_bound(it, it_next, omega, eps_zero)
    if math.isinf(bound):
        return eta_current
    eta = eta_current
    while eta > bound:
        eta *= 0.5
    return min(_STEP_GROWTH * eta, bound)


def primal_weight_update(
    delta_X: float,
    delta_pq: float,
    omega_prev: float,
    theta: float = 0.5,
    eps_zero: float = 1e-10,
) -> float:
    """Log-space smoothing of the dual/primal progress ratio into omega."""
    if omega_prev <= 0:
        raise ValueError("omega_prev must be positive")
    if delta_X > eps_zero and delta_pq > eps_zero:
        return math.exp(theta * math.log(delta_pq / delta_X) + (1.0 - theta) * math.log(omega_prev))
    return omega_prev


def restart_candidate(
    current: Iterate, average: Iterate, prob: OTProblem, scale_R: float
) -> Iterate:
    """The current iterate if its relative KKT error is strictly smaller, else the average."""
    kkt_cur = kkt_error(prob, current, scale_R).relative_composite
    kkt_avg = kkt_error(prob, average, scale_R).relative_composite
    return current if kkt_cur < kkt_avg else average


def should_restart(
    config: SolverConfig,
    candidate_kkt: float,
    epoch_start_kkt: float,
    prev_candidate_kkt: float,
    k: int,
    total_iterations: int,
) -> bool:
    """Restart test on candidate KKT errors.

    Fixed mode fires on a plain ``beta`` decay from the epoch start. Adaptive
    mode fires on sufficient decay, on necessary decay combined with a local
    increase over the previous candidate, or on an inner loop exceeding the
    ``beta_artificial`` fraction of all iterations so far.
    """
    if config.restart_mode == FIXED_BETA:
        return candidate_kkt <= config.beta * epoch_start_kkt
    if candidate_kkt <= config.beta_sufficient * epoch_start_kkt:
        return True
    if (
        candidate_kkt <= config.beta_necessary * epoch_start_kkt
        and candidate_kkt > prev_candidate_kkt
    ):
        return True
    return k >= config.beta_artificial * total_iterations


def default_stepsize(prob: OTProblem) -> float:
    """1 / (2 sqrt(m + n)): half the inverse operator norm."""
    return 1.0 / (2.0 * math.sqrt(prob.m + prob.n))


def _accepted_step(
    prob: OTProblem, it: Iterate, step: StepState, config: SolverConfig, trace: SolveTrace | None
) -> Iterate:
    """Take one step; in adaptive mode retake it with halved eta until accepted."""
    if config.restart_mode != ADAPTIVE:
        if trace is not None:
            trace.etas.append(step.eta)
        return pdhg_step(prob, it, step.tau, step.sigma)
    for _ in range(_MAX_HALVINGS):
        trial = pdhg_step(prob, it, step.tau, step.sigma)
        bound = stepsize_bound(it, trial, step.omega, config.eps_zero)
        if step.eta <= bound:
            if trace is not None:
                trace.etas.append(step.eta)
                trace.step_bounds.append(bound)
            # Accepted: propose mild growth for the next iteration. An
            # infinite bound carries no curvature information, so keep eta.
            if math.isfinite(bound):
                step.eta = min(_STEP_GROWTH * step.eta, bound)
            return trial
        step.eta *= 0.5
    raise RuntimeError("step-size line search failed to find an admissible eta")


def solve(
    prob: OTProblem,
    config: SolverConfig | None = None,
    initial: Iterate | None = None,
    trace: SolveTrace | None = None,
) -> tuple[Iterate, SolveReport]:
    """Run restarted PDHG until the KKT tolerance, iteration, or time limit.

    Returns the final (pre-rounding) iterate together with a report whose
    objective and duality gap are evaluated on the rounded feasible plan.
    On a limit, the best evaluated candidate is returned instead of the last.
    """
    if config is None:
        config = SolverConfig()
    start_time = time.perf_counter()
    m, n = prob.m, prob.n
    it = initial.copy() if initial is not None else Iterate.zeros(m, n)
    step = StepState(eta=config.eta0 if config.eta0 is not None else default_stepsize(prob),
                     omega=config.omega0)
    adaptive = config.restart_mode == ADAPTIVE

    def metric(report):
        return report.relative_composite if config.kkt_mode == RELATIVE else report.composite

    scale_R = max(1.0, it.norm())
    start_report = kkt_error(prob, it, scale_R)
    state = RestartState(
        outer_index=0,
        inner_index=0,
        epoch_start=it.copy(),
        epoch_start_kkt=metric(start_report),
        average=it.copy(),
        current=it,
        total_iterations=0,
    )
    restart_kkts = [state.epoch_start_kkt]
    prev_candidate_kkt = state.epoch_start_kkt
    best = it.copy()
    best_kkt = state.epoch_start_kkt

    termination = None
    if state.epoch_start_kkt <= config.tol:
        termination = "tolerance"

    while termination is None:
        if state.total_iterations >= config.max_iters:
            termination = "iteration_limit"
            it = best
            break
        if time.perf_counter() - start_time > config.time_limit_s:
            termination = "time_limit"
            it = best
            break

        it = _accepted_step(prob, it, step, config, trace)
        state.current = it
        state.total_iterations += 1
        state.inner_index += 1
        k = state.inner_index

        # Uniform running mean of the inner iterates since the last restart.
        state.average.X += (it.X - state.average.X) / k
        state.average.p += (it.p - state.average.p) / k
        state.average.q += (it.q - state.average.q) / k

        nrm = it.norm()
        if not math.isfinite(nrm):
            raise RuntimeError("numerical failure: non-finite iterate")
        scale_R = max(scale_R, nrm)

        if trace is not None and trace.record_inner:
            trace.inner_iterates.append(it.copy())
            trace.inner_averages.append(state.average.copy())

        if k % config.kkt_stride != 0:
            continue

        report_cur = kkt_error(prob, it, scale_R)
        report_avg = kkt_error(prob, state.average, scale_R)
        kkt_cur = metric(report_cur)
        kkt_avg = metric(report_avg)
        if kkt_cur < kkt_avg:
            cand, cand_kkt = it, kkt_cur
        else:
            cand, cand_kkt = state.average, kkt_avg
        if trace is not None:
            trace.candidate_kkts.append(cand_kkt)

        if cand_kkt < best_kkt:
            best = cand.copy()
            best_kkt = cand_kkt
        if cand_kkt <= config.tol:
            it = cand.copy()
            termination = "tolerance"
            break

        if should_restart(config, cand_kkt, state.epoch_start_kkt, prev_candidate_kkt,
                          k, state.total_iterations):
            if adaptive:
                dX = float(np.linalg.norm(cand.X - state.epoch_start.X))
                dpq = float(
                    np.sqrt(
                        np.sum((cand.p - state.epoch_start.p) ** 2)
                        + np.sum((cand.q - state.epoch_start.q) ** 2)
                    )
                )
                step.omega = primal_weight_update(
                    dX, dpq, step.omega, config.theta, config.eps_zero
                )
            it = cand.copy()
            state.restart_lengths.append(k)
            restart_kkts.append(cand_kkt)
            state.outer_index += 1
            state.inner_index = 0
            state.epoch_start = it.copy()
            state.epoch_start_kkt = cand_kkt
            state.average = it.copy()
            state.current = it
            prev_candidate_kkt = cand_kkt
            if trace is not None:
                trace.restart_points.append(it.copy())
                trace.restart_kkts.append(cand_kkt)
                trace.omegas.append(step.omega)
        else:
            prev_candidate_kkt = cand_kkt

    elapsed = time.perf_counter() - start_time
    final_report = kkt_error(prob, it, scale_R)
    X_feas = round_to_feasible(prob, it.X)
    rounded_objective = float(np.vdot(prob.C, X_feas))
    dual_objective = float(prob.f @ it.p + prob.g @ it.q)
    report = SolveReport(
        method="pdot",
        solved=termination == "tolerance",
        wall_time_s=0.0 if config.deterministic else float(elapsed),
        iterations=state.total_iterations,
        restarts=state.outer_index,
        final_relative_kkt=float(final_report.relative_composite),
        rounded_objective=rounded_objective,
        duality_gap=abs(rounded_objective - dual_objective),
        termination_reason=termination,
        config_echo=asdict(config),
        restart_lengths=list(state.restart_lengths),
        restart_kkts=[float(v) for v in restart_kkts],
    )
    return it, report
