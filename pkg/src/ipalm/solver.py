"""Inertial proximal alternating linearized minimization: the outer loop.

Each outer iteration sweeps the blocks in order.  For block ``i`` it forms
two extrapolated points from the last two iterates -- the prox anchor
``y_i = x_i + alpha*(x_i - x_i_prev)`` and the gradient point
``z_i = x_i + beta*(x_i - x_i_prev)`` -- evaluates the partial gradient of
the smooth part at the mixed point (already-updated blocks before ``i``,
``z_i`` in slot ``i``, not-yet-updated blocks after), and applies the block's
proximal map to ``y_i - grad/tau``.  With ``alpha = beta = 0`` the sweep is
exactly the non-inertial alternating proximal-gradient method.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .blockmodel import (
    BlockVector,
    InertialParams,
    ProblemSpec,
    extrapolate,
    step_deltas,
)
from .lipschitz import BacktrackState, backtrack_L
from .schedules import (
    Dynamic,
    ScheduleKind,
    StaticConvex,
    inertial_coeffs,
    tau_for_delta,
    tau_step,
)

TRACE_COLUMNS = (
    "k,F,Psi,delta1,delta2,L1,L2,tau1,tau2,alpha1,alpha2,beta1,beta2,"
    "step_norm,seconds"
)


class DivergenceError(RuntimeError):
    """An iterate left the floating-point range; carries the finite trace."""

    def __init__(self, message: str, trace: "SolverTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass
class TraceRow:
    """One per-iteration record.  Row ``k`` describes the step into iterate
    ``x^k``: ``block_deltas[i] = 0.5*||x_i^k - x_i^{k-1}||^2``."""

    k: int
    F: float
    Psi: Optional[float]
    delta: Optional[tuple]
    L: Optional[tuple]
    tau: Optional[tuple]
    alpha: Optional[tuple]
    beta: Optional[tuple]
    block_deltas: tuple
    step_norm: float
    seconds: float
    bt_tested: Optional[tuple] = None


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.17g}"


@dataclass
class SolverTrace:
    """Complete run record: one row per iteration plus the initial point."""

    rows: List[TraceRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, k: int) -> TraceRow:
        return self.rows[k]

    def f_values(self) -> np.ndarray:
        return np.array([r.F for r in self.rows])

    def step_norms(self) -> np.ndarray:
        return np.array([r.step_norm for r in self.rows])

    def block_delta_matrix(self) -> np.ndarray:
        """(iterations+1) x num_blocks matrix of half squared block steps."""
        return np.array([r.block_deltas for r in self.rows])

    def psi_values(self, deltas: Sequence[float]) -> np.ndarray:
        """Lyapunov values recomputed with the given constant step weights."""
        d = np.asarray(deltas, dtype=np.float64)
        return np.array([r.F + float(d @ np.asarray(r.block_deltas)) for r in self.rows])

    def max_block_L(self) -> np.ndarray:
        """Per-block maximum of the recorded Lipschitz moduli."""
        vals = [r.L for r in self.rows if r.L is not None]
        if not vals:
            raise ValueError("trace holds no Lipschitz records")
        return np.max(np.array(vals), axis=0)

    def params_at(self, k: int) -> InertialParams:
        """Validated per-block parameters of iteration ``k >= 1``."""
        row = self.rows[k]
        if row.alpha is None:
            raise ValueError(f"row {k} records no iteration parameters")
        return InertialParams(
            alpha=row.alpha, beta=row.beta, tau=row.tau, delta=row.delta, L=row.L
        )

    def to_csv(self, path) -> None:
        """Write the trace in the fixed column layout, 17 significant digits.

        The layout expands per-block columns for two blocks; traces with a
        different block count expand the same groups to their block count.
        """
        nb = len(self.rows[0].block_deltas) if self.rows else 2
        if nb == 2:
            header = TRACE_COLUMNS
        else:
            groups = ["delta", "L", "tau", "alpha", "beta"]
            cols = ["k", "F", "Psi"]
            for g in groups:
                cols += [f"{g}{i + 1}" for i in range(nb)]
            cols += ["step_norm", "seconds"]
            header = ",".join(cols)
        lines = [header]
        for r in self.rows:
            cells = [str(r.k), _fmt(r.F), _fmt(r.Psi)]
            for group in (r.delta, r.L, r.tau, r.alpha, r.beta):
                if group is None:
                    cells += [""] * nb
                else:
                    cells += [_fmt(v) for v in group]
            cells += [_fmt(r.step_norm), _fmt(r.seconds)]
            lines.append(",".join(cells))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class SolverState:
    """Mutable per-run state: current and previous iterates plus schedule."""

    x_cur: BlockVector
    x_prev: BlockVector
    k: int
    kinds: tuple
    backtrack: Optional[tuple] = None  # per-block BacktrackState or None
    step_scale: Optional[tuple] = None  # per-block tau multiplier >= 1
    constant_delta: Optional[tuple] = None  # per-block constant step weight
    trace: SolverTrace = field(default_factory=SolverTrace)
    t0: float = field(default_factory=time.perf_counter)

    def __post_init__(self):
        nb = len(self.x_cur)
        if self.step_scale is None:
            self.step_scale = (1.0,) * nb
        for c in self.step_scale:
            if c < 1.0:
                raise ValueError(f"step scale must be >= 1, got {c}")
        if len(self.kinds) != nb:
            raise ValueError("one schedule kind per block required")


def lyapunov_psi(
    x_cur: BlockVector,
    x_prev: BlockVector,
    delta: Sequence[float],
    problem: ProblemSpec,
) -> float:
    """``F(x_cur) + sum_i (delta_i/2)*||x_cur_i - x_prev_i||^2``."""
    d = np.asarray(delta, dtype=np.float64)
    if (d < 0).any():
        raise ValueError("step weights must be >= 0")
    return float(problem.eval_F(x_cur)) + float(d @ step_deltas(x_cur, x_prev))


def _step_params(kind: ScheduleKind, alpha, beta, L, const_delta):
    """(tau, delta) honoring a constant step weight when one is pinned."""
    if const_delta is not None and not isinstance(kind, Dynamic):
        tau = tau_for_delta(
            alpha, beta, const_delta, L, kind.eps, convex=isinstance(kind, StaticConvex)
        )
        return tau, const_delta
    return tau_step(alpha, beta, L, kind)


def initial_trace_row(problem: ProblemSpec, x0: BlockVector) -> TraceRow:
    F0 = float(problem.eval_F(x0))
    nb = len(x0)
    return TraceRow(
        k=0,
        F=F0,
        Psi=F0,
        delta=None,
        L=None,
        tau=None,
        alpha=None,
        beta=None,
        block_deltas=(0.0,) * nb,
        step_norm=0.0,
        seconds=0.0,
    )


def ipalm_iterate(state: SolverState, problem: ProblemSpec) -> SolverState:
    """Advance the state by one full sweep over the blocks (in place)."""
    k = state.k + 1
    x_cur, x_prev = state.x_cur, state.x_prev
    mixed_blocks = list(x_cur.blocks)
    alphas, betas, taus, deltas_used, Ls = [], [], [], [], []
    bt_tested: list = []

    for i in range(problem.num_blocks):
        kind = state.kinds[i]
        alpha, beta = inertial_coeffs(kind, k)
        y = extrapolate(x_cur, x_prev, alpha, i)
        z = extrapolate(x_cur, x_prev, beta, i)
        mixed_blocks[i] = z
        mixed = BlockVector(mixed_blocks)
        grad = problem.partial_grad(i, mixed)
        scale = state.step_scale[i]
        const_delta = None if state.constant_delta is None else state.constant_delta[i]

        bt_state = None if state.backtrack is None else state.backtrack[i]
        if bt_state is None:
            if problem.lipschitz is None:
                raise ValueError(
                    f"block {i}: no exact Lipschitz rule and no backtracking state"
                )
            L = float(problem.lipschitz(i, mixed))
            tau, delta = _step_params(kind, alpha, beta, L, const_delta)
            tau = tau * scale
            x_new = problem.prox(i, tau, y - grad / tau)
            tested = None
        else:

            def candidate(L_test, _y=y, _grad=grad, _i=i, _kind=kind, _a=alpha, _b=beta):
                t, _ = _step_params(_kind, _a, _b, L_test, const_delta)
                t = t * scale
                return problem.prox(_i, t, _y - _grad / t)

            def h_eval(block_value, _i=i, _mixed_blocks=mixed_blocks):
                parts = list(_mixed_blocks)
                parts[_i] = block_value
                return problem.eval_H(BlockVector(parts))

            L, x_new, tested = backtrack_L(h_eval, grad, z, candidate, bt_state)
            tau, delta = _step_params(kind, alpha, beta, L, const_delta)
            tau = tau * scale

        if not np.isfinite(x_new).all():
            raise DivergenceError(
                f"non-finite values in block {i} at iteration {k}", state.trace
            )
        mixed_blocks[i] = x_new
        alphas.append(alpha)
        betas.append(beta)
        taus.append(tau)
        deltas_used.append(delta)
        Ls.append(L)
        if tested is not None:
            bt_tested.extend(tested)

    x_next = BlockVector(mixed_blocks)
    bdeltas = step_deltas(x_next, x_cur)
    F = float(problem.eval_F(x_next))
    if not math.isfinite(F):
        raise DivergenceError(f"non-finite objective at iteration {k}", state.trace)
    if any(math.isnan(d) for d in deltas_used):
        psi = None
    else:
        psi = F + float(np.asarray(deltas_used) @ bdeltas)
    state.trace.rows.append(
        TraceRow(
            k=k,
            F=F,
            Psi=psi,
            delta=tuple(deltas_used),
            L=tuple(Ls),
            tau=tuple(taus),
            alpha=tuple(alphas),
            beta=tuple(betas),
            block_deltas=tuple(bdeltas),
            step_norm=float(np.sqrt(2.0 * bdeltas.sum())),
            seconds=time.perf_counter() - state.t0,
        )
    )
    state.x_prev = x_cur
    state.x_cur = x_next
    state.k = k
    return state


def make_state(
    problem: ProblemSpec,
    x0: BlockVector,
    kinds,
    backtracking: bool = False,
    bt_growth: float = 2.0,
    bt_shrink: float = 0.5,
    bt_max_rounds: int = 60,
    bt_L0: float = 1.0,
    step_scale=None,
    constant_delta=None,
) -> SolverState:
    """Assemble a fresh solver state with the first step inertia-free
    (the predecessor of the starting point is the starting point itself)."""
    nb = len(x0)
    if isinstance(kinds, (StaticConvex, Dynamic)) or not isinstance(kinds, (tuple, list)):
        kinds = (kinds,) * nb
    bt = None
    if backtracking:
        bt = tuple(
            BacktrackState(
                L_current=bt_L0,
                growth=bt_growth,
                shrink=bt_shrink,
                max_rounds=bt_max_rounds,
            )
            for _ in range(nb)
        )
    state = SolverState(
        x_cur=x0,
        x_prev=x0,
        k=0,
        kinds=tuple(kinds),
        backtrack=bt,
        step_scale=None if step_scale is None else tuple(step_scale),
        constant_delta=None if constant_delta is None else tuple(constant_delta),
    )
    state.trace.rows.append(initial_trace_row(problem, x0))
    state.trace.meta["heuristic"] = any(isinstance(kd, Dynamic) for kd in state.kinds)
    if state.trace.meta["heuristic"]:
        state.trace.meta["mode_note"] = (
            "heuristic mode: dynamic coefficients lie outside the descent theory"
        )
    return state


def run_state(state: SolverState, problem: ProblemSpec, iters: int, tol: float) -> SolverTrace:
    """Drive an assembled state for ``iters`` sweeps or until the relative
    step criterion ``||x_new - x|| <= tol*(1 + ||x||)`` fires."""
    if iters < 1:
        raise ValueError(f"iteration budget must be >= 1, got {iters}")
    for _ in range(iters):
        ref = math.sqrt(state.x_cur.norm_sq())
        ipalm_iterate(state, problem)
        if state.trace.rows[-1].step_norm <= tol * (1.0 + ref):
            break
    state.trace.meta["iterations"] = state.k
    return state.trace


def run(problem: ProblemSpec, x0: BlockVector, config) -> SolverTrace:
    """Run the solver as described by a ``RunConfig``; see `ipalm.config`."""
    from .config import block_kinds  # local import: config depends on solver types

    kinds = block_kinds(problem, config)
    state = make_state(
        problem,
        x0,
        kinds,
        backtracking=config.backtrack,
        bt_growth=config.bt_growth,
        bt_shrink=config.bt_shrink,
        bt_max_rounds=config.bt_max_rounds,
        bt_L0=config.bt_l0,
        step_scale=config.resolved_step_scale(len(x0)),
        constant_delta=config.constant_delta,
    )
    state.trace.meta.update(
        {
            "schedule": config.schedule,
            "alpha_bar": config.alpha_bar,
            "beta_bar": config.beta_bar,
            "epsilon": config.epsilon,
            "seed": config.seed,
            "problem": problem.name,
        }
    )
    return run_state(state, problem, config.iters, config.tol)
