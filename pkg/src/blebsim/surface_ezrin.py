"""Membrane Ezrin evolution on the outer boundary curve.

Semi-implicit P2 scheme: advection and diffusion are implicit, the reaction
is evaluated at the previous step,

    (M/dt - A + eps S) U^{k+1} = M U^k / dt - M^d 1 + M^a 1.

The flow trace enters ``A`` only, and is frozen during a run.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem2d import (
    FESpace,
    SolverError,
    assemble_mass,
    assemble_stiffness,
    assemble_surface_advection,
    surface_p2_space,
)
from .fem2d.quadrature import SEG_POINTS
from .kinetics import KineticsParams, adsorption, classify_phases, desorption
from .mesh import SurfaceMesh

log = logging.getLogger(__name__)

STEADY_TOL = 1e-4
STEADY_WINDOW = 20


@dataclass(frozen=True)
class TimeSteppingConfig:
    final_time: float = 1.0
    num_steps: int = 1000
    epsilon: float = 0.002
    snapshot_stride: int = 25
    rng_seed: int = 0
    reaction: bool = True
    steady_tol: float = STEADY_TOL
    steady_window: int = STEADY_WINDOW

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.final_time > 0:
            raise ValueError("final_time must be > 0")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def dt(self) -> float:
        return self.final_time / self.num_steps


@dataclass(frozen=True, eq=False)
class EzrinState:
    space: FESpace
    U: np.ndarray
    t: float = 0.0
    k: int = 0
    total_mass: float = math.nan

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.shape != (self.space.dof_count,):
            raise ValueError(f"coefficient vector has shape {U.shape}, expected ({self.space.dof_count},)")
        object.__setattr__(self, "U", U)
        if math.isnan(self.total_mass):
            object.__setattr__(self, "total_mass", self.space.integrate(U))

    @property
    def surface(self) -> SurfaceMesh:
        return self.space.mesh

    @property
    def min_u(self) -> float:
        return float(self.U.min())

    @property
    def max_u(self) -> float:
        return float(self.U.max())


def initial_condition_random(surface: SurfaceMesh | FESpace, seed: int) -> EzrinState:
    space = surface if isinstance(surface, FESpace) else surface_p2_space(surface)
    rng = np.random.default_rng(seed)
    return EzrinState(space, rng.uniform(0.0, 1.0, size=space.dof_count))


def constant_state(surface: SurfaceMesh | FESpace, value: float) -> EzrinState:
    space = surface if isinstance(surface, FESpace) else surface_p2_space(surface)
    return EzrinState(space, np.full(space.dof_count, float(value)))


class SurfaceStepper:
    """Holds the factorized step matrix for one (trace, config, params) triple."""

    def __init__(self, space: FESpace, trace, config: TimeSteppingConfig, params: KineticsParams):
        self.space = space
        self.config = config
        self.params = params
        trace = np.asarray(trace, dtype=float)
        if trace.ndim == 0:
            trace = np.full(space.dof_count, float(trace))
        if trace.shape != (space.dof_count,):
            raise ValueError(f"trace has {trace.shape[0]} values, expected {space.dof_count}")
        self.trace = trace
        self.speed_q = np.abs(space.at_quadrature(trace))
        # the reaction is explicit: its linearization is stable while
        # dt * max|dR/du| <= 2, and dR/du is bounded by C1|w| + C2 + C3 on [0, 1]
        self.stability_number = config.dt * (params.C1 * float(self.speed_q.max(initial=0.0)) + params.C2 + params.C3)
        if config.reaction and self.stability_number > 2:
            log.warning("explicit reaction step may be unstable: dt * (C1 max|w| + C2 + C3) = %.3g > 2; "
                        "increase num_steps", self.stability_number)
        self.M = assemble_mass(space)
        self.S = assemble_stiffness(space)
        self.A = assemble_surface_advection(space, trace)
        dt = config.dt
        self.matrix = sp.csc_matrix(self.M / dt - self.A + config.epsilon * self.S)
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as err:
            raise SolverError(f"step matrix is singular ({err}); reduce the time step") from None

    def reaction_load(self, U: np.ndarray) -> np.ndarray:
        """``int (a(u,1) - d(|w|,u)) phi_i`` with ``u`` and ``w`` at the quadrature points."""
        ed = self.space.element_data
        uq = self.space.at_quadrature(U)
        rate = adsorption(uq, 1.0, self.params) - desorption(self.speed_q, uq, self.params)
        local = np.einsum("cq,cq,qi->ci", ed.weights, rate, ed.phi)
        return np.bincount(self.space.cell_dofs.ravel(), local.ravel(), minlength=self.space.dof_count)

    def step(self, state: EzrinState) -> EzrinState:
        dt = self.config.dt
        rhs = self.M @ state.U / dt
        if self.config.reaction:
            rhs += self.reaction_load(state.U)
        U = self._lu.solve(rhs)
        if not np.all(np.isfinite(U)):
            raise SolverError(f"non-finite solution at step {state.k + 1}; reduce the time step")
        if state.k == 0:
            res = np.linalg.norm(self.matrix @ U - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
            if res > 1e-8:
                raise SolverError("step solve is inaccurate; reduce the time step", res)
        return EzrinState(self.space, U, state.t + dt, state.k + 1, float(np.sum(self.M @ U)))


def step(state: EzrinState, trace, config: TimeSteppingConfig, params: KineticsParams = KineticsParams()):
    """Single step; builds a fresh stepper, so use :func:`run` for long runs."""
    return SurfaceStepper(state.space, trace, config, params).step(state)


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)  # (step, time, U)
    diagnostics: list = field(default_factory=list)  # dict per step
    steady_state_flag: bool = False
    steady_time: float | None = None
    final: EzrinState | None = None

    def write_csv(self, path) -> None:
        space = self.final.space
        s = space.mesh.dof_arclength
        order = np.argsort(s, kind="stable")
        s_sorted = s[order].tolist()
        rows = ["step,time,arclength,u"]
        for k, t, U in self.snapshots:
            rows += [f"{k},{float(t)!r},{si!r},{ui!r}" for si, ui in zip(s_sorted, U[order].tolist())]
        Path(path).write_text("\n".join(rows) + "\n")

    def write_diagnostics(self, path) -> None:
        rows = ["step,time,mass,min_u,max_u,residual"]
        rows += [f"{d['step']},{float(d['time'])!r},{float(d['mass'])!r},{float(d['min_u'])!r},"
                 f"{float(d['max_u'])!r},{float(d['residual'])!r}"
                 for d in self.diagnostics]
        Path(path).write_text("\n".join(rows) + "\n")


def run(surface: SurfaceMesh | FESpace, trace, config: TimeSteppingConfig, initial: EzrinState | None = None,
        params: KineticsParams = KineticsParams(), callback=None) -> Trajectory:
    """Advance ``config.num_steps`` steps and record snapshots and per-step diagnostics.

    The steady-state flag is raised once ``||U^{k+1} - U^k||_inf / dt`` stays
    below ``config.steady_tol`` for ``config.steady_window`` consecutive steps.
    """
    if initial is None:
        initial = initial_condition_random(surface, config.rng_seed)
    stepper = SurfaceStepper(initial.space, trace, config, params)
    state = initial
    traj = Trajectory()
    traj.snapshots.append((0, 0.0, state.U.copy()))
    traj.diagnostics.append(dict(step=0, time=0.0, mass=state.total_mass, min_u=state.min_u,
                                 max_u=state.max_u, residual=0.0))
    quiet = 0
    for _ in range(config.num_steps):
        new = stepper.step(state)
        residual = float(np.max(np.abs(new.U - state.U))) / config.dt
        state = new
        traj.diagnostics.append(dict(step=state.k, time=state.t, mass=state.total_mass, min_u=state.min_u,
                                     max_u=state.max_u, residual=residual))
        quiet = quiet + 1 if residual < config.steady_tol else 0
        if quiet >= config.steady_window and not traj.steady_state_flag:
            traj.steady_state_flag = True
            traj.steady_time = state.t
        if state.k % config.snapshot_stride == 0 or state.k == config.num_steps:
            traj.snapshots.append((state.k, state.t, state.U.copy()))
        if callback is not None:
            callback(state)
    traj.final = state
    return traj


# -- polarization metrics ---------------------------------------------------

DEPLETED_LEVEL = 0.1


def _periodic_crossings(s, u, level, perimeter):
    """Arclength positions where the periodic piecewise-linear profile crosses ``level``."""
    s_next = np.append(s[1:], s[0] + perimeter)
    u_next = np.roll(u, -1)
    a, b = u - level, u_next - level
    hit = (a < 0) != (b < 0)
    frac = a[hit] / (a[hit] - b[hit])
    return np.sort((s[hit] + frac * (s_next[hit] - s[hit])) % perimeter)


def _arc_distance(x, y, perimeter):
    d = np.abs(x - y) % perimeter
    return np.minimum(d, perimeter - d)


def polarization_metrics(state: EzrinState, *, direction=(1.0, 0.0), params: KineticsParams = KineticsParams()) -> dict:
    """Front/back quarter means, depleted fraction and interface statistics.

    The front quarter is the quarter of arclength centred on the boundary
    point furthest along ``direction``; the back quarter is centred on the
    opposite extreme.  Interfaces are crossings of the mid-level between
    the Ezrin-poor (0) and Ezrin-rich phase values.
    """
    space = state.space
    surf = space.mesh
    ed = space.element_data
    P = surf.perimeter
    uq = space.at_quadrature(state.U).ravel()
    wq = ed.weights.ravel()
    seg_start = surf.arclength_coords[:, None]
    length = surf.segment_lengths[:, None]
    sq = (seg_start + SEG_POINTS[None, :] * length).ravel()

    d = np.asarray(direction, dtype=float)
    proj = surf.nodes @ d
    s_front = surf.arclength_coords[int(np.argmax(proj))]
    s_back = surf.arclength_coords[int(np.argmin(proj))]

    def quarter_mean(center):
        sel = _arc_distance(sq, center, P) <= P / 8
        return float(np.sum(uq[sel] * wq[sel]) / np.sum(wq[sel]))

    depleted = float(np.sum(wq[uq < DEPLETED_LEVEL]) / np.sum(wq))

    rich = max(classify_phases(0.0, params).stable_roots)
    s = surf.dof_arclength
    order = np.argsort(s, kind="stable")
    s_sorted, u_sorted = s[order], state.U[order]
    mids = _periodic_crossings(s_sorted, u_sorted, 0.5 * rich, P)
    widths = []
    if len(mids):
        lo = _periodic_crossings(s_sorted, u_sorted, 0.1 * rich, P)
        hi = _periodic_crossings(s_sorted, u_sorted, 0.9 * rich, P)
        if len(lo) and len(hi):
            for m in mids:
                widths.append(float(np.min(_arc_distance(lo, m, P)) + np.min(_arc_distance(hi, m, P))))
    front, back = quarter_mean(s_front), quarter_mean(s_back)
    return {
        "front_mean": front,
        "back_mean": back,
        "back_front_ratio": back / front if front > 0 else math.inf,
        "depleted_fraction": depleted,
        "interface_count": int(len(mids)),
        "interface_width_measured": float(np.mean(widths)) if widths else math.nan,
        "mean_u": float(np.sum(uq * wq) / np.sum(wq)),
    }
