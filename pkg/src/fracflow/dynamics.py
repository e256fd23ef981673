"""Flows built from potentials and Hamiltonians, integrated with RK4.

A gradient flow is dx_i/dt = -D^a_{x_i} V; a Hamiltonian flow is
dq_i/dt = D^a_{p_i} H, dp_i/dt = -D^a_{q_i} H.  Integration is plain
fixed-step RK4.  Fractional fields often live only on the open positive
orthant, so a step that leaves the evaluation domain ends the
trajectory cleanly instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .fracderiv import FracOrder, as_order, frac_deriv
from .polyexpr import DomainError, GenPoly, SystemSpec, eval_poly

__all__ = [
    "Trajectory",
    "build_gradient_flow",
    "build_hamiltonian_flow",
    "diagnostics",
    "integrate",
]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution: times, states (len(times) x nvars), optional
    named diagnostic series, and the exit time if the domain was left."""

    times: np.ndarray
    states: np.ndarray
    diagnostics: Mapping[str, np.ndarray] = field(default_factory=dict)
    domain_exit: float | None = None


def _default_names(n: int) -> tuple[str, ...]:
    if n <= 3:
        return ("x", "y", "z")[:n]
    return tuple(f"x{i + 1}" for i in range(n))


def build_gradient_flow(
    v: GenPoly, order: "FracOrder | float", var_names: Sequence[str] | None = None
) -> SystemSpec:
    """System dx_i/dt = -D^a_{x_i} V."""
    o = as_order(order)
    names = tuple(var_names) if var_names is not None else _default_names(v.nvars)
    rhs = tuple(-frac_deriv(v, i, o) for i in range(v.nvars))
    return SystemSpec(names, {}, o, rhs)


def build_hamiltonian_flow(
    h: GenPoly, order: "FracOrder | float", var_names: Sequence[str] | None = None
) -> SystemSpec:
    """Phase system dq_i/dt = D^a_{p_i} H, dp_i/dt = -D^a_{q_i} H."""
    if h.nvars % 2:
        raise ValueError("a Hamiltonian needs an even number of variables (q..., p...)")
    o = as_order(order)
    n = h.nvars // 2
    if var_names is not None:
        names = tuple(var_names)
    elif n == 1:
        names = ("q", "p")
    else:
        names = tuple(f"q{i + 1}" for i in range(n)) + tuple(f"p{i + 1}" for i in range(n))
    rhs = tuple(frac_deriv(h, n + i, o) for i in range(n)) + tuple(
        -frac_deriv(h, i, o) for i in range(n)
    )
    return SystemSpec(names, {}, o, rhs, phase_split=True)


def integrate(
    sys: SystemSpec,
    x0: Sequence[float],
    t_end: float,
    h: float,
    watch: Mapping[str, GenPoly] | None = None,
) -> Trajectory:
    """Fixed-step RK4 from x0 to t_end.

    If any stage evaluation leaves the field's domain the trajectory is
    returned up to the last completed step with ``domain_exit`` set to
    the start time of the failed step.  A domain error already at x0
    raises instead.
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")
    n_steps = round(t_end / h)
    if n_steps < 1 or abs(t_end / h - n_steps) > 1e-9 * n_steps:
        raise ValueError("t_end must be a positive integer multiple of h")
    state = [float(c) for c in x0]
    if len(state) != sys.nvars:
        raise ValueError(f"x0 has {len(state)} coordinates, expected {sys.nvars}")

    rhs = sys.rhs

    def f(y: list[float]) -> list[float]:
        return [eval_poly(r, y) for r in rhs]

    f(state)  # immediate domain error at x0 propagates

    states = [list(state)]
    times = [0.0]
    exit_t: float | None = None
    for k in range(n_steps):
        t = k * h
        y = states[-1]
        try:
            k1 = f(y)
            k2 = f([yi + 0.5 * h * ki for yi, ki in zip(y, k1)])
            k3 = f([yi + 0.5 * h * ki for yi, ki in zip(y, k2)])
            k4 = f([yi + h * ki for yi, ki in zip(y, k3)])
        except DomainError:
            exit_t = t
            break
        nxt = [
            yi + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
        ]
        states.append(nxt)
        times.append((k + 1) * h)

    traj = Trajectory(np.array(times), np.array(states), {}, exit_t)
    if watch:
        series = {name: diagnostics(traj, g) for name, g in watch.items()}
        traj = Trajectory(traj.times, traj.states, series, exit_t)
    return traj


def diagnostics(traj: Trajectory, f: GenPoly) -> np.ndarray:
    """Evaluate f along the trajectory, aligned with traj.times."""
    out = np.empty(len(traj.times))
    for i, row in enumerate(traj.states):
        try:
            out[i] = eval_poly(f, row)
        except DomainError as exc:
            raise ValueError(f"diagnostic undefined at sample {i} (t={traj.times[i]})") from exc
    return out
