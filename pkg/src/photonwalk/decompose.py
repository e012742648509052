"""Factor a unitary into two-mode mixing cells plus output phases.

Each cell acts on modes ``(i, j)`` with the block::

    T(theta, phi) = [[exp(i phi) cos(theta), -sin(theta)],
                     [exp(i phi) sin(theta),  cos(theta)]]

``phi`` is the internal phase of a tunable Mach-Zehnder cell and ``theta``
sets its splitting ratio.  Plans list cells in the order light meets them,
so ``reconstruct`` returns ``diag(exp(i*diag)) @ T_last @ ... @ T_first``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .linalg import DEFAULT_EQ_TOL, as_cmatrix, unitarity_residual

__all__ = [
    "Model",
    "GivensStep",
    "DecompositionPlan",
    "NotUnitaryError",
    "cell_block",
    "reck_decompose",
    "clements_decompose",
    "reconstruct",
    "mesh_report",
    "plan_to_dict",
    "plan_from_dict",
]


class Model(str, Enum):
    RECK = "reck"
    CLEMENTS = "clements"


class NotUnitaryError(ValueError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"input is not unitary: max|U^dagger U - I| = {residual:.3e} exceeds {tol:.1e}")
        self.residual = residual


@dataclass(frozen=True)
class GivensStep:
    i: int
    j: int
    theta: float
    phi: float

    def __post_init__(self):
        if not 0 <= self.i < self.j:
            raise ValueError(f"cell modes must satisfy 0 <= i < j, got ({self.i}, {self.j})")


@dataclass(frozen=True)
class DecompositionPlan:
    kind: Model
    n: int
    steps: tuple[GivensStep, ...]
    diag: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("plan dimension must be positive")
        if len(self.diag) != self.n:
            raise ValueError(f"plan needs {self.n} output phases, got {len(self.diag)}")
        if len(self.steps) != self.n * (self.n - 1) // 2:
            raise ValueError(f"plan for N={self.n} needs {self.n * (self.n - 1) // 2} cells, got {len(self.steps)}")
        for s in self.steps:
            if s.j >= self.n:
                raise ValueError(f"cell ({s.i}, {s.j}) out of range for N={self.n}")


def cell_block(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([[e * c, -s], [e * s, c]], dtype=np.complex128)


def _embed(n: int, step: GivensStep) -> np.ndarray:
    m = np.eye(n, dtype=np.complex128)
    idx = np.ix_([step.i, step.j], [step.i, step.j])
    m[idx] = cell_block(step.theta, step.phi)
    return m


def _apply_right_inverse(m: np.ndarray, step: GivensStep) -> None:
    """m <- m @ T^dagger, in place, touching only columns i and j."""
    t = cell_block(step.theta, step.phi).conj().T
    cols = m[:, [step.i, step.j]]
    m[:, [step.i, step.j]] = cols @ t


def _apply_left(m: np.ndarray, step: GivensStep) -> None:
    t = cell_block(step.theta, step.phi)
    rows = m[[step.i, step.j], :]
    m[[step.i, step.j], :] = t @ rows


def _null_angles(a: complex, b: complex) -> tuple[float, float]:
    """theta, phi with tan(theta) exp(i phi) = a / b."""
    theta = math.atan2(abs(a), abs(b))
    phi = float(np.angle(a) - np.angle(b)) if abs(a) > 0 else 0.0
    return theta, _wrap(phi)


def _wrap(x: float) -> float:
    return float(math.remainder(x, 2 * math.pi))


def _checked(u, tol: float) -> np.ndarray:
    u = as_cmatrix(u)
    if u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    res = unitarity_residual(u)
    if res > tol:
        raise NotUnitaryError(res, tol)
    return u


def reck_decompose(u, tol: float = DEFAULT_EQ_TOL) -> DecompositionPlan:
    """Triangular factorisation by nulling one row at a time from the bottom.

    Row ``c`` is cleared right to left by mixing column ``k`` into the pivot
    column ``c``; for N=3 this gives the cells (2,3), (1,3), (1,2) in that
    order, for N=4 (3,4), (2,4), (1,4), (2,3), (1,3), (1,2) (1-based).
    """
    m = _checked(u, tol).copy()
    n = m.shape[0]
    steps: list[GivensStep] = []
    for c in range(n - 1, 0, -1):
        for k in range(c - 1, -1, -1):
            theta, phi = _null_angles(m[c, k], m[c, c])
            step = GivensStep(k, c, theta, phi)
            _apply_right_inverse(m, step)
            m[c, k] = 0.0
            steps.append(step)
    diag = tuple(float(np.angle(m[k, k])) for k in range(n))
    return DecompositionPlan(Model.RECK, n, tuple(steps), diag)


def clements_decompose(u, tol: float = DEFAULT_EQ_TOL) -> DecompositionPlan:
    """Rectangular factorisation nulling anti-diagonals from both sides."""
    m = _checked(u, tol).copy()
    n = m.shape[0]
    right: list[GivensStep] = []
    left: list[GivensStep] = []
    for i in range(n - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                r, col = n - 1 - j, i - j
                theta, phi = _null_angles(m[r, col], m[r, col + 1])
                step = GivensStep(col, col + 1, theta, phi)
                _apply_right_inverse(m, step)
                m[r, col] = 0.0
                right.append(step)
        else:
            for j in range(i + 1):
                r, col = n - 1 - i + j, j
                theta, phi = _null_angles(-m[r, col], m[r - 1, col])
                step = GivensStep(r - 1, r, theta, phi)
                _apply_left(m, step)
                m[r, col] = 0.0
                left.append(step)
    # m = L_k..L_1 U R_1^+..R_p^+ is diagonal, so U = L_1^+..L_k^+ D R_p..R_1.
    # Push each L^+ through D: T^+ D = D' T' with the same theta.
    d = np.diag(m).copy()
    moved: list[GivensStep] = []
    for step in reversed(left):
        d1, d2 = d[step.i], d[step.j]
        new_phi = _wrap(float(np.angle(d1) - np.angle(d2)) + math.pi)
        d[step.i] = -np.exp(-1j * step.phi) * d2
        moved.append(GivensStep(step.i, step.j, step.theta, new_phi))
    # U = D T'_1 .. T'_k R_p .. R_1: light meets R_1 first, T'_1 last.
    steps = tuple(right) + tuple(moved)
    diag = tuple(float(np.angle(x)) for x in d)
    return DecompositionPlan(Model.CLEMENTS, n, steps, diag)


def reconstruct(plan: DecompositionPlan) -> np.ndarray:
    n = plan.n
    m = np.eye(n, dtype=np.complex128)
    for step in plan.steps:
        m = _embed(n, step) @ m
    return np.exp(1j * np.asarray(plan.diag))[:, None] * m


def _exit_depths(n: int, steps: Iterable[GivensStep]) -> list[int]:
    """As-soon-as-possible layering; depth of the last cell on each mode."""
    depth = [0] * n
    for s in steps:
        layer = max(depth[s.i], depth[s.j]) + 1
        depth[s.i] = depth[s.j] = layer
    return depth


def mesh_report(plan: DecompositionPlan) -> dict:
    n = plan.n
    cells = [0] * n
    for s in plan.steps:
        cells[s.i] += 1
        cells[s.j] += 1
    exit_depth = _exit_depths(n, plan.steps)
    return {
        "kind": plan.kind.value,
        "n": n,
        "bs_count": n * (n - 1) // 2,
        "bs_count_tunable": n * (n - 1),
        "bs_count_table": n * (n + 1),
        "unbiased_bs_count": n,
        "cells_per_mode": cells,
        "exit_depth": exit_depth,
        "depth_spread": max(exit_depth) - min(exit_depth) if n > 1 else 0,
    }


def plan_to_dict(plan: DecompositionPlan) -> dict:
    return {
        "kind": plan.kind.value,
        "n": plan.n,
        "steps": [{"i": s.i, "j": s.j, "theta": s.theta, "phi": s.phi} for s in plan.steps],
        "diag": list(plan.diag),
    }


def plan_from_dict(data: dict) -> DecompositionPlan:
    try:
        steps = tuple(GivensStep(int(s["i"]), int(s["j"]), float(s["theta"]), float(s["phi"])) for s in data["steps"])
        return DecompositionPlan(Model(data["kind"]), int(data["n"]), steps, tuple(float(x) for x in data["diag"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed plan: {exc}") from exc
