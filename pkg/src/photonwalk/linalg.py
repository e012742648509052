"""Dense complex linear algebra helpers.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``; the helpers
here add shape checking, finiteness checking and the handful of predicates
that the rest of the package relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Tolerance",
    "DimensionError",
    "SingularMatrixError",
    "as_cmatrix",
    "matmul",
    "kron",
    "dagger",
    "max_norm",
    "unitarity_residual",
    "is_unitary",
    "transpose_residual",
    "global_phase_ratio",
    "equal_up_to_global_phase",
    "aligned_residual",
    "solve",
    "DEFAULT_EQ_TOL",
    "DEFAULT_UNITARY_TOL",
    "MAX_CONDITION",
]

DEFAULT_EQ_TOL = 1e-10
DEFAULT_UNITARY_TOL = 1e-12
MAX_CONDITION = 1e12


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class SingularMatrixError(ArithmeticError):
    """Raised when a linear system is singular or too ill-conditioned."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class Tolerance:
    eps: float = DEFAULT_EQ_TOL

    def __post_init__(self):
        if not (self.eps > 0 and np.isfinite(self.eps)):
            raise ValueError(f"tolerance must be a positive finite number, got {self.eps!r}")


def _eps(tol) -> float:
    if isinstance(tol, Tolerance):
        return tol.eps
    return Tolerance(float(tol)).eps


def as_cmatrix(data) -> np.ndarray:
    """Coerce ``data`` to a finite 2-D complex array (copying)."""
    m = np.array(data, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def max_norm(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def _require_square(m: np.ndarray, what: str = "matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {m.shape}")


def unitarity_residual(m) -> float:
    """max |m^dagger m - I|."""
    m = np.asarray(m, dtype=np.complex128)
    _require_square(m)
    return max_norm(m.conj().T @ m - np.eye(m.shape[0]))


def is_unitary(m, tol=DEFAULT_UNITARY_TOL) -> bool:
    return unitarity_residual(m) <= _eps(tol)


def transpose_residual(m) -> float:
    """max |m - m^T|; zero for self-transpose matrices."""
    m = np.asarray(m)
    _require_square(m)
    return max_norm(m - m.T)


def global_phase_ratio(a, b) -> complex:
    """Unit-modulus lambda with a ~ lambda * b, fixed at b's largest entry."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(a[k]) == 0.0 or abs(b[k]) == 0.0:
        return 1.0 + 0.0j
    ratio = a[k] / b[k]
    return complex(ratio / abs(ratio))


def equal_up_to_global_phase(a, b, tol=DEFAULT_EQ_TOL) -> bool:
    lam = global_phase_ratio(a, b)
    return max_norm(np.asarray(a) - lam * np.asarray(b)) <= _eps(tol)


def aligned_residual(a, b) -> float:
    """Max-norm of a - lambda b with lambda = tr(b^dagger a)/|tr(b^dagger a)|.

    The trace choice minimises the Frobenius distance over unit-modulus
    scalars, which makes this residual insensitive to where b's largest
    entry happens to sit.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    overlap = np.vdot(b, a)
    lam = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return max_norm(a - lam * b)


def solve(a, rhs) -> np.ndarray:
    """Solve ``a @ x = rhs`` after a condition-number gate."""
    a = np.asarray(a, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    _require_square(a)
    if rhs.shape[0] != a.shape[0]:
        raise DimensionError(f"cannot solve {a.shape} system with right-hand side {rhs.shape}")
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMatrixError(f"matrix is singular or ill-conditioned (condition estimate {cond:.3e})", cond)
    x = np.linalg.solve(a, rhs)
    scale = max(max_norm(rhs), 1e-300)
    if max_norm(a @ x - rhs) > 1e-9 * scale:
        raise SingularMatrixError(f"solve residual too large (condition estimate {cond:.3e})", cond)
    return x
