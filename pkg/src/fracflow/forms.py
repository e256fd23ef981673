"""Fractional differential 1- and 2-forms and the closure tests.

The fractional exterior derivative is d^a = (dx_i)^a D^a_{x_i}.  A
vector field F defines the 1-form w = F_i (dx_i)^a; the system is a
(fractional) gradient system exactly when w is closed, and closedness
is a finite symbolic computation here because coefficients are
generalized polynomials.  Phase-space fields get the same treatment
through the three Helmholtz condition families.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .fracderiv import FracOrder, as_order, frac_deriv
from .polyexpr import GenPoly, SystemSpec, max_abs_coeff

__all__ = [
    "CLOSURE_TOL",
    "ClosureReport",
    "FracForm1",
    "FracForm2",
    "check_gradient",
    "check_hamiltonian",
    "exterior_d",
    "exterior_d_1form",
]

#: a residual polynomial counts as zero when no coefficient exceeds this
CLOSURE_TOL = 1e-9


@dataclass(frozen=True)
class FracForm1:
    """1-form sum_i coeffs[i] (dx_i)^alpha."""

    order: FracOrder
    coeffs: tuple[GenPoly, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if not self.coeffs:
            raise ValueError("a 1-form needs at least one coefficient")
        n = self.coeffs[0].nvars
        if any(c.nvars != n for c in self.coeffs) or len(self.coeffs) != n:
            raise ValueError("coefficient count must equal the variable count")

    @property
    def nvars(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class FracForm2:
    """2-form with strictly upper-triangular storage on (dx_i)^a ^ (dx_j)^a."""

    order: FracOrder
    nvars: int
    entries: tuple[tuple[tuple[int, int], GenPoly], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for (i, j), c in self.entries:
            if not 0 <= i < j < self.nvars:
                raise ValueError(f"pair ({i},{j}) is not strictly upper triangular")
            if c.nvars != self.nvars:
                raise ValueError("coefficient variable count mismatch")

    def coeff(self, i: int, j: int) -> GenPoly:
        """Coefficient on (dx_i)^a ^ (dx_j)^a; (j,i) is the negation of (i,j)."""
        if i == j:
            return GenPoly.zero(self.nvars)
        key, sign = ((i, j), 1.0) if i < j else ((j, i), -1.0)
        for k, c in self.entries:
            if k == key:
                return c.scale(sign)
        return GenPoly.zero(self.nvars)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for _, c in self.entries)


@dataclass(frozen=True)
class ClosureReport:
    """Residual polynomials of a closure test, one per condition."""

    residuals: tuple[tuple[str, GenPoly], ...]
    closed: bool
    max_coeff: float


def _report(residuals: Sequence[tuple[str, GenPoly]]) -> ClosureReport:
    worst = max((max_abs_coeff(r) for _, r in residuals), default=0.0)
    return ClosureReport(tuple(residuals), worst <= CLOSURE_TOL, worst)


def exterior_d(f: GenPoly, order: "FracOrder | float") -> FracForm1:
    """d^a f: the 1-form with coefficients D^a_{x_i} f.  At alpha = 1
    this is the classical gradient 1-form."""
    o = as_order(order)
    return FracForm1(o, tuple(frac_deriv(f, i, o) for i in range(f.nvars)))


def exterior_d_1form(w: FracForm1) -> FracForm2:
    """d^a w: coefficient on pair (i < j) is D^a_{x_i} w_j - D^a_{x_j} w_i."""
    n = w.nvars
    entries = []
    for i in range(n):
        for j in range(i + 1, n):
            c = frac_deriv(w.coeffs[j], i, w.order) - frac_deriv(w.coeffs[i], j, w.order)
            entries.append(((i, j), c))
    return FracForm2(w.order, n, tuple(entries))


def check_gradient(sys: SystemSpec, order: "FracOrder | float | None" = None) -> ClosureReport:
    """Closure test for dx_i/dt = F_i: residual (i,j) is
    D^a_{x_j} F_i - D^a_{x_i} F_j.  All residuals zero means the field
    is (minus) a fractional gradient and a potential exists."""
    o = as_order(order) if order is not None else sys.alpha
    names = sys.var_names
    residuals = []
    for i in range(sys.nvars):
        for j in range(i + 1, sys.nvars):
            r = frac_deriv(sys.rhs[i], j, o) - frac_deriv(sys.rhs[j], i, o)
            residuals.append((f"({names[i]},{names[j]})", r))
    return _report(residuals)


def check_hamiltonian(sys: SystemSpec, order: "FracOrder | float | None" = None) -> ClosureReport:
    """Helmholtz closure test for dq_i/dt = G^i, dp_i/dt = F^i.

    Residual families, with q_i at index i and p_i at index n+i:
      HC1[i,j] = D^a_{p_j} G^i - D^a_{p_i} G^j        (i < j)
      HC2[i,j] = D^a_{q_i} G^j + D^a_{p_j} F^i        (all i, j)
      HC3[i,j] = D^a_{q_j} F^i - D^a_{q_i} F^j        (i < j)
    """
    if not sys.phase_split:
        raise ValueError("check_hamiltonian needs a phase-split system")
    o = as_order(order) if order is not None else sys.alpha
    n = sys.nvars // 2
    G = sys.rhs[:n]
    F = sys.rhs[n:]
    q = list(range(n))
    p = list(range(n, 2 * n))
    residuals = []
    for i in range(n):
        for j in range(i + 1, n):
            r = frac_deriv(G[i], p[j], o) - frac_deriv(G[j], p[i], o)
            residuals.append((f"HC1[{i + 1},{j + 1}]", r))
    for i in range(n):
        for j in range(n):
            r = frac_deriv(G[j], q[i], o) + frac_deriv(F[i], p[j], o)
            residuals.append((f"HC2[{i + 1},{j + 1}]", r))
    for i in range(n):
        for j in range(i + 1, n):
            r = frac_deriv(F[i], q[j], o) - frac_deriv(F[j], q[i], o)
            residuals.append((f"HC3[{i + 1},{j + 1}]", r))
    return _report(residuals)
