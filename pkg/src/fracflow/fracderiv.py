"""Symbolic Riemann-Liouville derivative on GenPoly, its right inverse,
and the kernel basis of the operator.

The derivative acts termwise through the power rule: on the variable of
differentiation, ``c x^e`` maps to ``c (Gamma(e+1)/Gamma(e+1-alpha))
x^{e-alpha}``; all other factors ride along.  The rule holds for every
exponent e > -1 and the initial point is 0 throughout.  Because the
coefficient is built with ``recip_gamma``, denominator poles annihilate
terms exactly; that is what makes ``x^{alpha-k}`` (k = 1..m) the kernel.

Derivatives act on the x > 0 branch.  Absolute-value factors on the
differentiation variable are rejected for non-integer order and treated
as plain powers for integer order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import gamma, recip_gamma
from .polyexpr import GenPoly

__all__ = [
    "FracOrder",
    "NonIntegrablePowerError",
    "as_order",
    "frac_deriv",
    "frac_integral",
    "kernel_basis",
]


class NonIntegrablePowerError(ValueError):
    """An exponent <= -1 on the active variable has no RL image here."""


@dataclass(frozen=True)
class FracOrder:
    """Order alpha > 0 together with m, the smallest integer >= alpha."""

    alpha: float
    m: int = 0

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or a <= 0.0:
            raise ValueError(f"order must be a positive real, got {self.alpha!r}")
        m = round(a) if abs(a - round(a)) <= 1e-12 else math.ceil(a)
        if abs(a - m) <= 1e-12:
            a = float(m)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "m", int(m))

    @property
    def is_integer(self) -> bool:
        return self.alpha == self.m


def as_order(order: "FracOrder | float") -> FracOrder:
    return order if isinstance(order, FracOrder) else FracOrder(float(order))


def _branch_exponent(term, var: int, order: FracOrder, op: str) -> float:
    """Exponent of ``var`` in ``term`` after the branch rules."""
    e, flag = term.factor_on(var)
    if flag and not order.is_integer:
        raise ValueError(
            f"cannot apply {op} of non-integer order to an |x| factor on variable #{var}; "
            "the operator is defined on the x > 0 branch only"
        )
    return e


def _power_map(p: GenPoly, var: int, order: FracOrder, delta: float, op: str) -> GenPoly:
    raw = []
    for t in p.terms:
        e = _branch_exponent(t, var, order, op)
        if e <= -1.0:
            raise NonIntegrablePowerError(
                f"{op}: exponent {e!r} on variable #{var} is <= -1"
            )
        ratio = gamma(e + 1.0) * recip_gamma(e + 1.0 + delta)
        if ratio == 0.0:
            continue  # denominator pole: the term is in the kernel
        factors = {i: (ex, a) for i, ex, a in t.powers if i != var}
        factors[var] = (e + delta, False)
        raw.append((t.coeff * ratio, factors))
    return GenPoly.build(raw, p.nvars)


def frac_deriv(p: GenPoly, var: int, order: "FracOrder | float") -> GenPoly:
    """Riemann-Liouville derivative of order alpha in variable ``var``.

    Requires every exponent on ``var`` to exceed -1 (absent factors
    count as exponent 0, so constants map to ``C x^{-alpha} /
    Gamma(1-alpha)``).  For integer alpha this is the classical m-th
    partial derivative on integer-exponent polynomials.
    """
    o = as_order(order)
    return _power_map(p, var, o, -o.alpha, "frac_deriv")


def frac_integral(p: GenPoly, var: int, order: "FracOrder | float") -> GenPoly:
    """Riemann-Liouville integral of order alpha in ``var``; the right
    inverse of :func:`frac_deriv` (frac_deriv(frac_integral(p)) == p)."""
    o = as_order(order)
    return _power_map(p, var, o, +o.alpha, "frac_integral")


def _frac_integral_analytic(p: GenPoly, var: int, order: "FracOrder | float") -> GenPoly:
    """Like frac_integral but continued to exponents s <= -1 with
    s + alpha > -1, which arise when inverting derivatives of order > 1.
    Internal: reconstruction only."""
    o = as_order(order)
    raw = []
    for t in p.terms:
        s = _branch_exponent(t, var, o, "frac_integral")
        if s + o.alpha <= -1.0:
            raise NonIntegrablePowerError(
                f"frac_integral: exponent {s!r} on variable #{var} has no inverse image"
            )
        if s <= -1.0 and abs(s - round(s)) <= 1e-12:
            raise NonIntegrablePowerError(
                f"frac_integral: exponent {s!r} on variable #{var} sits on a Gamma pole"
            )
        ratio = gamma(s + 1.0) * recip_gamma(s + 1.0 + o.alpha)
        if ratio == 0.0:
            continue
        factors = {i: (ex, a) for i, ex, a in t.powers if i != var}
        factors[var] = (s + o.alpha, False)
        raw.append((t.coeff * ratio, factors))
    return GenPoly.build(raw, p.nvars)


def kernel_basis(var: int, order: "FracOrder | float", nvars: int) -> list[GenPoly]:
    """Basis of ker D^alpha_{var} on the x > 0 branch: x^{alpha-k},
    k = 1..m.  For alpha = 1 this is the constants; for alpha = 2,
    {x, 1}."""
    o = as_order(order)
    return [
        GenPoly.monomial(1.0, {var: (o.alpha - k, False)}, nvars)
        for k in range(1, o.m + 1)
    ]
