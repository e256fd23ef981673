"""Generalized polynomials: real exponents, absolute-value factors, parser.

A GenPoly is a finite sum of terms ``c * prod_i x_i^{e_i}`` where each
factor may carry an abs flag, meaning ``|x_i|^{e_i}``.  Plain factors
with non-integer exponent are only defined for ``x_i > 0``; the abs
form is how surface formulas extend across the axes.

Coefficients and exponents are floats.  Canonicalization snaps
exponents that sit within 1e-9 of an integer and merges terms whose
factor signatures agree to the same tolerance, which absorbs the ulp
noise left by round trips like ``(e + alpha) - alpha``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .fracderiv import FracOrder

__all__ = [
    "DomainError",
    "ExprError",
    "GenPoly",
    "GenTerm",
    "SystemSpec",
    "coeff_distance",
    "eval_poly",
    "eval_poly_array",
    "max_abs_coeff",
    "parse_expression",
    "to_text",
]

#: tolerance for exponent snapping and signature merging
_EXP_TOL = 1e-9


class ExprError(ValueError):
    """Syntax or semantic error in an expression, with source position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class DomainError(ValueError):
    """Evaluation left the domain of a factor."""

    def __init__(self, var: int, exponent: float, value: float):
        super().__init__(
            f"variable #{var}: value {value!r} outside the domain of exponent {exponent!r}"
        )
        self.var = var
        self.exponent = exponent
        self.value = value


def _is_int(e: float) -> bool:
    return e == int(e)


@dataclass(frozen=True)
class GenTerm:
    """One term: coeff * product of (var index, exponent, abs flag) factors."""

    coeff: float
    powers: tuple[tuple[int, float, bool], ...]

    def exponent_on(self, var: int) -> float:
        for i, e, _ in self.powers:
            if i == var:
                return e
        return 0.0

    def factor_on(self, var: int) -> tuple[float, bool]:
        for i, e, a in self.powers:
            if i == var:
                return e, a
        return 0.0, False


def _snap(e: float) -> float:
    r = round(e)
    return float(r) if abs(e - r) <= _EXP_TOL else float(e)


def _canon_terms(
    raw: Iterable[tuple[float, Mapping[int, tuple[float, bool]]]], nvars: int
) -> tuple[GenTerm, ...]:
    cleaned = []
    for coeff, factors in raw:
        if coeff == 0.0:
            continue
        pows = []
        for i in sorted(factors):
            e, flag = factors[i]
            if not 0 <= i < nvars:
                raise ValueError(f"variable index {i} out of range for nvars={nvars}")
            e = _snap(e)
            if e == 0.0:
                continue
            if flag and _is_int(e) and int(e) % 2 == 0:
                flag = False  # |x|^even == x^even
            pows.append((i, float(e), bool(flag)))
        cleaned.append((float(coeff), tuple(pows)))

    # sort by a rounded signature so nearly equal exponents land adjacent
    def key(t):
        return tuple((i, round(e, 9), a) for i, e, a in t[1])

    cleaned.sort(key=key)
    merged: list[list] = []
    for coeff, pows in cleaned:
        if merged:
            pc, pp = merged[-1]
            if len(pp) == len(pows) and all(
                i == j and a == b and abs(e - f) <= _EXP_TOL
                for (i, e, a), (j, f, b) in zip(pp, pows)
            ):
                merged[-1][0] = pc + coeff
                continue
        merged.append([coeff, pows])
    return tuple(GenTerm(c, p) for c, p in merged if c != 0.0)


@dataclass(frozen=True)
class GenPoly:
    """Canonical sum of GenTerms over ``nvars`` variables."""

    nvars: int
    terms: tuple[GenTerm, ...]

    @staticmethod
    def build(raw: Iterable[tuple[float, Mapping[int, tuple[float, bool]]]], nvars: int) -> "GenPoly":
        return GenPoly(nvars, _canon_terms(raw, nvars))

    @classmethod
    def zero(cls, nvars: int) -> "GenPoly":
        return cls(nvars, ())

    @classmethod
    def constant(cls, c: float, nvars: int) -> "GenPoly":
        return cls.build([(c, {})], nvars)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "GenPoly":
        return cls.build([(1.0, {i: (1.0, False)})], nvars)

    @classmethod
    def monomial(cls, coeff: float, factors: Mapping[int, tuple[float, bool] | float], nvars: int) -> "GenPoly":
        norm = {
            i: (v if isinstance(v, tuple) else (float(v), False)) for i, v in factors.items()
        }
        return cls.build([(coeff, norm)], nvars)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def _raw(self):
        return [(t.coeff, {i: (e, a) for i, e, a in t.powers}) for t in self.terms]

    def __add__(self, other: "GenPoly") -> "GenPoly":
        if not isinstance(other, GenPoly):
            return NotImplemented
        if other.nvars != self.nvars:
            raise ValueError("operand variable counts differ")
        return GenPoly.build(self._raw() + other._raw(), self.nvars)

    def __sub__(self, other: "GenPoly") -> "GenPoly":
        return self + (-other)

    def __neg__(self) -> "GenPoly":
        return GenPoly(self.nvars, tuple(GenTerm(-t.coeff, t.powers) for t in self.terms))

    def scale(self, s: float) -> "GenPoly":
        if s == 0.0:
            return GenPoly.zero(self.nvars)
        return GenPoly(self.nvars, tuple(GenTerm(s * t.coeff, t.powers) for t in self.terms))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        if not isinstance(other, GenPoly):
            return NotImplemented
        if other.nvars != self.nvars:
            raise ValueError("operand variable counts differ")
        raw = []
        for t in self.terms:
            for u in other.terms:
                factors: dict[int, tuple[float, bool]] = {i: (e, a) for i, e, a in t.powers}
                for i, e, a in u.powers:
                    if i in factors:
                        e0, a0 = factors[i]
                        factors[i] = (e0 + e, a0 or a)
                    else:
                        factors[i] = (e, a)
                raw.append((t.coeff * u.coeff, factors))
        return GenPoly.build(raw, self.nvars)

    __rmul__ = __mul__


def max_abs_coeff(p: GenPoly) -> float:
    return max((abs(t.coeff) for t in p.terms), default=0.0)


def coeff_distance(p: GenPoly, q: GenPoly) -> float:
    """Max absolute coefficient of p - q in canonical form."""
    return max_abs_coeff(p - q)


def eval_poly(p: GenPoly, point: Sequence[float]) -> float:
    """Evaluate at a point.  Raises DomainError where a factor is undefined."""
    if len(point) != p.nvars:
        raise ValueError(f"point has {len(point)} coordinates, expected {p.nvars}")
    total = 0.0
    for t in p.terms:
        v = t.coeff
        for i, e, flag in t.powers:
            x = float(point[i])
            if flag:
                b = abs(x)
                if b == 0.0 and e < 0:
                    raise DomainError(i, e, x)
                v *= b**e
            elif _is_int(e):
                if x == 0.0 and e < 0:
                    raise DomainError(i, e, x)
                v *= x**e
            else:
                if x <= 0.0:
                    raise DomainError(i, e, x)
                v *= x**e
        total += v
    return total


def eval_poly_array(p: GenPoly, coords: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized evaluation.

    Returns (values, undefined) where ``undefined`` marks points at
    which some factor leaves its domain; values there are NaN.
    """
    if len(coords) != p.nvars:
        raise ValueError(f"got {len(coords)} coordinate arrays, expected {p.nvars}")
    coords = [np.asarray(c, dtype=np.float64) for c in coords]
    shape = np.broadcast_shapes(*(c.shape for c in coords)) if coords else ()
    total = np.zeros(shape, dtype=np.float64)
    bad = np.zeros(shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for t in p.terms:
            v = np.full(shape, t.coeff)
            for i, e, flag in t.powers:
                x = coords[i]
                if flag:
                    b = np.abs(x)
                    if e < 0:
                        bad |= b == 0.0
                    v = v * b**e
                elif _is_int(e):
                    if e < 0:
                        bad |= x == 0.0
                    v = v * x**e
                else:
                    bad |= x <= 0.0
                    v = v * np.where(x > 0.0, x, 1.0) ** e
            total += v
    total = np.where(bad, np.nan, total)
    return total, bad


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def to_text(p: GenPoly, var_names: Sequence[str]) -> str:
    """Canonical text form; parse_expression reads it back exactly."""
    if len(var_names) != p.nvars:
        raise ValueError("var_names length mismatch")
    if p.is_zero:
        return "0"
    chunks: list[str] = []
    for k, t in enumerate(p.terms):
        pieces = []
        c = abs(t.coeff)
        if c != 1.0 or not t.powers:
            pieces.append(_fmt(c))
        for i, e, flag in t.powers:
            atom = f"|{var_names[i]}|" if flag else var_names[i]
            pieces.append(atom if e == 1.0 else f"{atom}^{_fmt(e)}")
        body = "*".join(pieces)
        if k == 0:
            chunks.append(f"-{body}" if t.coeff < 0 else body)
        else:
            chunks.append(f"- {body}" if t.coeff < 0 else f"+ {body}")
    return " ".join(chunks)


_TOKEN_RE = re.compile(
    r"""(?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*^()|/])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            pos += 1
            continue
        if ch == "#":  # comment to end of line
            nl = text.find("\n", pos)
            pos = n if nl < 0 else nl + 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprError(f"unexpected character {ch!r}", pos)
        kind = m.lastgroup
        toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", n))
    return toks


class _Parser:
    """Recursive descent over: expr := ['-'] term (('+'|'-') term)*;
    term := factor ('*' factor)*; factor := base ('^' signed real)?;
    base := real | name | '|' name '|' | '(' expr ')'.  No division."""

    def __init__(self, text: str, var_names: Sequence[str], params: Mapping[str, float]):
        self.toks = _tokenize(text)
        self.k = 0
        self.nvars = len(var_names)
        self.vars = {name: i for i, name in enumerate(var_names)}
        self.params = dict(params or {})

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ExprError(f"expected {op!r}", pos)
        return self.take()

    def parse(self) -> GenPoly:
        p = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected trailing input {val!r}", pos)
        return p

    def expr(self) -> GenPoly:
        kind, val, _ = self.peek()
        negate = kind == "op" and val == "-"
        if negate:
            self.take()
        p = self.term()
        if negate:
            p = -p
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                q = self.term()
                p = p + q if val == "+" else p - q
            else:
                return p

    def term(self) -> GenPoly:
        p = self.factor()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = p * self.factor()
            elif kind == "op" and val == "/":
                raise ExprError("division is not supported", pos)
            else:
                return p

    def factor(self) -> GenPoly:
        base_pos = self.peek()[2]
        p = self.base()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            e = self.signed_number()
            p = self._power(p, e, base_pos)
        return p

    def signed_number(self) -> float:
        kind, val, pos = self.peek()
        sign = 1.0
        if kind == "op" and val in "+-":
            sign = -1.0 if val == "-" else 1.0
            self.take()
            kind, val, pos = self.peek()
        if kind == "name":
            raise ExprError("exponent must be a numeric literal", pos)
        if kind != "num":
            raise ExprError("expected exponent", pos)
        self.take()
        return sign * float(val)

    def _power(self, p: GenPoly, e: float, pos: int) -> GenPoly:
        if len(p.terms) == 1:
            t = p.terms[0]
            if t.coeff < 0 and not _is_int(e):
                raise ExprError("fractional power of a negative coefficient", pos)
            factors = {i: (ex * e, a) for i, ex, a in t.powers}
            return GenPoly.build([(t.coeff**e, factors)], p.nvars)
        if _is_int(e) and 0 <= e <= 32:
            out = GenPoly.constant(1.0, p.nvars)
            for _ in range(int(e)):
                out = out * p
            return out
        raise ExprError("only small non-negative integer powers of compound expressions", pos)

    def base(self) -> GenPoly:
        kind, val, pos = self.take()
        if kind == "num":
            return GenPoly.constant(float(val), self.nvars)
        if kind == "name":
            if val in self.vars:
                return GenPoly.variable(self.vars[val], self.nvars)
            if val in self.params:
                return GenPoly.constant(float(self.params[val]), self.nvars)
            raise ExprError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        if kind == "op" and val == "|":
            nkind, nval, npos = self.take()
            if nkind != "name":
                raise ExprError("expected a name inside |...|", npos)
            self.expect_op("|")
            if nval in self.vars:
                return GenPoly.build([(1.0, {self.vars[nval]: (1.0, True)})], self.nvars)
            if nval in self.params:
                return GenPoly.constant(abs(float(self.params[nval])), self.nvars)
            raise ExprError(f"unknown identifier {nval!r}", npos)
        raise ExprError(f"unexpected token {val!r}", pos)


def parse_expression(
    text: str, var_names: Sequence[str], params: Mapping[str, float] | None = None
) -> GenPoly:
    """Parse an expression over the given variables into canonical form.

    Parameters are substituted numerically.  Errors carry the source
    position; division and symbolic exponents are rejected.
    """
    return _Parser(text, var_names, params or {}).parse()


@dataclass(frozen=True)
class SystemSpec:
    """A dynamical system dx_i/dt = rhs_i with named variables and order alpha.

    With ``phase_split`` the first half of the variables are coordinates
    q_i and the second half momenta p_i.
    """

    var_names: tuple[str, ...]
    params: Mapping[str, float]
    alpha: "FracOrder"
    rhs: tuple[GenPoly, ...]
    phase_split: bool = False

    def __post_init__(self):
        object.__setattr__(self, "var_names", tuple(self.var_names))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        object.__setattr__(self, "params", dict(self.params))
        if len(self.rhs) != len(self.var_names):
            raise ValueError("need exactly one right-hand side per variable")
        for r in self.rhs:
            if r.nvars != len(self.var_names):
                raise ValueError("right-hand side variable count mismatch")
        if self.phase_split and len(self.var_names) % 2:
            raise ValueError("phase split needs an even number of variables")

    @property
    def nvars(self) -> int:
        return len(self.var_names)
