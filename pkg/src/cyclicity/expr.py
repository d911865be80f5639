"""Parser, printer and evaluator for the system / inverse-integrating-factor language.

Grammar (whitespace is insignificant)::

    system   := stmt (";" | newline) stmt
    stmt     := ("x'" | "y'") "=" expr
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := ("-" | "+") unary | factor
    factor   := base ("^" exponent)?
    base     := integer | ident | "(" expr ")" | "exp" "(" expr ")"
    exponent := integer | "(" ["-"] integer ["/" integer] ")" [ "^" exponent ]

Only integer literals are accepted. Division by an expression containing
``x`` or ``y`` is allowed inside ``exp(...)`` only.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from .algebra import Poly2


class ExprError(ValueError):
    """Base class for parse and evaluation errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.reason = message


class UnboundParameterError(ExprError):
    pass


class DomainError(ExprError):
    pass


class NotPolynomialError(ExprError):
    pass


class SingularPointError(ExprError):
    """The origin is not an equilibrium of the parsed system."""


# ----------------------------------------------------------------------
# AST
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "y"


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: Fraction
    # True when the base is known to be >= 0, so any rational power is real
    nonneg: bool = False


@dataclass(frozen=True)
class Exp:
    arg: "Expr"


Expr = Union[Num, Var, Param, Neg, Add, Sub, Mul, Div, Pow, Exp]
ExprAst = Expr

_BINARY = (Add, Sub, Mul, Div)


def children(node: Expr) -> Tuple[Expr, ...]:
    if isinstance(node, _BINARY):
        return (node.left, node.right)
    if isinstance(node, Neg):
        return (node.child,)
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Exp):
        return (node.arg,)
    return ()


def walk(node: Expr):
    yield node
    for c in children(node):
        yield from walk(c)


def free_parameters(node: Expr) -> Tuple[str, ...]:
    return tuple(sorted({n.name for n in walk(node) if isinstance(n, Param)}))


def has_variables(node: Expr) -> bool:
    return any(isinstance(n, Var) for n in walk(node))


def domain_restricted(node: Expr) -> bool:
    """True if evaluation can fail somewhere in the plane."""
    for n in walk(node):
        if isinstance(n, Pow) and has_variables(n.base):
            if n.exponent < 0 or (n.exponent.denominator != 1 and not n.nonneg):
                return True
            if n.exponent.denominator != 1 and n.exponent < 1:
                return True
        if isinstance(n, Div) and has_variables(n.right):
            return True
    return False


# ----------------------------------------------------------------------
# tokenizer
# ----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<float>\d+\.\d*|\.\d+|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()=;'])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind == "float":
            raise ParseError("floating-point literals are not accepted; use integers or p/q", pos)
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, assume_nonneg: bool = False):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.exp_depth = 0
        self.assume_nonneg = assume_nonneg

    # helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def skip_newlines(self):
        while self.tok.kind == "nl":
            self.i += 1

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, what: str):
        t = self.tok
        if t.kind == "eof":
            raise ParseError(f"{what}; unexpected end of input", t.pos)
        raise ParseError(f"{what}; found {t.text!r}", t.pos)

    # grammar
    def expr(self) -> Expr:
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                node = Mul(node, rhs)
            else:
                if has_variables(rhs) and self.exp_depth == 0:
                    raise ParseError("division by an expression in x or y is only allowed inside exp()",
                                     op.pos)
                node = Div(node, rhs)
        return node

    def unary(self) -> Expr:
        if self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.factor()

    def factor(self) -> Expr:
        base = self.base()
        if self.tok.text == "^":
            self.advance()
            e = self.exponent()
            return Pow(base, e, _nonneg_base(base) or (self.assume_nonneg and e.denominator != 1))
        return base

    def exponent(self) -> Fraction:
        t = self.tok
        if t.kind == "int":
            self.advance()
            value = Fraction(int(t.text))
        elif t.text == "(":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            if self.tok.kind != "int":
                self.fail("malformed rational exponent")
            num = int(self.advance().text)
            den = 1
            if self.tok.text == "/":
                self.advance()
                if self.tok.kind != "int":
                    self.fail("malformed rational exponent")
                den_tok = self.advance()
                den = int(den_tok.text)
                if den == 0:
                    raise ParseError("malformed rational exponent: zero denominator", den_tok.pos)
            if self.tok.text != ")":
                self.fail("malformed rational exponent")
            self.advance()
            value = Fraction(sign * num, den)
        else:
            self.fail("expected an integer or (p/q) exponent")
        if self.tok.text == "^":
            pos = self.advance().pos
            upper = self.exponent()
            if upper.denominator != 1:
                raise ParseError("malformed rational exponent: stacked exponent must be an integer", pos)
            if value == 0 and upper < 0:
                raise ParseError("malformed rational exponent: zero to a negative power", pos)
            value = value ** int(upper)
        return value

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Num(Fraction(int(t.text)))
        if t.kind == "ident":
            self.advance()
            if t.text == "exp":
                self.expect("(")
                self.exp_depth += 1
                arg = self.expr()
                self.exp_depth -= 1
                self.expect(")")
                return Exp(arg)
            if self.tok.text == "(":
                raise ParseError(f"unknown function {t.text!r}", t.pos)
            if t.text in ("x", "y"):
                return Var(t.text)
            return Param(t.text)
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, name or '('")


def _nonneg_base(base: Expr) -> bool:
    """Provable nonnegativity: a polynomial in x, y with only even exponents
    and positive coefficients (e.g. ``x^4 + 2*y^2``)."""
    if any(isinstance(n, Param) for n in walk(base)):
        return False
    try:
        p = to_poly(base, {})
    except ExprError:
        return False
    if p.is_zero():
        return True
    return all(i % 2 == 0 and j % 2 == 0 and c > 0 for (i, j), c in p.items())


def parse_expression(text: str, assume_nonneg: bool = False) -> Expr:
    """Parse one expression.

    Parameters
    ----------
    text : str
        Source text.
    assume_nonneg : bool
        Caller's promise that every base raised to a fractional power is
        nonnegative on the region of interest.
    """
    p = _Parser(text, assume_nonneg)
    p.skip_newlines()
    node = p.expr()
    p.skip_newlines()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    return node


# ----------------------------------------------------------------------
# printing
# ----------------------------------------------------------------------

def _prec(node: Expr) -> int:
    if isinstance(node, (Add, Sub)):
        return 1
    if isinstance(node, (Mul, Div)):
        return 2
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    if isinstance(node, Num) and node.value < 0:
        return 3
    return 5


def _format_exponent(e: Fraction) -> str:
    if e.denominator == 1 and e >= 0:
        return str(e.numerator)
    if e.denominator == 1:
        return f"({e.numerator})"
    return f"({e.numerator}/{e.denominator})"


def to_text(node: Expr) -> str:
    """Canonical text; ``parse_expression(to_text(a)) == a`` for parsed ASTs."""
    if isinstance(node, Num):
        v = node.value
        s = str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return s
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Exp):
        return f"exp({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.child)
        if _prec(node.child) < 3:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Pow):
        inner = to_text(node.base)
        if _prec(node.base) < 5 or (isinstance(node.base, Num) and node.base.value.denominator != 1):
            inner = f"({inner})"
        return f"{inner}^{_format_exponent(node.exponent)}"
    op = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(node)]
    p = _prec(node)
    left = to_text(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = to_text(node.right)
    if _prec(node.right) <= p:
        right = f"({right})"
    return left + op + right


# ----------------------------------------------------------------------
# conversion to Poly2
# ----------------------------------------------------------------------

def to_poly(node: Expr, params: Mapping[str, Fraction]) -> Poly2:
    """Exact polynomial form; raises :class:`NotPolynomialError` otherwise."""
    if isinstance(node, Num):
        return Poly2.const(node.value)
    if isinstance(node, Var):
        return Poly2.x() if node.name == "x" else Poly2.y()
    if isinstance(node, Param):
        if node.name not in params:
            raise UnboundParameterError(f"unbound parameter {node.name!r}")
        return Poly2.const(Fraction(params[node.name]))
    if isinstance(node, Neg):
        return -to_poly(node.child, params)
    if isinstance(node, Add):
        return to_poly(node.left, params) + to_poly(node.right, params)
    if isinstance(node, Sub):
        return to_poly(node.left, params) - to_poly(node.right, params)
    if isinstance(node, Mul):
        return to_poly(node.left, params) * to_poly(node.right, params)
    if isinstance(node, Div):
        den = to_poly(node.right, params)
        if den.degree > 0:
            raise NotPolynomialError("division by a non-constant")
        c = den.coeff(0, 0)
        if c == 0:
            raise ExprError("division by zero")
        return to_poly(node.left, params) * (Fraction(1) / c)
    if isinstance(node, Pow):
        e = node.exponent
        if e.denominator != 1 or e < 0:
            base = to_poly(node.base, params)
            if base.degree <= 0 and (e.denominator == 1):
                c = base.coeff(0, 0)
                if c == 0:
                    raise ExprError("zero to a negative power")
                return Poly2.const(c ** int(e))
            raise NotPolynomialError("non-integer or negative power")
        return to_poly(node.base, params) ** int(e)
    if isinstance(node, Exp):
        raise NotPolynomialError("exp() is not polynomial")
    raise TypeError(f"unknown node {node!r}")


def is_polynomial(node: Expr, params: Mapping[str, Fraction]) -> bool:
    try:
        to_poly(node, params)
    except NotPolynomialError:
        return False
    return True


# ----------------------------------------------------------------------
# numeric evaluation with exact differentiation rules
# ----------------------------------------------------------------------

def _param_value(name: str, params: Mapping[str, object]) -> float:
    if name not in params:
        raise UnboundParameterError(f"unbound parameter {name!r}")
    return float(params[name])


def _eval(node: Expr, x, y, params, need_grad: bool):
    if isinstance(node, Num):
        z = np.zeros_like(x)
        return z + float(node.value), z, z
    if isinstance(node, Var):
        one, zero = np.ones_like(x), np.zeros_like(x)
        if node.name == "x":
            return x, one, zero
        return y, zero, one
    if isinstance(node, Param):
        z = np.zeros_like(x)
        return z + _param_value(node.name, params), z, z
    if isinstance(node, Neg):
        v, gx, gy = _eval(node.child, x, y, params, need_grad)
        return -v, -gx, -gy
    if isinstance(node, (Add, Sub)):
        a, ax, ay = _eval(node.left, x, y, params, need_grad)
        b, bx, by = _eval(node.right, x, y, params, need_grad)
        s = 1.0 if isinstance(node, Add) else -1.0
        return a + s * b, ax + s * bx, ay + s * by
    if isinstance(node, Mul):
        a, ax, ay = _eval(node.left, x, y, params, need_grad)
        b, bx, by = _eval(node.right, x, y, params, need_grad)
        return a * b, ax * b + a * bx, ay * b + a * by
    if isinstance(node, Div):
        a, ax, ay = _eval(node.left, x, y, params, need_grad)
        b, bx, by = _eval(node.right, x, y, params, need_grad)
        if np.any(b == 0):
            raise DomainError("division by zero inside the evaluation domain")
        q = a / b
        return q, (ax - q * bx) / b, (ay - q * by) / b
    if isinstance(node, Pow):
        b, bx, by = _eval(node.base, x, y, params, need_grad)
        e = node.exponent
        fe = float(e)
        if e.denominator == 1:
            k = int(e)
            if k < 0 and np.any(b == 0):
                raise DomainError("negative power of zero")
            if k == 0:
                z = np.zeros_like(b)
                return z + 1.0, z, z
            v = b ** k
            d = k * b ** (k - 1)
        else:
            if np.any(b < 0):
                raise DomainError("fractional power of a negative base")
            if e < 1 and np.any(b == 0):
                raise DomainError("fractional power below 1 is not differentiable at zero")
            v = b ** fe
            d = fe * b ** (fe - 1.0)
        return v, d * bx, d * by
    if isinstance(node, Exp):
        a, ax, ay = _eval(node.arg, x, y, params, need_grad)
        with np.errstate(over="raise"):
            try:
                v = np.exp(a)
            except FloatingPointError as exc:
                raise OverflowError("exp overflow") from exc
        return v, v * ax, v * ay
    raise TypeError(f"unknown node {node!r}")


def eval_and_grad(node: Expr, point, params: Optional[Mapping[str, object]] = None):
    """Value and exact partial derivatives at ``point = (x, y)``.

    ``x`` and ``y`` may be numpy arrays of a common shape. Returns scalars
    for scalar input.
    """
    params = params or {}
    x = np.asarray(point[0], dtype=float)
    y = np.asarray(point[1], dtype=float)
    x, y = np.broadcast_arrays(x, y)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v, gx, gy = _eval(node, x.astype(float), y.astype(float), params, True)
    for arr in (v, gx, gy):
        if not np.all(np.isfinite(arr)):
            raise OverflowError("non-finite value during evaluation")
    if v.ndim == 0:
        return float(v), float(gx), float(gy)
    return v, gx, gy


def evaluate(node: Expr, x, y, params: Optional[Mapping[str, object]] = None):
    return eval_and_grad(node, (x, y), params)[0]


# ----------------------------------------------------------------------
# weighted homogeneity
# ----------------------------------------------------------------------

def weighted_degree(node: Expr, n: int) -> Optional[Fraction]:
    """Weighted degree under ``(x, y) -> (l x, l^n y)``, or ``None`` if the
    expression is not quasihomogeneous in that grading."""
    if isinstance(node, (Num, Param)):
        return Fraction(0)
    if isinstance(node, Var):
        return Fraction(1) if node.name == "x" else Fraction(n)
    if isinstance(node, Neg):
        return weighted_degree(node.child, n)
    if isinstance(node, (Add, Sub)):
        a = weighted_degree(node.left, n)
        b = weighted_degree(node.right, n)
        return a if a is not None and a == b else None
    if isinstance(node, (Mul, Div)):
        a = weighted_degree(node.left, n)
        b = weighted_degree(node.right, n)
        if a is None or b is None:
            return None
        return a + b if isinstance(node, Mul) else a - b
    if isinstance(node, Pow):
        a = weighted_degree(node.base, n)
        return None if a is None else a * node.exponent
    if isinstance(node, Exp):
        a = weighted_degree(node.arg, n)
        return Fraction(0) if a == 0 else None
    return None


# ----------------------------------------------------------------------
# systems
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ParsedSystem:
    """A planar system ``x' = P``, ``y' = Q`` with the origin as equilibrium.

    ``P`` and ``Q`` are exact :class:`Poly2` when the right-hand sides are
    polynomial under the bound parameters, otherwise ``None`` and only the
    ASTs are available.
    """

    P_ast: Expr
    Q_ast: Expr
    params: Tuple[Tuple[str, Fraction], ...] = ()
    spans: Tuple[Tuple[str, Tuple[int, int]], ...] = ()
    P: Optional[Poly2] = field(default=None, compare=False)
    Q: Optional[Poly2] = field(default=None, compare=False)

    @property
    def param_map(self) -> Dict[str, Fraction]:
        return dict(self.params)

    @property
    def is_polynomial(self) -> bool:
        return self.P is not None and self.Q is not None

    @classmethod
    def from_polys(cls, P: Poly2, Q: Poly2) -> "ParsedSystem":
        """Wrap polynomials directly. Float coefficients are allowed here."""
        if P.coeff(0, 0) != 0 or Q.coeff(0, 0) != 0:
            raise SingularPointError("origin is not a singular point")
        if P.is_exact() and Q.is_exact():
            sysm = parse_system(f"x' = {P.to_str()}; y' = {Q.to_str()}")
            return sysm
        return cls(P_ast=Num(Fraction(0)), Q_ast=Num(Fraction(0)), P=P, Q=Q)

    def canonical_text(self) -> str:
        if self.is_polynomial:
            return f"x' = {self.P.to_str()}; y' = {self.Q.to_str()}"
        return f"x' = {to_text(self.P_ast)}; y' = {to_text(self.Q_ast)}"

    def field(self, x, y):
        """Numerical ``(P, Q)`` at points."""
        if self.is_polynomial:
            return self.P(x, y), self.Q(x, y)
        pm = self.param_map
        return evaluate(self.P_ast, x, y, pm), evaluate(self.Q_ast, x, y, pm)


def _to_fraction(v) -> Fraction:
    if isinstance(v, float):
        raise ExprError("parameter values must be exact rationals, not floats")
    return Fraction(v)


def parse_param_binding(text: str) -> Tuple[str, Fraction]:
    """``"mu=1/2"`` -> ``("mu", Fraction(1, 2))``. Decimal strings are read exactly."""
    if "=" not in text:
        raise ExprError(f"parameter binding {text!r} must look like name=value")
    name, value = (s.strip() for s in text.split("=", 1))
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name in ("x", "y", "exp"):
        raise ExprError(f"invalid parameter name {name!r}")
    try:
        return name, Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ExprError(f"invalid parameter value {value!r}") from exc


def parse_system(text: str, params: Optional[Mapping[str, object]] = None) -> ParsedSystem:
    """Parse ``x' = ...; y' = ...`` and validate that the origin is singular."""
    params = {k: _to_fraction(v) for k, v in (params or {}).items()}
    p = _Parser(text)
    rhs: Dict[str, Expr] = {}
    spans: Dict[str, Tuple[int, int]] = {}
    p.skip_newlines()
    while p.tok.kind != "eof":
        t = p.tok
        if t.kind != "ident" or t.text not in ("x", "y"):
            p.fail("expected x' or y'")
        p.advance()
        p.expect("'")
        p.expect("=")
        start = p.tok.pos
        node = p.expr()
        end = p.tok.pos
        if t.text in rhs:
            raise ParseError(f"duplicate equation for {t.text}'", t.pos)
        rhs[t.text] = node
        spans[t.text + "'"] = (start, end)
        if p.tok.text == ";" or p.tok.kind == "nl":
            p.advance()
            p.skip_newlines()
        elif p.tok.kind != "eof":
            p.fail("expected ';' or newline between equations")
    for v in ("x", "y"):
        if v not in rhs:
            raise ParseError(f"missing equation for {v}'", len(text))
    P_ast, Q_ast = rhs["x"], rhs["y"]
    used = set(free_parameters(P_ast)) | set(free_parameters(Q_ast))
    missing = sorted(used - set(params))
    if missing:
        raise UnboundParameterError(f"unbound parameter(s): {', '.join(missing)}")
    bound = tuple(sorted((k, params[k]) for k in used))
    P = Q = None
    try:
        P = to_poly(P_ast, params)
        Q = to_poly(Q_ast, params)
    except NotPolynomialError:
        P = Q = None
    if P is not None:
        if P.coeff(0, 0) != 0 or Q.coeff(0, 0) != 0:
            raise SingularPointError(
                f"origin is not a singular point: P(0,0)={P.coeff(0, 0)}, Q(0,0)={Q.coeff(0, 0)}")
    else:
        pv, qv = (evaluate(a, 0.0, 0.0, params) for a in (P_ast, Q_ast))
        if pv != 0 or qv != 0:
            raise SingularPointError(f"origin is not a singular point: P(0,0)={pv}, Q(0,0)={qv}")
    return ParsedSystem(P_ast=P_ast, Q_ast=Q_ast, params=bound,
                        spans=tuple(sorted(spans.items())), P=P, Q=Q)


def jacobian_at_origin(sysm: ParsedSystem) -> Tuple[Tuple[Fraction, Fraction], Tuple[Fraction, Fraction]]:
    if not sysm.is_polynomial:
        raise NotPolynomialError("exact Jacobian needs a polynomial field")
    P, Q = sysm.P, sysm.Q
    return ((P.coeff(1, 0), P.coeff(0, 1)), (Q.coeff(1, 0), Q.coeff(0, 1)))
