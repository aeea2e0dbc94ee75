"""Symbolic bit-vector expressions.

Expression trees over registers, memory cells and call results, with a
canonical form and a semantic-equivalence oracle.  Everything here is
immutable and pure, so expressions can be shared freely across threads.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Protocol, Union

import numpy as np

WIDTHS = (1, 8, 16, 32, 64)

BIN_OPS = ("add", "sub", "mul", "and", "or", "xor", "shl", "shr", "sar")
UN_OPS = ("neg", "not")
CMP_RELS = ("eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule")

COMMUTATIVE_OPS = frozenset({"add", "mul", "and", "or", "xor"})
COMMUTATIVE_RELS = frozenset({"eq", "ne"})


class ExprError(ValueError):
    """Malformed expression: bad width, unknown operator, misplaced wildcard."""


class UnboundSymbolError(ExprError):
    """Evaluation hit a symbol that the environment does not bind."""


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    value &= mask(width)
    if value >= 1 << (width - 1):
        return value - (1 << width)
    return value


def _check_width(width: int) -> None:
    if width not in WIDTHS:
        raise ExprError(f"unsupported width {width}, expected one of {WIDTHS}")


@dataclass(frozen=True)
class Const:
    """Concrete value, stored unsigned modulo 2**width."""

    value: int
    width: int

    def __post_init__(self) -> None:
        _check_width(self.width)
        object.__setattr__(self, "value", self.value & mask(self.width))


@dataclass(frozen=True)
class Sym:
    """Free symbol.  Names follow the stable forms R(..), M(..), RET(..), ARG(..)."""

    name: str
    width: int = 64

    def __post_init__(self) -> None:
        _check_width(self.width)
        if not self.name:
            raise ExprError("symbol name must be non-empty")


@dataclass(frozen=True)
class Wildcard:
    """Matches any expression; legal only as a call parameter."""


WILDCARD = Wildcard()


def _reject_wildcard(*children: "Expr") -> None:
    for child in children:
        if isinstance(child, Wildcard):
            raise ExprError("wildcard cannot appear inside a compound expression")


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"

    def __post_init__(self) -> None:
        if self.op not in BIN_OPS:
            raise ExprError(f"unknown binary operator {self.op!r}")
        _reject_wildcard(self.lhs, self.rhs)
        if expr_width(self.lhs) != expr_width(self.rhs):
            raise ExprError(
                f"width mismatch in {self.op}: "
                f"{expr_width(self.lhs)} vs {expr_width(self.rhs)}"
            )


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Expr"

    def __post_init__(self) -> None:
        if self.op not in UN_OPS:
            raise ExprError(f"unknown unary operator {self.op!r}")
        _reject_wildcard(self.operand)


@dataclass(frozen=True)
class Cmp:
    """Relational comparison; boolean-valued (width 1)."""

    rel: str
    lhs: "Expr"
    rhs: "Expr"

    def __post_init__(self) -> None:
        if self.rel not in CMP_RELS:
            raise ExprError(f"unknown relation {self.rel!r}")
        _reject_wildcard(self.lhs, self.rhs)
        if expr_width(self.lhs) != expr_width(self.rhs):
            raise ExprError(
                f"width mismatch in {self.rel}: "
                f"{expr_width(self.lhs)} vs {expr_width(self.rhs)}"
            )


@dataclass(frozen=True)
class BoolNot:
    """Boolean negation of a width-1 expression."""

    operand: "Expr"

    def __post_init__(self) -> None:
        _reject_wildcard(self.operand)
        if expr_width(self.operand) != 1:
            raise ExprError("boolean negation applies only to width-1 expressions")


Expr = Union[Const, Sym, Wildcard, BinOp, UnOp, Cmp, BoolNot]


def expr_width(e: Expr) -> int:
    if isinstance(e, (Const, Sym)):
        return e.width
    if isinstance(e, BinOp):
        return expr_width(e.lhs)
    if isinstance(e, UnOp):
        return expr_width(e.operand)
    if isinstance(e, (Cmp, BoolNot)):
        return 1
    if isinstance(e, Wildcard):
        raise ExprError("wildcard has no width")
    raise ExprError(f"not an expression: {e!r}")


def contains_wildcard(e: Expr) -> bool:
    if isinstance(e, Wildcard):
        return True
    if isinstance(e, BinOp):
        return contains_wildcard(e.lhs) or contains_wildcard(e.rhs)
    if isinstance(e, Cmp):
        return contains_wildcard(e.lhs) or contains_wildcard(e.rhs)
    if isinstance(e, (UnOp, BoolNot)):
        return contains_wildcard(e.operand)
    return False


def free_symbols(e: Expr) -> dict[str, int]:
    """Free symbol names mapped to the width of their first occurrence."""
    out: dict[str, int] = {}

    def walk(n: Expr) -> None:
        if isinstance(n, Sym):
            out.setdefault(n.name, n.width)
        elif isinstance(n, (BinOp, Cmp)):
            walk(n.lhs)
            walk(n.rhs)
        elif isinstance(n, (UnOp, BoolNot)):
            walk(n.operand)

    walk(e)
    return out


def subexpressions(e: Expr) -> Iterator[Expr]:
    """Yield e and every subexpression of e, pre-order."""
    yield e
    if isinstance(e, (BinOp, Cmp)):
        yield from subexpressions(e.lhs)
        yield from subexpressions(e.rhs)
    elif isinstance(e, (UnOp, BoolNot)):
        yield from subexpressions(e.operand)


# ---------------------------------------------------------------------------
# structural order

_RANK_SYM, _RANK_UNOP, _RANK_BOOLNOT, _RANK_BINOP, _RANK_CMP, _RANK_CONST = range(6)


def sort_key(e: Expr):
    """Total structural order; constants sort last so they end up on the
    right-hand side of commutative operators."""
    if isinstance(e, Sym):
        return (_RANK_SYM, e.name, e.width)
    if isinstance(e, UnOp):
        return (_RANK_UNOP, e.op, sort_key(e.operand))
    if isinstance(e, BoolNot):
        return (_RANK_BOOLNOT, "", sort_key(e.operand))
    if isinstance(e, BinOp):
        return (_RANK_BINOP, e.op, sort_key(e.lhs), sort_key(e.rhs))
    if isinstance(e, Cmp):
        return (_RANK_CMP, e.rel, sort_key(e.lhs), sort_key(e.rhs))
    if isinstance(e, Const):
        return (_RANK_CONST, e.width, e.value)
    raise ExprError(f"cannot order {e!r}")


# ---------------------------------------------------------------------------
# concrete semantics

def _apply_binop(op: str, a: int, b: int, width: int) -> int:
    m = mask(width)
    if op == "add":
        return (a + b) & m
    if op == "sub":
        return (a - b) & m
    if op == "mul":
        return (a * b) & m
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return (a << b) & m if b < width else 0
    if op == "shr":
        return (a >> b) if b < width else 0
    if op == "sar":
        s = to_signed(a, width)
        if b >= width:
            return m if s < 0 else 0
        return (s >> b) & m
    raise ExprError(f"unknown binary operator {op!r}")


def _apply_unop(op: str, a: int, width: int) -> int:
    m = mask(width)
    if op == "neg":
        return (-a) & m
    if op == "not":
        return (~a) & m
    raise ExprError(f"unknown unary operator {op!r}")


def _apply_cmp(rel: str, a: int, b: int, width: int) -> int:
    sa, sb = to_signed(a, width), to_signed(b, width)
    table = {
        "eq": a == b,
        "ne": a != b,
        "slt": sa < sb,
        "sle": sa <= sb,
        "sgt": sa > sb,
        "sge": sa >= sb,
        "ult": a < b,
        "ule": a <= b,
    }
    return int(table[rel])


def evaluate(e: Expr, env: Mapping[str, int], width: int) -> int:
    """Deterministic modular evaluation.

    Each node is evaluated at min(width, node width), so an override wider
    than the expression leaves the native semantics untouched while a
    narrower one reduces every arithmetic node to the override width.
    Comparisons yield 0/1.
    """
    _check_width(width)

    def ev(n: Expr) -> int:
        if isinstance(n, Const):
            return n.value & mask(min(width, n.width))
        if isinstance(n, Sym):
            if n.name not in env:
                raise UnboundSymbolError(f"unbound symbol {n.name}")
            return env[n.name] & mask(min(width, n.width))
        if isinstance(n, BinOp):
            w = min(width, expr_width(n))
            return _apply_binop(n.op, ev(n.lhs), ev(n.rhs), w)
        if isinstance(n, UnOp):
            w = min(width, expr_width(n))
            return _apply_unop(n.op, ev(n.operand), w)
        if isinstance(n, Cmp):
            w = min(width, expr_width(n.lhs))
            return _apply_cmp(n.rel, ev(n.lhs), ev(n.rhs), w)
        if isinstance(n, BoolNot):
            return 1 - ev(n.operand)
        raise ExprError("cannot evaluate a wildcard")

    return ev(e)


# ---------------------------------------------------------------------------
# canonical form

def canon(e: Expr) -> Expr:
    """Canonical representative of e.

    Folds constants, sorts commutative operands, rewrites ``x - c`` to
    ``x + (-c)``, normalizes <= toward < where the bound does not overflow,
    drops double negation and identity elements.  Idempotent.
    """
    while True:
        out = _canon_step(e)
        if out == e:
            return out
        e = out


def _canon_step(e: Expr) -> Expr:
    if isinstance(e, (Const, Sym, Wildcard)):
        return e
    if isinstance(e, UnOp):
        x = _canon_step(e.operand)
        if isinstance(x, UnOp) and x.op == e.op:
            return x.operand
        if expr_width(x) == 1:
            # on booleans, bitwise not coincides with boolean not and neg
            # is the identity
            return BoolNot(x) if e.op == "not" else x
        if isinstance(x, Const):
            return Const(_apply_unop(e.op, x.value, x.width), x.width)
        return UnOp(e.op, x)
    if isinstance(e, BoolNot):
        x = _canon_step(e.operand)
        if isinstance(x, BoolNot):
            return x.operand
        if isinstance(x, Const):
            return Const(1 - (x.value & 1), 1)
        return BoolNot(x)
    if isinstance(e, BinOp):
        return _canon_binop(e.op, _canon_step(e.lhs), _canon_step(e.rhs))
    if isinstance(e, Cmp):
        return _canon_cmp(e.rel, _canon_step(e.lhs), _canon_step(e.rhs))
    raise ExprError(f"not an expression: {e!r}")


def _canon_binop(op: str, l: Expr, r: Expr) -> Expr:
    w = expr_width(l)
    if op == "sub":
        if l == r:
            return Const(0, w)
        if isinstance(r, Const):
            return BinOp("add", l, Const(-r.value, w))
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(_apply_binop(op, l.value, r.value, w), w)
    if op in COMMUTATIVE_OPS and sort_key(r) < sort_key(l):
        l, r = r, l
    zero, one, ones = Const(0, w), Const(1, w), Const(mask(w), w)
    if op == "add" and r == zero:
        return l
    if op == "mul":
        if r == one:
            return l
        if r == zero:
            return zero
    if op == "and":
        if l == r or r == ones:
            return l
        if r == zero:
            return zero
    if op == "or":
        if l == r or r == zero:
            return l
        if r == ones:
            return ones
    if op == "xor":
        if l == r:
            return zero
        if r == zero:
            return l
    if op in ("shl", "shr", "sar") and r == zero:
        return l
    return BinOp(op, l, r)


_SAME_OPERAND_CMP = {
    "eq": 1, "ne": 0, "slt": 0, "sle": 1, "sgt": 0, "sge": 1, "ult": 0, "ule": 1,
}


def _canon_cmp(rel: str, l: Expr, r: Expr) -> Expr:
    w = expr_width(l)
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(_apply_cmp(rel, l.value, r.value, w), 1)
    if l == r:
        return Const(_SAME_OPERAND_CMP[rel], 1)
    # orient strict/ordered relations toward the slt/sle pair
    if rel == "sgt":
        return Cmp("slt", r, l)
    if rel == "sge":
        return Cmp("sle", r, l)
    if rel in COMMUTATIVE_RELS and sort_key(r) < sort_key(l):
        l, r = r, l
    smax = (1 << (w - 1)) - 1
    smin = -(1 << (w - 1))
    if rel == "sle":
        if isinstance(r, Const) and to_signed(r.value, w) != smax:
            return Cmp("slt", l, Const(r.value + 1, w))
        if isinstance(l, Const) and to_signed(l.value, w) != smin:
            return Cmp("slt", Const(l.value - 1, w), r)
    if rel == "ule":
        if isinstance(r, Const) and r.value != mask(w):
            return Cmp("ult", l, Const(r.value + 1, w))
        if isinstance(l, Const) and l.value != 0:
            return Cmp("ult", Const(l.value - 1, w), r)
    return Cmp(rel, l, r)


# ---------------------------------------------------------------------------
# textual rendering

def render(e: Expr) -> str:
    """Canonical textual rendering, prefix notation.

    Constants print as ``<signed-decimal>:<width>``; symbols carry a
    ``:<width>`` suffix only when narrower than 64 bits.  The rendering of
    a canonical expression is byte-deterministic.
    """
    if isinstance(e, Const):
        return f"{to_signed(e.value, e.width)}:{e.width}"
    if isinstance(e, Sym):
        return e.name if e.width == 64 else f"{e.name}:{e.width}"
    if isinstance(e, Wildcard):
        return "*"
    if isinstance(e, BinOp):
        return f"({e.op} {render(e.lhs)} {render(e.rhs)})"
    if isinstance(e, UnOp):
        return f"({e.op} {render(e.operand)})"
    if isinstance(e, Cmp):
        return f"({e.rel} {render(e.lhs)} {render(e.rhs)})"
    if isinstance(e, BoolNot):
        return f"(not {render(e.operand)})"
    raise ExprError(f"cannot render {e!r}")


_CONST_RE = re.compile(r"^(-?\d+):(\d+)$")
_SYM_START = re.compile(r"[A-Za-z_]")


def parse_expr(text: str) -> Expr:
    """Parse the canonical textual rendering back into an expression.

    Symbol widths omitted in the text are recovered from sibling constants
    or annotated symbols; symbols with no width evidence default to 64.
    """
    tokens = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ExprError(f"unexpected end of expression in {text!r}")
        tok = tokens[pos]
        pos += 1
        return tok

    node = _parse_node(take, peek)
    if pos != len(tokens):
        raise ExprError(f"trailing tokens in expression {text!r}")
    return _build_with_widths(node, None)


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "()":
            tokens.append(c)
            i += 1
            continue
        if c == "*":
            tokens.append("*")
            i += 1
            continue
        if c == "-" or c.isdigit():
            j = i + 1
            while j < n and (text[j].isdigit() or text[j] == ":"):
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        if _SYM_START.match(c):
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j < n and text[j] == "(":
                depth = 0
                while j < n:
                    if text[j] == "(":
                        depth += 1
                    elif text[j] == ")":
                        depth -= 1
                        if depth == 0:
                            j += 1
                            break
                    j += 1
                if depth != 0:
                    raise ExprError(f"unbalanced parentheses in symbol at {i} of {text!r}")
            if j < n and text[j] == ":":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(text[i:j])
            i = j
            continue
        raise ExprError(f"unexpected character {c!r} at {i} in {text!r}")
    return tokens


# intermediate parse nodes: ("const", v, w) ("sym", name, w|None) ("wild",)
# ("op", name, [children])

def _parse_node(take, peek):
    tok = take()
    if tok == "(":
        op = take()
        children = []
        while peek() != ")":
            if peek() is None:
                raise ExprError("unterminated ( ... )")
            children.append(_parse_node(take, peek))
        take()
        return ("op", op, children)
    return _parse_atom(tok)


def _parse_atom(tok: str):
    if tok == "*":
        return ("wild",)
    m = _CONST_RE.match(tok)
    if m:
        return ("const", int(m.group(1)), int(m.group(2)))
    width = None
    body = tok
    sm = re.match(r"^(.*?):(\d+)$", tok)
    if sm and not sm.group(1).endswith("("):
        body, width = sm.group(1), int(sm.group(2))
    if not body or not _SYM_START.match(body[0]):
        raise ExprError(f"bad atom {tok!r}")
    return ("sym", body, width)


def _known_width(node) -> int | None:
    kind = node[0]
    if kind == "const":
        return node[2]
    if kind == "sym":
        return node[2]
    if kind == "wild":
        return None
    op = node[1]
    if op in CMP_RELS or op == "not":
        return 1
    for child in node[2]:
        w = _known_width(child)
        if w is not None:
            return w
    return None


def _build_with_widths(node, hint: int | None) -> Expr:
    kind = node[0]
    if kind == "wild":
        return WILDCARD
    if kind == "const":
        return Const(node[1], node[2])
    if kind == "sym":
        return Sym(node[1], node[2] if node[2] is not None else (hint or 64))
    op, children = node[1], node[2]
    if op in CMP_RELS:
        if len(children) != 2:
            raise ExprError(f"{op} takes two operands")
        w = _known_width(children[0]) or _known_width(children[1]) or hint
        return Cmp(op, _build_with_widths(children[0], w), _build_with_widths(children[1], w))
    if op == "not":
        if len(children) != 1:
            raise ExprError("not takes one operand")
        inner = _build_with_widths(children[0], _known_width(children[0]) or hint)
        if expr_width(inner) == 1:
            return BoolNot(inner)
        return UnOp("not", inner)
    if op == "neg":
        if len(children) != 1:
            raise ExprError("neg takes one operand")
        return UnOp("neg", _build_with_widths(children[0], hint))
    if op in BIN_OPS:
        if len(children) != 2:
            raise ExprError(f"{op} takes two operands")
        w = _known_width(children[0]) or _known_width(children[1]) or hint
        return BinOp(op, _build_with_widths(children[0], w), _build_with_widths(children[1], w))
    raise ExprError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# equivalence oracle

@dataclass(frozen=True)
class EquivResult:
    """Outcome of an equivalence query.

    tier records how the verdict was reached: "canonical" (structural
    equality after canon), "exhaustive" (all assignments at reduced width),
    or "sampled" (randomized refutation only; a True verdict at this tier
    is heuristic).  On a False verdict, counterexample binds every free
    symbol and (lhs_value, rhs_value) shows the disagreement.
    """

    equal: bool
    tier: str
    counterexample: dict[str, int] | None = None
    lhs_value: int | None = None
    rhs_value: int | None = None

    def __bool__(self) -> bool:
        return self.equal


@dataclass(frozen=True)
class EquivConfig:
    exhaustive_width: int = 8
    max_exhaustive_symbols: int = 3
    sample_count: int = 1024


DEFAULT_EQUIV_CONFIG = EquivConfig()


class EquivalenceOracle(Protocol):
    """Anything that can decide semantic equality of two expressions."""

    def equiv(self, a: Expr, b: Expr) -> EquivResult: ...


def _consts_fit_signed(e: Expr, width: int) -> bool:
    lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
    for sub in subexpressions(e):
        if isinstance(sub, Const) and not lo <= to_signed(sub.value, sub.width) <= hi:
            return False
    return True


def _sign_flip(width: int) -> np.uint64:
    return np.uint64(1 << (width - 1))


def _vec_eval(e: Expr, env: Mapping[str, np.ndarray], width: int):
    """Vectorized twin of evaluate(); operates on uint64 arrays."""
    if isinstance(e, Const):
        return np.uint64(e.value & mask(min(width, e.width)))
    if isinstance(e, Sym):
        return env[e.name] & np.uint64(mask(min(width, e.width)))
    if isinstance(e, BinOp):
        w = min(width, expr_width(e))
        m = np.uint64(mask(w))
        a = _vec_eval(e.lhs, env, width)
        b = _vec_eval(e.rhs, env, width)
        op = e.op
        if op == "add":
            return (a + b) & m
        if op == "sub":
            return (a - b) & m
        if op == "mul":
            return (a * b) & m
        if op == "and":
            return a & b
        if op == "or":
            return a | b
        if op == "xor":
            return a ^ b
        cnt = np.minimum(b, np.uint64(63))
        if op == "shl":
            shifted = (a << cnt) & m
            return np.where(b >= np.uint64(w), np.uint64(0), shifted)
        if op == "shr":
            shifted = a >> cnt
            return np.where(b >= np.uint64(w), np.uint64(0), shifted)
        if op == "sar":
            sign = (a >> np.uint64(w - 1)) & np.uint64(1)
            fill = ((m >> cnt) ^ m) * sign
            shifted = (a >> cnt) | fill
            return np.where(b >= np.uint64(w), sign * m, shifted)
        raise ExprError(f"unknown binary operator {op!r}")
    if isinstance(e, UnOp):
        w = min(width, expr_width(e))
        m = np.uint64(mask(w))
        a = _vec_eval(e.operand, env, width)
        return ((-a) if e.op == "neg" else (~a)) & m
    if isinstance(e, Cmp):
        w = min(width, expr_width(e.lhs))
        a = _vec_eval(e.lhs, env, width)
        b = _vec_eval(e.rhs, env, width)
        rel = e.rel
        if rel in ("slt", "sle", "sgt", "sge"):
            flip = _sign_flip(w)
            a, b = a ^ flip, b ^ flip
            rel = {"slt": "ult", "sle": "ule", "sgt": "ugt", "sge": "uge"}[rel]
        if rel == "eq":
            res = a == b
        elif rel == "ne":
            res = a != b
        elif rel == "ult":
            res = a < b
        elif rel == "ule":
            res = a <= b
        elif rel == "ugt":
            res = a > b
        else:
            res = a >= b
        return np.asarray(res).astype(np.uint64)
    if isinstance(e, BoolNot):
        return np.uint64(1) - _vec_eval(e.operand, env, width)
    raise ExprError("cannot evaluate a wildcard")


def _disagreement(names, env, va, vb) -> tuple[dict[str, int], int, int] | None:
    va, vb = np.broadcast_arrays(np.asarray(va), np.asarray(vb))
    neq = va != vb
    if not np.any(neq):
        return None
    idx = int(np.argmax(neq))
    assignment = {nm: int(np.asarray(env[nm]).flat[idx % np.asarray(env[nm]).size])
                  if np.asarray(env[nm]).ndim else int(env[nm])
                  for nm in names}
    return assignment, int(va.flat[idx]), int(vb.flat[idx])


def equiv(a: Expr, b: Expr, config: EquivConfig = DEFAULT_EQUIV_CONFIG) -> EquivResult:
    """Decide whether a and b are semantically equal.

    Tiers, in order: structural equality after canon; exhaustive evaluation
    at a reduced width when every constant is representable there in signed
    form and the combined free-symbol count is small; otherwise randomized
    refutation at native width.
    """
    if contains_wildcard(a) or contains_wildcard(b):
        raise ExprError("equivalence is undefined for wildcard expressions")
    if expr_width(a) != expr_width(b):
        raise ExprError(f"width mismatch: {expr_width(a)} vs {expr_width(b)}")
    ca, cb = canon(a), canon(b)
    if ca == cb:
        return EquivResult(True, "canonical")

    names = sorted(set(free_symbols(ca)) | set(free_symbols(cb)))
    ew = config.exhaustive_width
    if (
        len(names) <= config.max_exhaustive_symbols
        and _consts_fit_signed(ca, ew)
        and _consts_fit_signed(cb, ew)
    ):
        return _equiv_exhaustive(ca, cb, names, ew)
    return _equiv_sampled(ca, cb, names, config.sample_count)


def _equiv_exhaustive(ca: Expr, cb: Expr, names: list[str], width: int) -> EquivResult:
    k = len(names)
    total = (1 << width) ** k if k else 1
    chunk = 1 << 16
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        idx = np.arange(start, stop, dtype=np.uint64)
        env = {
            nm: (idx >> np.uint64(width * (k - 1 - i))) & np.uint64(mask(width))
            for i, nm in enumerate(names)
        }
        va = _vec_eval(ca, env, width)
        vb = _vec_eval(cb, env, width)
        found = _disagreement(names, env, va, vb)
        if found:
            assignment, x, y = found
            return EquivResult(False, "exhaustive", assignment, x, y)
    return EquivResult(True, "exhaustive")


_BOUNDARY = (0, 1, 2, 3, (1 << 63) - 1, 1 << 63, mask(64), mask(64) - 1)


def _equiv_sampled(ca: Expr, cb: Expr, names: list[str], count: int) -> EquivResult:
    seed_src = "\x00".join(sorted((render(ca), render(cb))))
    seed = int.from_bytes(hashlib.sha256(seed_src.encode()).digest()[:8], "big")
    rng = np.random.default_rng(seed)
    n_boundary = min(len(_BOUNDARY), count)
    env = {}
    for nm in names:
        samples = rng.integers(0, 1 << 64, size=count, dtype=np.uint64)
        samples[:n_boundary] = np.array(_BOUNDARY[:n_boundary], dtype=np.uint64)
        env[nm] = samples
    va = _vec_eval(ca, env, 64)
    vb = _vec_eval(cb, env, 64)
    found = _disagreement(names, env, va, vb)
    if found:
        assignment, x, y = found
        return EquivResult(False, "sampled", assignment, x, y)
    return EquivResult(True, "sampled")


class DefaultOracle:
    """The built-in oracle: canon + exhaustive width reduction + sampling.

    A solver-backed implementation can be substituted anywhere an
    EquivalenceOracle is accepted.
    """

    def __init__(self, config: EquivConfig = DEFAULT_EQUIV_CONFIG) -> None:
        self.config = config

    def equiv(self, a: Expr, b: Expr) -> EquivResult:
        return equiv(a, b, self.config)
