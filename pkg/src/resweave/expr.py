"""Guard and action expression language.

Integer/boolean expressions over named variables, used in transition guards,
guarded entry/exit actions, assignment right-hand sides, and invariant
predicates. Grammar, loosest binding first:

    or-expr   := and-expr ('||' and-expr)*
    and-expr  := cmp-expr ('&&' cmp-expr)*
    cmp-expr  := add-expr (('<'|'<='|'>'|'>='|'=='|'!=') add-expr)?
    add-expr  := mul-expr (('+'|'-') mul-expr)*
    mul-expr  := unary ('*' unary)*
    unary     := '!' unary | '-' unary | atom
    atom      := INT | 'true' | 'false' | IDENT | '(' or-expr ')'

Comparisons apply to integers, logical connectives to booleans, and there is
no division. Variable names may be dotted (``RES.tPA``). Unary minus is only
accepted in front of an integer literal and folds into the literal.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Union

from .errors import ResweaveError

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

KIND_INTEGER = "integer"
KIND_BOOLEAN = "boolean"


class ExprError(ResweaveError):
    pass


class ExprSyntaxError(ExprError):
    """Malformed expression text; `column` is 1-based within the text."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


class ExprTypeError(ExprError):
    pass


class EvalError(ExprError):
    pass


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, BoolLit, Var, Not, BinOp]

TRUE = BoolLit(True)
FALSE = BoolLit(False)

_CMP_OPS = ("<=", ">=", "==", "!=", "<", ">")
_ARITH_OPS = ("+", "-", "*")

# Precedence for printing/parsing decisions; higher binds tighter.
_PRECEDENCE = {"||": 1, "&&": 2}
_PRECEDENCE.update({op: 3 for op in _CMP_OPS})
_PRECEDENCE.update({"+": 4, "-": 4, "*": 5})

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)"
    r"|(?P<op>\|\||&&|<=|>=|==|!=|[-+*!<>()]))"
)

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
DOTTED_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*\Z")

_RESERVED = {"true", "false", "raise", "entry", "exit", "tick", "imply"}


def is_reserved_word(name: str) -> bool:
    return name in _RESERVED


@dataclass(frozen=True)
class _Token:
    kind: str  # "int" | "ident" | "op" | "end"
    text: str
    column: int  # 1-based


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            col = len(text) - len(stripped) + 1
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", col)
        for kind in ("int", "ident", "op"):
            value = match.group(kind)
            if value is not None:
                tokens.append(_Token(kind, value, match.start(kind) + 1))
                break
        pos = match.end()
    tokens.append(_Token("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def accept_op(self, *ops: str) -> _Token | None:
        token = self.peek()
        if token.kind == "op" and token.text in ops:
            return self.advance()
        return None

    def parse(self) -> Expr:
        result = self.or_expr()
        trailing = self.peek()
        if trailing.kind != "end":
            raise ExprSyntaxError(f"unexpected {trailing.text!r}", trailing.column)
        return result

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.accept_op("||"):
            left = BinOp("||", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.cmp_expr()
        while self.accept_op("&&"):
            left = BinOp("&&", left, self.cmp_expr())
        return left

    def cmp_expr(self) -> Expr:
        left = self.add_expr()
        token = self.accept_op(*_CMP_OPS)
        if token:
            return BinOp(token.text, left, self.add_expr())
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while True:
            token = self.accept_op("+", "-")
            if not token:
                return left
            left = BinOp(token.text, left, self.mul_expr())

    def mul_expr(self) -> Expr:
        left = self.unary()
        while self.accept_op("*"):
            left = BinOp("*", left, self.unary())
        return left

    def unary(self) -> Expr:
        token = self.accept_op("!")
        if token:
            return Not(self.unary())
        token = self.accept_op("-")
        if token:
            operand = self.peek()
            if operand.kind != "int":
                raise ExprSyntaxError(
                    "unary '-' is only allowed before an integer literal", token.column
                )
            self.advance()
            return _int_literal("-" + operand.text, operand.column)
        return self.atom()

    def atom(self) -> Expr:
        token = self.advance()
        if token.kind == "int":
            return _int_literal(token.text, token.column)
        if token.kind == "ident":
            if token.text == "true":
                return TRUE
            if token.text == "false":
                return FALSE
            return Var(token.text)
        if token.kind == "op" and token.text == "(":
            inner = self.or_expr()
            closing = self.peek()
            if closing.kind != "op" or closing.text != ")":
                raise ExprSyntaxError("expected ')'", closing.column)
            self.advance()
            return inner
        raise ExprSyntaxError(
            f"expected an operand, found {token.text!r}" if token.text else "unexpected end of expression",
            token.column,
        )


def _int_literal(text: str, column: int) -> IntLit:
    value = int(text)
    if not INT_MIN <= value <= INT_MAX:
        raise ExprSyntaxError("integer literal out of 64-bit range", column)
    return IntLit(value)


def parse_expr(text: str) -> Expr:
    """Parse expression text into a syntax tree."""
    return _Parser(text).parse()


def to_text(expr: Expr, rename=None) -> str:
    """Render a syntax tree in canonical form (reparses to an equal tree).

    `rename` optionally maps variable names, e.g. for identifier flattening.
    """
    return _render(expr, rename)


def _render(expr: Expr, rename) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Var):
        return rename(expr.name) if rename else expr.name
    if isinstance(expr, Not):
        inner = _render(expr.operand, rename)
        if isinstance(expr.operand, BinOp):
            inner = f"({inner})"
        return f"!{inner}"
    prec = _PRECEDENCE[expr.op]
    left = _render_side(expr.left, prec, right_side=False, rename=rename)
    right = _render_side(expr.right, prec, right_side=True, rename=rename)
    joiner = f" {expr.op} " if expr.op in ("&&", "||") else expr.op
    return f"{left}{joiner}{right}"


def _render_side(child: Expr, parent_prec: int, right_side: bool, rename) -> str:
    text = _render(child, rename)
    if not isinstance(child, BinOp):
        return text
    child_prec = _PRECEDENCE[child.op]
    # Comparisons do not chain; every same-precedence binary operator here is
    # left-associative, so a right-side child of equal precedence needs parens.
    non_assoc = parent_prec == 3
    if child_prec < parent_prec or (child_prec == parent_prec and (right_side or non_assoc)):
        return f"({text})"
    return text


def variables(expr: Expr) -> tuple[str, ...]:
    """Variable names referenced by the expression, in first-use order."""
    seen: dict[str, None] = {}

    def walk(node: Expr) -> None:
        if isinstance(node, Var):
            seen.setdefault(node.name, None)
        elif isinstance(node, Not):
            walk(node.operand)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)

    walk(expr)
    return tuple(seen)


def type_of(expr: Expr, kinds: Mapping[str, str]) -> str:
    """Infer the kind of a well-typed expression, else raise ExprTypeError.

    `kinds` maps declared variable names to "integer" or "boolean".
    """
    if isinstance(expr, IntLit):
        return KIND_INTEGER
    if isinstance(expr, BoolLit):
        return KIND_BOOLEAN
    if isinstance(expr, Var):
        kind = kinds.get(expr.name)
        if kind is None:
            raise ExprTypeError(f"unknown variable '{expr.name}'")
        return kind
    if isinstance(expr, Not):
        if type_of(expr.operand, kinds) != KIND_BOOLEAN:
            raise ExprTypeError("'!' requires a boolean operand")
        return KIND_BOOLEAN
    left = type_of(expr.left, kinds)
    right = type_of(expr.right, kinds)
    if expr.op in ("&&", "||"):
        if left != KIND_BOOLEAN or right != KIND_BOOLEAN:
            raise ExprTypeError(f"'{expr.op}' requires boolean operands")
        return KIND_BOOLEAN
    if left != KIND_INTEGER or right != KIND_INTEGER:
        raise ExprTypeError(f"'{expr.op}' requires integer operands")
    return KIND_BOOLEAN if expr.op in _CMP_OPS else KIND_INTEGER


def eval_expr(expr: Expr, valuation: Mapping[str, int | bool]) -> int | bool:
    """Evaluate against a complete valuation; strict in both operands."""
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Var):
        try:
            return valuation[expr.name]
        except KeyError:
            raise EvalError(f"unbound variable '{expr.name}'") from None
    if isinstance(expr, Not):
        return not _expect_bool(eval_expr(expr.operand, valuation), "!")
    left = eval_expr(expr.left, valuation)
    right = eval_expr(expr.right, valuation)
    op = expr.op
    if op == "&&":
        return _expect_bool(left, op) and _expect_bool(right, op)
    if op == "||":
        return _expect_bool(left, op) or _expect_bool(right, op)
    left_int = _expect_int(left, op)
    right_int = _expect_int(right, op)
    if op == "+":
        return left_int + right_int
    if op == "-":
        return left_int - right_int
    if op == "*":
        return left_int * right_int
    if op == "<":
        return left_int < right_int
    if op == "<=":
        return left_int <= right_int
    if op == ">":
        return left_int > right_int
    if op == ">=":
        return left_int >= right_int
    if op == "==":
        return left_int == right_int
    return left_int != right_int


def _expect_bool(value, op: str) -> bool:
    if not isinstance(value, bool):
        raise EvalError(f"'{op}' applied to non-boolean value {value!r}")
    return value


def _expect_int(value, op: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise EvalError(f"'{op}' applied to non-integer value {value!r}")
    return value


def conjoin(left: Expr, right: Expr) -> BinOp:
    """Left-associated conjunction, as used by guard strengthening."""
    return BinOp("&&", left, right)
