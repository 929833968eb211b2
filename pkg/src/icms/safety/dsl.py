"""Boolean rule DSL: decision-makers write `expr -> severity` over window features.

Grammar (keywords case-sensitive, whitespace insignificant):

    rule       := expr "->" severity
    expr       := and_expr ("OR" and_expr)*
    and_expr   := not_expr ("AND" not_expr)*
    not_expr   := "NOT" not_expr | primary
    primary    := comparison | "(" expr ")"
    comparison := ident cmp number
    cmp        := ">" | ">=" | "<" | "<=" | "==" | "!="
    ident      := avg_speed | vehicle_count | speeding_count
                | pedestrian_count | hour_of_day
    severity   := "warning" | "danger"

A comparison touching an absent feature (avg_speed in an empty window)
evaluates to false; it never errors, so an empty street cannot fire a speed
rule. NOT/AND/OR are standard boolean on top of that.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Mapping, Optional, Union

from ..core import Severity
from ..errors import RuleSyntaxError, UnknownIdentifierError

FEATURE_IDENTIFIERS = (
    "avg_speed",
    "vehicle_count",
    "speeding_count",
    "pedestrian_count",
    "hour_of_day",
)

COMPARATORS = (">", ">=", "<", "<=", "==", "!=")

MAX_DEPTH = 32


@dataclass(frozen=True)
class Comparison:
    ident: str
    op: str
    value: float

    depth = 1


@dataclass(frozen=True)
class Not:
    operand: "Expr"

    @property
    def depth(self) -> int:
        return 1 + self.operand.depth


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"

    @property
    def depth(self) -> int:
        return 1 + max(self.left.depth, self.right.depth)


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"

    @property
    def depth(self) -> int:
        return 1 + max(self.left.depth, self.right.depth)


Expr = Union[Comparison, Not, And, Or]


@dataclass(frozen=True)
class ParsedRule:
    expression: Expr
    severity: Severity


@dataclass(frozen=True)
class Rule:
    """A named, toggleable rule as managed through the API."""

    rule_id: str
    name: str
    text: str
    parsed: ParsedRule
    enabled: bool = True

    @property
    def severity(self) -> Severity:
        return self.parsed.severity


@dataclass(frozen=True)
class _Token:
    kind: str   # WORD | NUMBER | CMP | LPAREN | RPAREN | ARROW | EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<cmp>>=|<=|==|!=|>|<)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<lparen>\()
  | (?P<rparen>\))
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> Iterator[_Token]:
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind != "ws":
            yield _Token(kind.upper(), lexeme, line, col)
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    yield _Token("EOF", "", line, col)


class _Parser:
    def __init__(self, text: str):
        self._tokens = list(_tokenize(text))
        self._pos = 0

    @property
    def _cur(self) -> _Token:
        return self._tokens[self._pos]

    def _advance(self) -> _Token:
        tok = self._cur
        self._pos += 1
        return tok

    def _fail(self, expected: str) -> RuleSyntaxError:
        tok = self._cur
        found = f"'{tok.text}'" if tok.kind != "EOF" else "end of input"
        return RuleSyntaxError(f"expected {expected}, found {found}", tok.line, tok.column)

    def parse_rule(self) -> ParsedRule:
        expr = self._expr(0)
        if not (self._cur.kind == "ARROW"):
            raise self._fail("'->'")
        self._advance()
        tok = self._cur
        if tok.kind != "WORD" or tok.text not in ("warning", "danger"):
            raise self._fail("severity 'warning' or 'danger'")
        self._advance()
        if self._cur.kind != "EOF":
            raise self._fail("end of input")
        if expr.depth > MAX_DEPTH:
            tok0 = self._tokens[0]
            raise RuleSyntaxError(
                f"expression depth exceeds the bound of {MAX_DEPTH}", tok0.line, tok0.column
            )
        return ParsedRule(expression=expr, severity=Severity(tok.text))

    def _expr(self, nesting: int) -> Expr:
        node = self._and_expr(nesting)
        while self._cur.kind == "WORD" and self._cur.text == "OR":
            self._advance()
            node = Or(node, self._and_expr(nesting))
        return node

    def _and_expr(self, nesting: int) -> Expr:
        node = self._not_expr(nesting)
        while self._cur.kind == "WORD" and self._cur.text == "AND":
            self._advance()
            node = And(node, self._not_expr(nesting))
        return node

    def _not_expr(self, nesting: int) -> Expr:
        if self._cur.kind == "WORD" and self._cur.text == "NOT":
            self._check_nesting(nesting)
            self._advance()
            return Not(self._not_expr(nesting + 1))
        return self._primary(nesting)

    def _primary(self, nesting: int) -> Expr:
        if self._cur.kind == "LPAREN":
            self._check_nesting(nesting)
            self._advance()
            node = self._expr(nesting + 1)
            if self._cur.kind != "RPAREN":
                raise self._fail("')'")
            self._advance()
            return node
        return self._comparison()

    def _comparison(self) -> Comparison:
        tok = self._cur
        if tok.kind != "WORD":
            raise self._fail("a feature identifier")
        if tok.text in ("AND", "OR", "NOT", "warning", "danger"):
            raise self._fail("a feature identifier")
        self._advance()
        if self._cur.kind != "CMP":
            raise self._fail("a comparison operator")
        op = self._advance().text
        if self._cur.kind != "NUMBER":
            raise self._fail("a number")
        value = float(self._advance().text)
        # membership is checked only once the comparison is structurally
        # sound, so "speed >> 5" points at the stray '>' rather than the name
        if tok.text not in FEATURE_IDENTIFIERS:
            raise UnknownIdentifierError(tok.text, tok.line, tok.column)
        return Comparison(ident=tok.text, op=op, value=value)

    def _check_nesting(self, nesting: int) -> None:
        # bounds parser recursion on inputs like a kilobyte of '(' or 'NOT ';
        # 4x the AST bound leaves room for redundant parentheses
        if nesting >= 4 * MAX_DEPTH:
            tok = self._cur
            raise RuleSyntaxError(
                f"expression nesting exceeds the parser bound of {4 * MAX_DEPTH}",
                tok.line,
                tok.column,
            )


def parse_rule(text: str) -> ParsedRule:
    """Parse rule text into its AST; raises RuleSyntaxError with line/column."""
    return _Parser(text).parse_rule()


_PRECEDENCE = {Or: 1, And: 2, Not: 3, Comparison: 4}


def _format_number(value: float) -> str:
    # the grammar has no exponent form, so positional notation is mandatory
    if value == int(value):
        return str(int(value))
    text = repr(value)
    if "e" in text or "E" in text:
        return format(Decimal(text), "f")
    return text


def _print_expr(node: Expr, parent_prec: int, right_side: bool) -> str:
    prec = _PRECEDENCE[type(node)]
    if isinstance(node, Comparison):
        text = f"{node.ident} {node.op} {_format_number(node.value)}"
    elif isinstance(node, Not):
        text = f"NOT {_print_expr(node.operand, prec, False)}"
    else:
        word = "AND" if isinstance(node, And) else "OR"
        text = (
            f"{_print_expr(node.left, prec, False)} {word} "
            f"{_print_expr(node.right, prec, True)}"
        )
    # parens keep shape: lower precedence below higher, and right-nested
    # chains of the same operator (the grammar is left-associative)
    if prec < parent_prec or (right_side and prec == parent_prec):
        return f"({text})"
    return text


def pretty_print(rule: ParsedRule) -> str:
    """Canonical text form; parse(pretty_print(r)) reproduces r exactly."""
    return f"{_print_expr(rule.expression, 0, False)} -> {rule.severity.value}"


def eval_expr(node: Expr, features: Mapping[str, Optional[float]]) -> bool:
    if isinstance(node, Comparison):
        actual = features.get(node.ident)
        if actual is None:
            return False
        if node.op == ">":
            return actual > node.value
        if node.op == ">=":
            return actual >= node.value
        if node.op == "<":
            return actual < node.value
        if node.op == "<=":
            return actual <= node.value
        if node.op == "==":
            return actual == node.value
        return actual != node.value
    if isinstance(node, Not):
        return not eval_expr(node.operand, features)
    if isinstance(node, And):
        return eval_expr(node.left, features) and eval_expr(node.right, features)
    return eval_expr(node.left, features) or eval_expr(node.right, features)
