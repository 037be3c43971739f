"""Access-policy language: lexer, recursive-descent parser, pretty-printer.

Grammar (keywords case-insensitive, attribute names case-sensitive):

    policy   := or_expr
    or_expr  := and_expr { "or" and_expr }
    and_expr := primary { "and" primary }
    primary  := INT "of" "(" policy { "," policy } ")"
              | IDENT CMP INT
              | IDENT [ "=" IDENT ]        -- atomic attribute, may be fused
              | "(" policy ")"
    CMP      := "<" | ">" | "<=" | ">=" | "="

`IDENT = INT` (all-digit right side) is a numeric equality; any other
right side fuses into one atomic attribute string such as
``Dev_family=Board_XYZ``.  Numeric values are unsigned and < 2^64.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import PolicySyntaxError, ThresholdError

MAX_NUMERIC = 2 ** 64

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"[0-9]+")
_KEYWORDS = {"and", "or", "of"}

CMP_OPS = ("<", ">", "<=", ">=", "=")


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class NumericCmp:
    name: str
    op: str  # one of CMP_OPS
    value: int


@dataclass(frozen=True)
class Gate:
    k: int
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("gate needs at least one child")
        if not 1 <= self.k <= len(self.children):
            raise ValueError(f"invalid threshold {self.k} of {len(self.children)}")


PolicyAst = Atom | NumericCmp | Gate


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT, INT, KW, CMP, LPAREN, RPAREN, COMMA, EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            word = m.group()
            kind = "KW" if word.lower() in _KEYWORDS else "IDENT"
            tokens.append(_Token(kind, word, line, col))
            i = m.end()
            col += len(word)
            continue
        m = _INT_RE.match(text, i)
        if m:
            tokens.append(_Token("INT", m.group(), line, col))
            i = m.end()
            col += len(m.group())
            continue
        two = text[i:i + 2]
        if two in ("<=", ">="):
            tokens.append(_Token("CMP", two, line, col))
            i += 2
            col += 2
            continue
        if ch in "<>=":
            tokens.append(_Token("CMP", ch, line, col))
        elif ch == "(":
            tokens.append(_Token("LPAREN", ch, line, col))
        elif ch == ")":
            tokens.append(_Token("RPAREN", ch, line, col))
        elif ch == ",":
            tokens.append(_Token("COMMA", ch, line, col))
        else:
            raise PolicySyntaxError(f"unexpected character {ch!r}", line, col)
        i += 1
        col += 1
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        if self.cur.kind != kind:
            self.fail(f"expected {what}, found {self.cur.text or 'end of input'!r}")
        return self.advance()

    def fail(self, message: str):
        raise PolicySyntaxError(message, self.cur.line, self.cur.col)

    def parse_int(self, tok: _Token) -> int:
        value = int(tok.text)
        if value >= MAX_NUMERIC:
            raise PolicySyntaxError(
                f"numeric literal {value} out of 64-bit range", tok.line, tok.col)
        return value

    def policy(self) -> PolicyAst:
        children = [self.and_expr()]
        while self.cur.kind == "KW" and self.cur.text.lower() == "or":
            self.advance()
            children.append(self.and_expr())
        if len(children) == 1:
            return children[0]
        return Gate(1, tuple(children))

    def and_expr(self) -> PolicyAst:
        children = [self.primary()]
        while self.cur.kind == "KW" and self.cur.text.lower() == "and":
            self.advance()
            children.append(self.primary())
        if len(children) == 1:
            return children[0]
        return Gate(len(children), tuple(children))

    def primary(self) -> PolicyAst:
        tok = self.cur
        if tok.kind == "LPAREN":
            self.advance()
            inner = self.policy()
            self.expect("RPAREN", "')'")
            return inner
        if tok.kind == "INT":
            k_tok = self.advance()
            kw = self.cur
            if not (kw.kind == "KW" and kw.text.lower() == "of"):
                self.fail("expected 'of' after threshold count")
            self.advance()
            self.expect("LPAREN", "'('")
            children = [self.policy()]
            while self.cur.kind == "COMMA":
                self.advance()
                children.append(self.policy())
            self.expect("RPAREN", "')'")
            k = self.parse_int(k_tok)
            if not 1 <= k <= len(children):
                raise ThresholdError(
                    f"threshold {k} of {len(children)} is out of range",
                    k_tok.line, k_tok.col)
            return Gate(k, tuple(children))
        if tok.kind == "IDENT":
            name_tok = self.advance()
            if self.cur.kind == "CMP":
                op_tok = self.advance()
                if op_tok.text == "=":
                    # "name = <digits>" is numeric equality, "name = token"
                    # fuses into one atomic attribute
                    if self.cur.kind == "INT":
                        value = self.parse_int(self.advance())
                        return NumericCmp(name_tok.text, "=", value)
                    rhs = self.expect("IDENT", "attribute value after '='")
                    return Atom(f"{name_tok.text}={rhs.text}")
                value_tok = self.expect("INT", "integer after comparison")
                return NumericCmp(name_tok.text, op_tok.text,
                                  self.parse_int(value_tok))
            return Atom(name_tok.text)
        self.fail(f"expected attribute or '(', found {tok.text or 'end of input'!r}")


def parse_policy(text: str) -> PolicyAst:
    parser = _Parser(_tokenize(text))
    ast = parser.policy()
    if parser.cur.kind != "EOF":
        parser.fail(f"unexpected trailing input {parser.cur.text!r}")
    return ast


def print_policy(ast: PolicyAst) -> str:
    """Canonical text form; parse_policy(print_policy(ast)) == ast."""
    if isinstance(ast, Atom):
        return ast.name
    if isinstance(ast, NumericCmp):
        return f"{ast.name} {ast.op} {ast.value}"
    n = len(ast.children)
    parts = [print_policy(c) for c in ast.children]
    if n == 1:
        return f"{ast.k} of ({parts[0]})"
    if ast.k == 1:
        return "(" + " or ".join(parts) + ")"
    if ast.k == n:
        return "(" + " and ".join(parts) + ")"
    return f"{ast.k} of (" + ", ".join(parts) + ")"
