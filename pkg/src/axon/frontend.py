"""Lexer and recursive-descent parser for text Axon.

The parser builds an AstProgram and nothing more: no type checking, no
desugaring.  Operator precedence, loosest first: ||, &&, prefix !,
comparisons, + -, * / %, prefix -.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from axon.ast import (
    ArrayAssign, Assign, AstProgram, AxonError, Binary, BoolLit, Convert, Decl,
    FloatLit, Goto, If, Index, IntLit, Labeled, Print, PrintString, SourceSpan,
    Unary, Var, While,
)
from axon.values import INT_MAX

KEYWORDS = frozenset({
    "int", "float", "bool", "while", "if", "else", "goto", "true", "false",
    "printString", "printInt", "printFloat", "printBool", "intToFloat", "floatToInt",
})
PUNCT = ("&&", "||", "==", "!=", "<=", ">=", "=", "<", ">", "+", "-", "*", "/",
         "%", "!", "(", ")", "[", "]", "{", "}", ";", ":")


class LexError(AxonError):
    def __init__(self, line, col, message):
        super().__init__(message, SourceSpan(line, col, line, col))
        self.line, self.col = line, col


class ParseError(AxonError):
    def __init__(self, span, expected, found):
        super().__init__(f"expected {expected}, found {found}", span)
        self.expected, self.found = expected, found


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | int | float | string | punct | eof
    lexeme: str
    line: int
    col: int
    value: object = None

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.col, self.line, self.col + max(len(self.lexeme), 1) - 1)


_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def lex(source: str) -> list:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c.isascii() and (c.isalpha() or c == "_"):
            m = _IDENT.match(source, i)
            word = m.group()
            tokens.append(Token("keyword" if word in KEYWORDS else "ident", word, line, col))
        elif c.isascii() and c.isdigit():
            m = _NUMBER.match(source, i)
            word = m.group()
            end = m.end()
            if end < n and (source[end].isalnum() or source[end] in "_."):
                raise LexError(line, col, f"malformed number '{source[i:end + 1]}'")
            if m.group(1) or m.group(2):
                val = float(word)
                if math.isinf(val):
                    raise LexError(line, col, f"float literal '{word}' out of range")
                tokens.append(Token("float", word, line, col, val))
            else:
                val = int(word)
                if val > INT_MAX:
                    raise LexError(line, col, f"integer literal '{word}' out of range")
                tokens.append(Token("int", word, line, col, val))
        elif c == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n or source[j] == "\n":
                    raise LexError(line, col, "unterminated string literal")
                ch = source[j]
                if ch == '"':
                    break
                if ch == "\\":
                    if j + 1 >= n or source[j + 1] not in _ESCAPES:
                        raise LexError(line, col + (j - i), "bad escape in string literal")
                    buf.append(_ESCAPES[source[j + 1]])
                    j += 2
                    continue
                buf.append(ch)
                j += 1
            word = source[i:j + 1]
            tokens.append(Token("string", word, line, col, "".join(buf)))
        else:
            for p in PUNCT:
                if source.startswith(p, i):
                    word = p
                    tokens.append(Token("punct", p, line, col))
                    break
            else:
                raise LexError(line, col, f"unexpected character {c!r}")
        i += len(word)
        col += len(word)
    tokens.append(Token("eof", "", line, col))
    return tokens


def _join(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    return SourceSpan(a.start_line, a.start_col, b.end_line, b.end_col)


_CMP = ("<", "<=", ">", ">=", "==", "!=")
_PRINTS = {"printInt": "int", "printFloat": "float", "printBool": "bool"}


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, lexeme, kind=None) -> bool:
        t = self.tok
        return t.lexeme == lexeme and t.kind in ((kind,) if kind else ("punct", "keyword"))

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, expected):
        t = self.tok
        raise ParseError(t.span, expected, repr(t.lexeme) if t.kind != "eof" else "end of input")

    def expect(self, lexeme) -> Token:
        if not self.at(lexeme):
            self.fail(f"'{lexeme}'")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail("identifier")
        return self.advance()

    # program := decl* stmt*
    def program(self) -> AstProgram:
        decls = []
        while self.tok.lexeme in ("int", "float", "bool") and self.tok.kind == "keyword":
            decls.append(self.decl())
        body = []
        while self.tok.kind != "eof":
            body.append(self.stmt())
        return AstProgram(tuple(decls), tuple(body))

    def decl(self) -> Decl:
        t = self.advance()
        length = None
        if self.at("["):
            self.advance()
            if self.tok.kind != "int":
                self.fail("array length")
            length = self.advance().value
            self.expect("]")
        name = self.ident()
        end = self.expect(";")
        return Decl(name.lexeme, t.lexeme, length, _join(t.span, end.span))

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("'}'")
            stmts.append(self.stmt())
        self.advance()
        return tuple(stmts)

    def stmt(self):
        t = self.tok
        if t.kind == "keyword":
            if t.lexeme == "while":
                self.advance()
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                body = self.block()
                return While(cond, body, _join(t.span, self.toks[self.pos - 1].span))
            if t.lexeme == "if":
                self.advance()
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                then = self.block()
                orelse = None
                if self.at("else"):
                    self.advance()
                    orelse = self.block()
                return If(cond, then, orelse, _join(t.span, self.toks[self.pos - 1].span))
            if t.lexeme == "printString":
                self.advance()
                if self.tok.kind != "string":
                    self.fail("string literal")
                text = self.advance().value
                end = self.expect(";")
                return PrintString(text, _join(t.span, end.span))
            if t.lexeme in _PRINTS:
                self.advance()
                e = self.expr()
                end = self.expect(";")
                return Print(_PRINTS[t.lexeme], e, _join(t.span, end.span))
            if t.lexeme == "goto":
                self.advance()
                label = self.ident()
                end = self.expect(";")
                return Goto(label.lexeme, _join(t.span, end.span))
            self.fail("statement")
        if t.kind != "ident":
            self.fail("statement")
        if self.peek().lexeme == ":" and self.peek().kind == "punct":
            self.advance()
            self.advance()
            inner = self.stmt()
            return Labeled(t.lexeme, inner, _join(t.span, inner.span))
        self.advance()
        if self.at("["):
            self.advance()
            idx = self.expr()
            self.expect("]")
            self.expect("=")
            val = self.expr()
            end = self.expect(";")
            return ArrayAssign(t.lexeme, idx, val, _join(t.span, end.span))
        self.expect("=")
        val = self.expr()
        end = self.expect(";")
        return Assign(t.lexeme, val, _join(t.span, end.span))

    # expression levels
    def expr(self):
        return self.or_expr()

    def _left_assoc(self, ops, sub):
        lhs = sub()
        while self.tok.kind == "punct" and self.tok.lexeme in ops:
            op = self.advance().lexeme
            rhs = sub()
            lhs = Binary(op, lhs, rhs, _join(lhs.span, rhs.span))
        return lhs

    def or_expr(self):
        return self._left_assoc(("||",), self.and_expr)

    def and_expr(self):
        return self._left_assoc(("&&",), self.not_expr)

    def not_expr(self):
        if self.at("!"):
            t = self.advance()
            e = self.not_expr()
            return Unary("!", e, _join(t.span, e.span))
        return self.cmp_expr()

    def cmp_expr(self):
        return self._left_assoc(_CMP, self.add_expr)

    def add_expr(self):
        return self._left_assoc(("+", "-"), self.mul_expr)

    def mul_expr(self):
        return self._left_assoc(("*", "/", "%"), self.unary_expr)

    def unary_expr(self):
        if self.at("-"):
            t = self.advance()
            e = self.unary_expr()
            return Unary("-", e, _join(t.span, e.span))
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return IntLit(t.value, t.span)
        if t.kind == "float":
            self.advance()
            return FloatLit(t.value, t.span)
        if t.kind == "keyword" and t.lexeme in ("true", "false"):
            self.advance()
            return BoolLit(t.lexeme == "true", t.span)
        if t.kind == "keyword" and t.lexeme in ("intToFloat", "floatToInt"):
            self.advance()
            self.expect("(")
            e = self.expr()
            end = self.expect(")")
            return Convert(t.lexeme, e, _join(t.span, end.span))
        if t.kind == "ident":
            self.advance()
            if self.at("["):
                self.advance()
                idx = self.expr()
                end = self.expect("]")
                return Index(t.lexeme, idx, _join(t.span, end.span))
            return Var(t.lexeme, t.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("!"):
            # '!' inside an operand position: (a < !b) is accepted
            return self.not_expr()
        self.fail("expression")


def parse(tokens: list) -> AstProgram:
    p = _Parser(tokens)
    try:
        return p.program()
    except RecursionError:
        raise ParseError(p.tok.span, "shallower nesting", "expression nested too deeply")


def parse_source(source: str) -> AstProgram:
    return parse(lex(source))
