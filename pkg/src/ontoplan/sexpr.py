"""Minimal s-expression reader with source positions."""

from __future__ import annotations

import re

__all__ = ["Symbol", "SExpr", "SExprSyntaxError", "read_all"]

_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


class SExprSyntaxError(ValueError):
    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class Symbol(str):
    """An atom that remembers where it was read."""

    line: int
    col: int

    def __new__(cls, text, line=0, col=0):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


class SExpr(list):
    """A parenthesised list; ``line``/``col`` point at the opening paren."""

    def __init__(self, items=(), line=0, col=0):
        super().__init__(items)
        self.line = line
        self.col = col


def _positions(text):
    line, col = 1, 1
    pos = 0
    for m in _TOKEN.finditer(text):
        if m.start() != pos:
            raise SExprSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        tok = m.group()
        yield tok, line, col
        nl = tok.count("\n")
        if nl:
            line += nl
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    if pos != len(text):
        raise SExprSyntaxError(f"unexpected character {text[pos]!r}", line, col)


def read_all(text):
    """Parse every top-level form in ``text``."""
    stack = [SExpr()]
    for tok, line, col in _positions(text):
        if tok[0].isspace() or tok[0] == ";":
            continue
        if tok == "(":
            stack.append(SExpr(line=line, col=col))
        elif tok == ")":
            if len(stack) == 1:
                raise SExprSyntaxError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(Symbol(tok, line, col))
    if len(stack) > 1:
        open_ = stack[-1]
        raise SExprSyntaxError("unclosed '('", open_.line, open_.col)
    return list(stack[0])
