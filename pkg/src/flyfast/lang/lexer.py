"""Tokenizer shared by the population DSL and the formula language."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LexicalError

IDENT = "IDENT"
NUMBER = "NUMBER"
PUNCT = "PUNCT"
EOF = "EOF"

# Longest match first.
_PUNCT = (":=", "::", "<=", ">=", "=>", "&&", "||",
          "+", "-", "*", "/", "(", ")", ".", ";", ",", "<", ">", "=",
          "[", "]", "!", "&", "|")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>""" + "|".join(re.escape(p) for p in _PUNCT) + r""")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def decode(source: str | bytes) -> str:
    if isinstance(source, (bytes, bytearray)):
        try:
            return bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LexicalError(f"input is not valid UTF-8 (byte offset {exc.start})", 1, 1) from None
    return source


def tokenize(source: str | bytes) -> list[Token]:
    """Split ``source`` into tokens, ending with a single EOF token.

    Whitespace and ``//`` comments are dropped. Positions are 1-based.
    """
    text = decode(source)
    tokens: list[Token] = []
    line, line_start, i, n = 1, 0, 0, len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise LexicalError(f"unexpected character {text[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "number":
            tokens.append(Token(NUMBER, m.group(), line, col))
        elif kind == "ident":
            tokens.append(Token(IDENT, m.group(), line, col))
        elif kind == "punct":
            tokens.append(Token(PUNCT, m.group(), line, col))
        i = m.end()
    tokens.append(Token(EOF, "", line, i - line_start + 1))
    return tokens
