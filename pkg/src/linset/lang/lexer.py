"""Tokenizer for the surface language."""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = {
    "struct", "procedure", "val", "var", "if", "else", "while", "return",
    "atomic", "assume", "assert", "skip", "lock", "unlock", "FAA", "CAS",
    "new", "true", "false", "inf", "null", "nobody", "me", "spec", "restart",
}

SYMBOLS = [
    "==", "!=", "<=", ">=", "&&", "||", ":=",
    "(", ")", "{", "}", "<", ">", "=", "!", ",", ";", ":", ".", "+", "-", "*",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'int' | 'kw' | 'sym' | 'eof'
    text: str
    line: int
    col: int


class LexError(Exception):
    def __init__(self, msg: str, file: str, line: int, col: int):
        super().__init__(f"{file}:{line}:{col}: {msg}")
        self.line, self.col = line, col


def tokenize(text: str, file: str = "<memory>") -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise LexError("unterminated comment", file, line, col)
            advance(end + 2 - i)
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, line, col))
            advance(j - i)
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                advance(len(sym))
                break
        else:
            raise LexError(f"unexpected character {ch!r}", file, line, col)
    toks.append(Token("eof", "", line, col))
    return toks
