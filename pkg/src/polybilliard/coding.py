"""Finite codings over the edge alphabet and over component-pair cells."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Sequence


class BSymbol(NamedTuple):
    """Cell ``(a, b, i, j)``: edge ``a`` to edge ``b``, point in component ``i``, right-translate in ``j``."""

    a: str
    b: str
    i: int
    j: int

    def __str__(self) -> str:
        return f"{self.a}>{self.b}:{self.i},{self.j}"


_BSYM = re.compile(r"^([^>:\s]+)>([^>:\s]+):(-?\d+),(-?\d+)$")


def parse_bsymbol(text: str) -> BSymbol:
    m = _BSYM.match(text)
    if m is None:
        raise ValueError(f"cannot parse cell symbol {text!r}")
    return BSymbol(m.group(1), m.group(2), int(m.group(3)), int(m.group(4)))


@dataclass(frozen=True)
class Coding:
    symbols: tuple
    alphabet: str = "A"
    terminated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if self.alphabet not in ("A", "B"):
            raise ValueError(f"unknown alphabet {self.alphabet!r}")
        if self.alphabet == "B" and not all(isinstance(s, BSymbol) for s in self.symbols):
            raise ValueError("B codings hold BSymbol entries")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return Coding(self.symbols[k], self.alphabet)
        return self.symbols[k]

    def __str__(self) -> str:
        return format_coding(self)


def format_coding(c: Coding) -> str:
    return " ".join(str(s) for s in c.symbols)


def parse_coding(text: str, alphabet: str = "A") -> Coding:
    toks = text.split()
    if alphabet == "B":
        return Coding(tuple(parse_bsymbol(t) for t in toks), "B")
    return Coding(tuple(toks), "A")


def as_symbols(c: Coding | Sequence) -> tuple:
    return c.symbols if isinstance(c, Coding) else tuple(c)
