"""Parenthesized designator queries: parse, canonical print, and match.

Grammar (whitespace-separated tokens, atoms match ``[A-Za-z0-9_.:-]+``)::

    query       := '(' VERB designator range? ')'
    designator  := '(' ARTICLE NOUN pair+ ')'
    pair        := '(' KEY (ATOM | designator) ')'
    range       := '(' 'between' NUMBER NUMBER ')'

Example::

    (detect (an object (shape flat) (color black)))

The article and noun are accepted for readability and carry no meaning; the
canonical printer always emits ``an object``.  A pair value may itself be a
designator, describing a nested entity; when matching, nested constraints are
flattened into dot-joined key paths (``location.name``).  The optional
``between`` clause restricts a query to objects observed inside a closed
timestamp interval.

Parsing reports the 1-based character position of the first offending token.
``parse_query(format_query(q))`` reproduces ``q`` exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .core import BeliefObject
from .errors import QueryParseError, ValidationError

VERBS = ("detect",)

_ATOM_RE = re.compile(r"[A-Za-z0-9_.:\-]+")
_NUM_RE = re.compile(r"-?\d+(\.\d+)?([eE][+-]?\d+)?$")

# A designator is an ordered map from key to either a plain symbol or a
# nested designator.
Designator = dict[str, "str | Designator"]

# View used for matching: (object, key, at) -> (symbol, confidence) or None.
SymbolView = Callable[[BeliefObject, str, float], "tuple[str, float] | None"]


@dataclass
class Query:
    """A parsed detect query."""

    verb: str
    designator: Designator
    t_min: float | None = None
    t_max: float | None = None
    received_at: float | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.verb not in VERBS:
            raise ValidationError(f"unknown verb {self.verb!r}")
        if not self.designator:
            raise ValidationError("query designator is empty")
        if (self.t_min is None) != (self.t_max is None):
            raise ValidationError("timestamp range needs both endpoints")
        if self.t_min is not None and self.t_min > self.t_max:
            raise ValidationError(
                f"empty timestamp range [{self.t_min}, {self.t_max}]")

    def constraints(self) -> list[tuple[str, str]]:
        """Flattened (dot-joined key path, symbol) pairs, in query order."""
        out: list[tuple[str, str]] = []

        def walk(prefix: str, node: Designator) -> None:
            for key, value in node.items():
                path = f"{prefix}.{key}" if prefix else key
                if isinstance(value, dict):
                    walk(path, value)
                else:
                    out.append((path, value))

        walk("", self.designator)
        return out

    def keys(self) -> list[str]:
        """Constraint key paths, deduplicated, in query order."""
        seen: list[str] = []
        for path, _ in self.constraints():
            if path not in seen:
                seen.append(path)
        return seen


class _Token:
    __slots__ = ("text", "pos")

    def __init__(self, text: str, pos: int) -> None:
        self.text = text
        self.pos = pos  # 1-based character offset


def _tokenize(text: str) -> Iterator[_Token]:
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()":
            yield _Token(ch, i + 1)
            i += 1
            continue
        m = _ATOM_RE.match(text, i)
        if m is None:
            raise QueryParseError(f"unexpected character {ch!r}", column=i + 1)
        yield _Token(m.group(0), i + 1)
        i = m.end()


class _Parser:
    def __init__(self, text: str, allowed_keys: set[str] | None) -> None:
        self.tokens = list(_tokenize(text))
        self.pos = 0
        self.allowed_keys = allowed_keys

    def _fail(self, message: str, token: _Token | None = None) -> None:
        column = token.pos if token is not None else (
            self.tokens[-1].pos if self.tokens else 1)
        raise QueryParseError(message, column=column)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> _Token:
        tok = self.peek()
        if tok is None:
            self._fail("unexpected end of query"
                       + (f", expected {expected!r}" if expected else ""))
        self.pos += 1
        if expected is not None and tok.text != expected:
            self._fail(f"expected {expected!r}, got {tok.text!r}", tok)
        return tok

    def atom(self, what: str) -> _Token:
        tok = self.take()
        if tok.text in "()":
            self._fail(f"expected {what}, got {tok.text!r}", tok)
        return tok

    def parse(self) -> Query:
        self.take("(")
        verb = self.atom("a verb")
        if verb.text not in VERBS:
            self._fail(f"unknown verb {verb.text!r}", verb)
        designator = self.designator()
        t_min = t_max = None
        tok = self.peek()
        if tok is not None and tok.text == "(":
            t_min, t_max = self.range_clause()
        self.take(")")
        trailing = self.peek()
        if trailing is not None:
            self._fail(f"trailing input {trailing.text!r}", trailing)
        return Query(verb=verb.text, designator=designator,
                     t_min=t_min, t_max=t_max)

    def designator(self) -> Designator:
        opener = self.take("(")
        self.atom("an article")
        self.atom("a noun")
        pairs: Designator = {}
        while True:
            tok = self.peek()
            if tok is None:
                self._fail("unclosed designator", opener)
            if tok.text == ")":
                self.take(")")
                break
            self.pair(pairs)
        if not pairs:
            self._fail("designator has no key-value pairs", opener)
        return pairs

    def pair(self, pairs: Designator) -> None:
        self.take("(")
        key = self.atom("a key")
        if self.allowed_keys is not None and key.text not in self.allowed_keys:
            self._fail(f"unknown key {key.text!r}", key)
        if key.text in pairs:
            self._fail(f"duplicate key {key.text!r}", key)
        tok = self.peek()
        if tok is None:
            self._fail("unexpected end of query after key", key)
        if tok.text == "(":
            value: str | Designator = self.designator()
        else:
            value = self.atom("a value").text
        pairs[key.text] = value
        self.take(")")

    def range_clause(self) -> tuple[float, float]:
        self.take("(")
        word = self.atom("'between'")
        if word.text != "between":
            self._fail(f"expected 'between', got {word.text!r}", word)
        lo = self.number()
        hi = self.number()
        self.take(")")
        if lo > hi:
            self._fail(f"empty timestamp range [{lo}, {hi}]", word)
        return lo, hi

    def number(self) -> float:
        tok = self.atom("a number")
        if not _NUM_RE.match(tok.text):
            self._fail(f"expected a number, got {tok.text!r}", tok)
        value = float(tok.text)
        if not math.isfinite(value):
            self._fail(f"non-finite number {tok.text!r}", tok)
        return value


def parse_query(text: str, allowed_keys: set[str] | None = None) -> Query:
    """Parse query text; raises :class:`QueryParseError` with a position.

    ``allowed_keys`` optionally restricts designator keys to a registered
    set; by default any atom is accepted as a key.
    """
    parser = _Parser(text, allowed_keys)
    if parser.peek() is None:
        raise QueryParseError("empty query", column=1)
    return parser.parse()


def _format_number(value: float) -> str:
    return repr(float(value))


def _format_designator(node: Designator) -> str:
    parts = ["(an object"]
    for key, value in node.items():
        if isinstance(value, dict):
            parts.append(f"({key} {_format_designator(value)})")
        else:
            parts.append(f"({key} {value})")
    return " ".join(parts) + ")"


def format_query(query: Query) -> str:
    """Canonical text form; inverse of :func:`parse_query`."""
    body = f"({query.verb} {_format_designator(query.designator)}"
    if query.t_min is not None:
        body += (f" (between {_format_number(query.t_min)}"
                 f" {_format_number(query.t_max)})")
    return body + ")"


def match(query: Query, obj: BeliefObject, at: float,
          view: SymbolView) -> bool:
    """Whether an object satisfies every constraint of a query at a time.

    ``view`` supplies the object's aggregated symbol per key path; a missing
    aggregate means no match.  Symbols compare case-insensitively.  The
    query's timestamp range, when present, additionally requires the object
    to have been observed inside the range.
    """
    if query.t_min is not None:
        if not any(query.t_min <= occ.timestamp <= query.t_max
                   for occ in obj.history):
            return False
    for path, wanted in query.constraints():
        answer = view(obj, path, at)
        if answer is None:
            return False
        symbol, _ = answer
        if symbol.casefold() != wanted.casefold():
            return False
    return True
