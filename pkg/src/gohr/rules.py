"""Rule language: lexer, parser, validator, and canonical formatter.

A rule file is UTF-8 text with one rule line per physical line.  A rule
line is an optional integer line count followed by one or more atoms,
each a parenthesized 5-tuple:

    (count, shapes, colors, positions, buckets)

``*`` is a wildcard in the count/shapes/colors/positions fields.  Multiple
values are grouped in square brackets.  The buckets field holds a bucket
expression: a literal 0-3, a bracketed list of expressions, one of the
history registers ``p``/``pc``/``ps`` (optionally with ``+n``/``-n``,
evaluated modulo 4), or ``nearby``/``remotest``.  ``#`` starts a comment;
blank lines are ignored.  Identifiers are case-insensitive and
canonicalized to lowercase.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

from .errors import LexError, ParseError, ValidationError

RESERVED_WORDS = ("p", "pc", "ps", "nearby", "remotest")

NUM_BUCKETS = 4
NUM_CELLS = 36

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"[0-9]+")
_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class DuplicateValueWarning(UserWarning):
    """Duplicate entry inside a bracketed list (input is deduplicated)."""


@dataclass(frozen=True)
class FeatureSet:
    """Ordered shape and color vocabularies for an experiment.

    The order given here is canonical: it fixes feature indexing,
    serialization order, and the layout of learned weight vectors.
    """

    shapes: tuple[str, ...] = ("circle", "triangle", "square", "star")
    colors: tuple[str, ...] = ("red", "blue", "black", "yellow")

    def __post_init__(self):
        for kind, names in (("shape", self.shapes), ("color", self.colors)):
            if not names:
                raise ValidationError(f"{kind} list must be non-empty")
            if len(set(names)) != len(names):
                raise ValidationError(f"duplicate {kind} names: {names}")
            for name in names:
                if not _NAME_RE.match(name):
                    raise ValidationError(
                        f"{kind} name {name!r} is not a lowercase identifier")
                if name in RESERVED_WORDS:
                    raise ValidationError(f"{kind} name {name!r} is reserved")

    def shape_index(self, name: str) -> int:
        return self.shapes.index(name)

    def color_index(self, name: str) -> int:
        return self.colors.index(name)


DEFAULT_FEATURES = FeatureSet()


# --- bucket expressions -----------------------------------------------------

@dataclass(frozen=True)
class BucketLit:
    value: int


@dataclass(frozen=True)
class BucketVar:
    name: str  # "p" | "pc" | "ps"


@dataclass(frozen=True)
class BucketArith:
    var: str
    offset: int  # stored as written; evaluation is modulo 4


@dataclass(frozen=True)
class Nearby:
    pass


@dataclass(frozen=True)
class Remotest:
    pass


@dataclass(frozen=True)
class BucketList:
    items: tuple  # non-empty, flat (no nested lists)


BucketExpr = BucketLit | BucketVar | BucketArith | Nearby | Remotest | BucketList


@dataclass(frozen=True)
class Atom:
    """One (count, shapes, colors, positions, buckets) mapping.

    ``None`` means wildcard (unmetered, for the count field).
    """

    count: int | None
    shapes: tuple[str, ...] | None
    colors: tuple[str, ...] | None
    positions: tuple[int, ...] | None
    buckets: BucketExpr


@dataclass(frozen=True)
class RuleLine:
    count: int | None  # None = line not metered
    atoms: tuple[Atom, ...]


@dataclass(frozen=True)
class RuleSpec:
    lines: tuple[RuleLine, ...]
    source_name: str = field(default="<string>", compare=False)


# --- lexer -------------------------------------------------------------------

_PUNCT = {
    "(": "LPAREN",
    ")": "RPAREN",
    "[": "LBRACKET",
    "]": "RBRACKET",
    ",": "COMMA",
    "*": "STAR",
    "+": "PLUS",
    "-": "MINUS",
}


@dataclass(frozen=True)
class Token:
    kind: str
    value: str | int | None
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Lex rule text into tokens.

    Line breaks are significant (they delimit rule lines) and appear as
    NEWLINE tokens between token-bearing lines.  Comments and blank lines
    produce nothing.  Raises LexError for any character outside the
    grammar.
    """
    tokens: list[Token] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        line_tokens: list[Token] = []
        col = 0
        while col < len(line):
            ch = line[col]
            if ch in " \t\r":
                col += 1
                continue
            if ch in _PUNCT:
                line_tokens.append(Token(_PUNCT[ch], ch, lineno, col + 1))
                col += 1
                continue
            m = _INT_RE.match(line, col)
            if m:
                line_tokens.append(Token("INT", int(m.group()), lineno, col + 1))
                col = m.end()
                continue
            m = _IDENT_RE.match(line, col)
            if m:
                line_tokens.append(
                    Token("IDENT", m.group().lower(), lineno, col + 1))
                col = m.end()
                continue
            raise LexError(f"illegal character {ch!r}", lineno, col + 1)
        if line_tokens:
            if tokens:
                tokens.append(Token("NEWLINE", None, lineno, 1))
            tokens.extend(line_tokens)
    return tokens


# --- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[Token], features: FeatureSet):
        self.tokens = tokens
        self.pos = 0
        self.features = features

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of rule text")
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(
                f"expected {kind}, found {tok.value!r} "
                f"at {tok.line}:{tok.column}")
        return tok

    def at(self, kind: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind

    # rule := line (NEWLINE line)*
    def parse_spec(self, source_name: str) -> RuleSpec:
        lines = [self.parse_line()]
        while self.at("NEWLINE"):
            self.next()
            lines.append(self.parse_line())
        if self.peek() is not None:
            tok = self.peek()
            raise ParseError(
                f"unexpected {tok.value!r} at {tok.line}:{tok.column}")
        return RuleSpec(lines=tuple(lines), source_name=source_name)

    # line := INT? atom+
    def parse_line(self) -> RuleLine:
        count = None
        if self.at("INT"):
            tok = self.next()
            count = _positive_count(tok)
        atoms = [self.parse_atom()]
        while self.at("LPAREN"):
            atoms.append(self.parse_atom())
        return RuleLine(count=count, atoms=tuple(atoms))

    # atom := "(" count "," shapes "," colors "," positions "," buckets ")"
    def parse_atom(self) -> Atom:
        self.expect("LPAREN")
        count = self.parse_count()
        self.expect("COMMA")
        shapes = self.parse_names(self.features.shapes, "shape")
        self.expect("COMMA")
        colors = self.parse_names(self.features.colors, "color")
        self.expect("COMMA")
        positions = self.parse_positions()
        self.expect("COMMA")
        buckets = self.parse_buckets()
        self.expect("RPAREN")
        return Atom(count, shapes, colors, positions, buckets)

    def parse_count(self) -> int | None:
        if self.at("STAR"):
            self.next()
            return None
        if self.at("INT"):
            return _positive_count(self.next())
        tok = self.peek()
        raise ParseError(
            f"count field must be '*' or a positive integer "
            f"(found {tok.value!r} at {tok.line}:{tok.column})"
            if tok else "count field missing")

    def parse_names(self, vocabulary: tuple[str, ...],
                    kind: str) -> tuple[str, ...] | None:
        if self.at("STAR"):
            self.next()
            return None
        names = self._field_values(
            lambda: self._one_name(vocabulary, kind), kind)
        return tuple(names)

    def _one_name(self, vocabulary: tuple[str, ...], kind: str) -> str:
        tok = self.next()
        if tok.kind != "IDENT":
            raise ParseError(
                f"{kind} field expects a name, found {tok.value!r} "
                f"at {tok.line}:{tok.column}")
        if tok.value not in vocabulary:
            raise ValidationError(
                f"unknown {kind} {tok.value!r} (known: {', '.join(vocabulary)})")
        return tok.value

    def parse_positions(self) -> tuple[int, ...] | None:
        if self.at("STAR"):
            self.next()
            return None
        labels = self._field_values(self._one_position, "position")
        return tuple(labels)

    def _one_position(self) -> int:
        tok = self.next()
        if tok.kind != "INT":
            raise ParseError(
                f"position field expects a cell label, found {tok.value!r} "
                f"at {tok.line}:{tok.column}")
        if not 1 <= tok.value <= NUM_CELLS:
            raise ValidationError(
                f"cell label {tok.value} outside 1..{NUM_CELLS}")
        return tok.value

    def parse_buckets(self) -> BucketExpr:
        if self.at("LBRACKET"):
            items = self._field_values(self._one_bucket_expr, "bucket")
            return BucketList(tuple(items))
        return self._one_bucket_expr()

    def _one_bucket_expr(self) -> BucketExpr:
        tok = self.next()
        if tok.kind == "INT":
            if not 0 <= tok.value < NUM_BUCKETS:
                raise ValidationError(
                    f"bucket literal {tok.value} outside 0..{NUM_BUCKETS - 1}")
            return BucketLit(tok.value)
        if tok.kind == "LPAREN":
            inner = self._one_bucket_expr()
            self.expect("RPAREN")
            return inner
        if tok.kind == "IDENT":
            if tok.value == "nearby":
                return Nearby()
            if tok.value == "remotest":
                return Remotest()
            if tok.value in ("p", "pc", "ps"):
                if self.at("PLUS") or self.at("MINUS"):
                    sign = 1 if self.next().kind == "PLUS" else -1
                    off = self.expect("INT")
                    return BucketArith(tok.value, sign * off.value)
                return BucketVar(tok.value)
            raise ValidationError(
                f"{tok.value!r} is not a bucket expression (want a literal "
                f"0..3, {', '.join(RESERVED_WORDS)}, or arithmetic on p/pc/ps)")
        raise ParseError(
            f"bucket field expects an expression, found {tok.value!r} "
            f"at {tok.line}:{tok.column}")

    def _field_values(self, parse_one, kind: str) -> list:
        """Parse a bare value or a non-empty bracketed list, deduplicated."""
        if not self.at("LBRACKET"):
            return [parse_one()]
        self.next()
        if self.at("RBRACKET"):
            raise ValidationError(f"empty {kind} list is not allowed")
        values = [parse_one()]
        while self.at("COMMA"):
            self.next()
            values.append(parse_one())
        self.expect("RBRACKET")
        deduped: list = []
        for v in values:
            if v in deduped:
                warnings.warn(
                    f"duplicate {kind} value {v!r} in list; deduplicated",
                    DuplicateValueWarning, stacklevel=4)
            else:
                deduped.append(v)
        return deduped


def _positive_count(tok: Token) -> int:
    if tok.value < 1:
        raise ValidationError(
            f"count must be at least 1, found {tok.value} "
            f"at {tok.line}:{tok.column}")
    return tok.value


def parse_rule(text: str, features: FeatureSet = DEFAULT_FEATURES,
               source_name: str = "<string>") -> RuleSpec:
    """Parse rule text into a RuleSpec validated against ``features``."""
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("rule text contains no rule lines")
    return _Parser(tokens, features).parse_spec(source_name)


def load_rule(path, features: FeatureSet = DEFAULT_FEATURES) -> RuleSpec:
    """Read and parse a .rule file."""
    from pathlib import Path

    p = Path(path)
    return parse_rule(p.read_text(encoding="utf-8"), features,
                      source_name=p.stem)


# --- formatter ---------------------------------------------------------------

def format_rule(spec: RuleSpec) -> str:
    """Render a RuleSpec as canonical rule text.

    ``parse_rule(format_rule(s))`` is structurally equal to ``s``;
    in particular single-element bracketed bucket lists stay bracketed.
    """
    return "\n".join(_format_line(line) for line in spec.lines)


def _format_line(line: RuleLine) -> str:
    atoms = " ".join(_format_atom(a) for a in line.atoms)
    return atoms if line.count is None else f"{line.count} {atoms}"


def _format_atom(atom: Atom) -> str:
    fields = [
        "*" if atom.count is None else str(atom.count),
        _format_values(atom.shapes),
        _format_values(atom.colors),
        _format_values(atom.positions),
        _format_bucket(atom.buckets),
    ]
    return "(" + ", ".join(fields) + ")"


def _format_values(values) -> str:
    if values is None:
        return "*"
    if len(values) == 1:
        return str(values[0])
    return "[" + ",".join(str(v) for v in values) + "]"


def _format_bucket(expr: BucketExpr) -> str:
    match expr:
        case BucketLit(value):
            return str(value)
        case BucketVar(name):
            return name
        case BucketArith(var, offset):
            return f"{var}+{offset}" if offset >= 0 else f"{var}-{-offset}"
        case Nearby():
            return "nearby"
        case Remotest():
            return "remotest"
        case BucketList(items):
            return "[" + ",".join(_format_bucket(i) for i in items) + "]"
    raise TypeError(f"not a bucket expression: {expr!r}")
