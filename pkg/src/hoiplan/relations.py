"""Parser and pretty-printer for spatial relations and execution-plan text.

The relation grammar is a flat list of call expressions::

    relations  = { call } ;
    call       = name "(" arg { "," arg } ")" ;
    name       = letter { letter | digit | "_" } ;   (case-insensitive)
    arg        = identifier | number ;

Known relations: ``on(object1, object2)``, ``adjacent(object1, object2,
direction, distance)``, and ``facing(object1, object2)``. Plan text is one
action per line: ``lift the X, move the X, put down the X``.

Every failure raises a structured error carrying line/column positions; the
parser never throws anything else, whatever the input bytes.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import HoiplanError


class ParseError(HoiplanError):
    code = "relations.parse_error"

    def __init__(self, message: str, line: int, column: int, expected: str = ""):
        super().__init__(f"line {line}, column {column}: {message}",
                         line=line, column=column, expected=expected)
        self.line = line
        self.column = column
        self.expected = expected


class ArityError(ParseError):
    code = "relations.arity_error"


class BadDistance(ParseError):
    code = "relations.bad_distance"


class UnknownRelation(ParseError):
    code = "relations.unknown_relation"


class TemplateMismatch(HoiplanError):
    code = "relations.template_mismatch"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}", line=line)
        self.line = line


class InconsistentObject(TemplateMismatch):
    code = "relations.inconsistent_object"


# ---------------------------------------------------------------------------
# relation types

@dataclass(frozen=True)
class SpatialRelation:
    obj1: str
    obj2: str


@dataclass(frozen=True)
class On(SpatialRelation):
    """obj1 rests on the top surface of obj2."""


@dataclass(frozen=True)
class Adjacent(SpatialRelation):
    """obj1 sits ``distance`` meters from obj2 toward a compass ``direction``."""

    direction: str
    distance: float


@dataclass(frozen=True)
class Facing(SpatialRelation):
    """obj1's canonical direction points at obj2."""


# Compass tokens as (north, east) coefficients; diagonals are normalized.
_DIAG = math.sqrt(0.5)
COMPASS = {
    "north": (1.0, 0.0),
    "south": (-1.0, 0.0),
    "east": (0.0, 1.0),
    "west": (0.0, -1.0),
    "northeast": (_DIAG, _DIAG),
    "northwest": (_DIAG, -_DIAG),
    "southeast": (-_DIAG, _DIAG),
    "southwest": (-_DIAG, -_DIAG),
}


def compass_vector(direction: str, north) -> np.ndarray:
    """World 2D unit vector for a compass token, given the scene's north."""
    n = np.asarray(north, dtype=float).reshape(2)
    east = np.array([n[1], -n[0]])
    cn, ce = COMPASS[direction]
    return cn * n + ce * east


# ---------------------------------------------------------------------------
# relation parsing

_TOKEN = re.compile(r"[ \t\r]*(?:(?P<newline>\n)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
                    r"|(?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
                    r"|(?P<punct>[(),]))")


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            while pos < n and text[pos] in " \t\r":
                pos += 1
                col += 1
            if pos >= n:  # trailing whitespace only
                break
            raise ParseError(f"unexpected character {text[pos]!r}", line, col,
                             expected="relation name")
        col += m.start(m.lastgroup) - pos
        value = m.group(m.lastgroup)
        if m.lastgroup == "newline":
            tokens.append(("newline", value, line, col))
            line += 1
            col = 1
        else:
            tokens.append((m.lastgroup, value, line, col))
            col += len(value)
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self, skip_newlines=True):
        j = self.i
        while skip_newlines and self.tokens[j][0] == "newline":
            j += 1
        return self.tokens[j]

    def next(self, skip_newlines=True):
        while skip_newlines and self.tokens[self.i][0] == "newline":
            self.i += 1
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def expect(self, kind, value=None, expected=""):
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise ParseError(f"unexpected {tok[1]!r}" if tok[0] != "eof" else "unexpected end of input",
                             tok[2], tok[3], expected=expected or value or kind)
        return tok


_RELATION_ARITY = {"on": 2, "adjacent": 4, "facing": 2}


def parse_relations(text: str) -> list[SpatialRelation]:
    """Parse relation text into a list of typed relations.

    Function names are case-insensitive and whitespace is free-form. Unknown
    object ids are deliberately not resolved here; the layout solver owns
    that check.
    """
    if not isinstance(text, str):
        raise ParseError("input must be text", 1, 1, expected="relation name")
    stream = _TokenStream(_tokenize(text))
    relations: list[SpatialRelation] = []
    while True:
        tok = stream.peek()
        if tok[0] == "eof":
            return relations
        name_tok = stream.expect("name", expected="relation name")
        name = name_tok[1].lower()
        if name not in _RELATION_ARITY:
            raise UnknownRelation(f"unknown relation {name_tok[1]!r}", name_tok[2], name_tok[3],
                                  expected="on, adjacent, or facing")
        stream.expect("punct", "(")
        args = []
        while True:
            arg = stream.next()
            if arg[0] not in ("name", "number"):
                raise ParseError(f"unexpected {arg[1]!r}" if arg[0] != "eof" else "unexpected end of input",
                                 arg[2], arg[3], expected="argument")
            args.append(arg)
            sep = stream.next()
            if sep[0] == "punct" and sep[1] == ",":
                continue
            if sep[0] == "punct" and sep[1] == ")":
                break
            raise ParseError(f"unexpected {sep[1]!r}" if sep[0] != "eof" else "unexpected end of input",
                             sep[2], sep[3], expected="',' or ')'")
        relations.append(_build_relation(name, name_tok, args))


def _build_relation(name, name_tok, args) -> SpatialRelation:
    arity = _RELATION_ARITY[name]
    if len(args) != arity:
        raise ArityError(f"{name} takes {arity} arguments, got {len(args)}",
                         name_tok[2], name_tok[3], expected=f"{arity} arguments")

    def ident(tok, what):
        if tok[0] != "name":
            raise ParseError(f"expected an object name, got {tok[1]!r}", tok[2], tok[3],
                             expected=what)
        return tok[1].lower()

    obj1 = ident(args[0], "object name")
    obj2 = ident(args[1], "object name")
    if obj1 == obj2:
        raise ParseError(f"{name} needs two distinct objects", args[1][2], args[1][3],
                         expected="a different object")
    if name == "on":
        return On(obj1, obj2)
    if name == "facing":
        return Facing(obj1, obj2)
    direction = ident(args[2], "compass direction")
    if direction not in COMPASS:
        raise ParseError(f"unknown direction {args[2][1]!r}", args[2][2], args[2][3],
                         expected="|".join(sorted(COMPASS)))
    dist_tok = args[3]
    if dist_tok[0] != "number":
        raise BadDistance(f"distance must be numeric, got {dist_tok[1]!r}",
                          dist_tok[2], dist_tok[3], expected="positive number")
    distance = float(dist_tok[1])
    if not math.isfinite(distance) or distance <= 0:
        raise BadDistance(f"distance must be positive, got {dist_tok[1]}",
                          dist_tok[2], dist_tok[3], expected="positive number")
    return Adjacent(obj1, obj2, direction, distance)


def render_relations(relations) -> str:
    """Inverse pretty-printer; parse(render(x)) == x."""
    lines = []
    for r in relations:
        if isinstance(r, On):
            lines.append(f"on({r.obj1}, {r.obj2})")
        elif isinstance(r, Adjacent):
            d = r.distance
            dist = repr(int(d)) if float(d).is_integer() else repr(d)
            lines.append(f"adjacent({r.obj1}, {r.obj2}, {r.direction}, {dist})")
        elif isinstance(r, Facing):
            lines.append(f"facing({r.obj1}, {r.obj2})")
        else:
            raise TypeError(f"not a relation: {r!r}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# execution-plan text

@dataclass(frozen=True)
class ActionStep:
    """One plan line; ``object_id`` is the lowercased, trimmed display name."""

    object_id: str
    text: str


_PLAN_LINE = re.compile(
    r"^lift\s+the\s+(?P<a>.+?)\s*,\s*move\s+the\s+(?P<b>.+?)\s*,\s*put\s+down\s+the\s+(?P<c>.+?)$",
    re.IGNORECASE)


def parse_plan(text: str) -> list[ActionStep]:
    """Parse plan text, one ``lift the X, move the X, put down the X`` per line."""
    if not isinstance(text, str):
        raise TemplateMismatch("input must be text", 1)
    steps = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _PLAN_LINE.match(line)
        if m is None:
            raise TemplateMismatch(f"does not match the lift/move/put-down template: {line!r}",
                                   lineno)
        names = [m.group(g).strip() for g in ("a", "b", "c")]
        ids = [n.lower() for n in names]
        if len(set(ids)) != 1:
            raise InconsistentObject(f"clauses name different objects: {names}", lineno)
        steps.append(ActionStep(ids[0], line))
    return steps


def render_plan_step(display_name: str) -> str:
    return f"lift the {display_name}, move the {display_name}, put down the {display_name}"
