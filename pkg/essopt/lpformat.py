"""
LP text format writer and reader for essopt models.

The dialect is the common Minimize / Subject To / Bounds / Binaries / End
layout (see docs/lp_format.md). write_lp output is deterministic and uses
repr() numerals, so read_lp(write_lp(m)) rebuilds the same model with the
same variable ids.
"""

import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import LPParseError
from .milp import Model, Sense, VarKind

# Continuation lines start once a line grows past this width
LINE_WIDTH = 78

# Precompile regex patterns for the tokenizer
NAME_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_.\[\]]*")
NUMBER_TOKEN = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
NUMBER_RUN = re.compile(r"[0-9A-Za-z_.]+")
OPERATOR_TOKEN = re.compile(r"<=|>=|=<|=>|<|>|=|\+|-|:")
MODEL_NAME_COMMENT = re.compile(r"^\\\s*Problem name:\s*(\S+)")

SECTION_KEYWORDS = {
    "minimize": "minimize", "minimise": "minimize", "min": "minimize",
    "subject to": "subject to", "such that": "subject to", "st": "subject to", "s.t.": "subject to",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "binaries", "binary": "binaries", "bin": "binaries",
    "end": "end",
}
SECTION_ORDER = ("minimize", "subject to", "bounds", "binaries", "end")

UNSUPPORTED_SECTIONS = {
    "maximize", "maximise", "max", "generals", "general", "gen", "integers",
    "semi-continuous", "semis", "semi", "sos",
}

SENSE_TOKENS = {"<=": Sense.LE, "=<": Sense.LE, "<": Sense.LE,
                ">=": Sense.GE, "=>": Sense.GE, ">": Sense.GE, "=": Sense.EQ}

INFINITY_WORDS = {"inf", "infinity"}


# ---------------- WRITER -----------------------
def format_number(value: float) -> str:
    """Shortest exact text for a float; integral values drop the '.0'."""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _expression(model: Model, terms) -> List[str]:
    pieces: List[str] = []
    for var_id, coef in terms:
        name = model.variables[var_id].name
        magnitude = abs(coef)
        body = name if magnitude == 1.0 else f"{format_number(magnitude)} {name}"
        if coef < 0:
            pieces.append(f"- {body}")
        else:
            pieces.append(f"+ {body}" if pieces else body)
    return pieces or ["0"]


def _wrap(head: str, pieces: List[str]) -> List[str]:
    lines: List[str] = []
    current = head
    for piece in pieces:
        if current.strip() and len(current) + 1 + len(piece) > LINE_WIDTH:
            lines.append(current)
            current = "  "
        current = f"{current} {piece}" if current.strip() else current + piece
    lines.append(current)
    return lines


def write_lp(model: Model) -> str:
    """
    Render a model as LP text.

    Variables are written by name; every variable gets an explicit Bounds
    entry in id order so the reader recreates the ids exactly.
    """
    out: List[str] = [f"\\ Problem name: {model.name}", "Minimize"]
    out.extend(_wrap(" obj:", _expression(model, sorted(model.objective.items()))))

    out.append("Subject To")
    for con in model.constraints:
        pieces = _expression(model, con.terms) + [con.sense.value, format_number(con.rhs)]
        out.extend(_wrap(f" {con.name}:", pieces))

    out.append("Bounds")
    for var in model.variables:
        if var.lb == -math.inf and var.ub == math.inf:
            out.append(f" {var.name} free")
        elif var.lb == var.ub:
            out.append(f" {var.name} = {format_number(var.lb)}")
        else:
            out.append(f" {format_number(var.lb)} <= {var.name} <= {format_number(var.ub)}")

    out.append("Binaries")
    binaries = [model.variables[i].name for i in model.binary_ids]
    if binaries:
        out.extend(_wrap(" ", binaries))
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------- TOKENIZER --------------------
@dataclass(frozen=True)
class Token:
    kind: str  # "name", "number" or "op"
    text: str
    line: int
    column: int


def _tokenize(text: str, line_no: int) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        column = pos + 1
        if ch.isdigit() or (ch == "." and text[pos + 1:pos + 2].isdigit()):
            match = NUMBER_TOKEN.match(text, pos)
            follow = text[match.end():match.end() + 1]
            if follow and (follow.isalnum() or follow in "._"):
                run = NUMBER_RUN.match(text, pos).group()
                raise LPParseError(f"malformed number {run!r}", line_no, column)
            tokens.append(Token("number", match.group(), line_no, column))
            pos = match.end()
            continue
        for kind, pattern in (("name", NAME_TOKEN), ("op", OPERATOR_TOKEN)):
            match = pattern.match(text, pos)
            if match:
                tokens.append(Token(kind, match.group(), line_no, column))
                pos = match.end()
                break
        else:
            raise LPParseError(f"unexpected character {ch!r}", line_no, column)
    return tokens


# ---------------- PARSER -----------------------
class _Cursor:
    """Sequential access to the tokens of one section."""

    def __init__(self, tokens: List[Token], end_line: int):
        self.tokens = tokens
        self.pos = 0
        self.end_line = end_line

    def peek(self, offset: int = 0) -> Optional[Token]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Token:
        token = self.peek()
        if token is None:
            raise LPParseError("unexpected end of section", self.end_line, 1)
        self.pos += 1
        return token

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def is_label(self, offset: int = 0) -> bool:
        first, second = self.peek(offset), self.peek(offset + 1)
        return (first is not None and first.kind == "name"
                and second is not None and second.text == ":")

    def is_sense(self) -> bool:
        token = self.peek()
        return token is not None and token.kind == "op" and token.text in SENSE_TOKENS

    def signed_number(self, allow_infinity: bool = False) -> float:
        token = self.next()
        sign = 1.0
        while token.kind == "op" and token.text in ("+", "-"):
            if token.text == "-":
                sign = -sign
            token = self.next()
        if token.kind == "number":
            return sign * float(token.text)
        if allow_infinity and token.kind == "name" and token.text.lower() in INFINITY_WORDS:
            return sign * math.inf
        raise LPParseError(f"expected a number, got {token.text!r}", token.line, token.column)


def _parse_expression(cursor: _Cursor) -> Tuple[List[Tuple[Token, float]], float]:
    """
    Parse `[+-] [coef] name ...` up to a sense operator, a label or the end.

    Returns:
        The (name token, coefficient) terms and the sum of constant terms
    """
    terms: List[Tuple[Token, float]] = []
    constant = 0.0
    first = True
    while not cursor.at_end() and not cursor.is_sense() and not (first and cursor.is_label()):
        sign = 1.0
        saw_sign = False
        while cursor.peek() is not None and cursor.peek().text in ("+", "-"):
            if cursor.next().text == "-":
                sign = -sign
            saw_sign = True
        token = cursor.next()
        if not first and not saw_sign:
            raise LPParseError(f"expected '+' or '-' before {token.text!r}", token.line, token.column)
        if token.kind == "number":
            coef = sign * float(token.text)
            after = cursor.peek()
            if after is not None and after.kind == "name" and not cursor.is_label():
                terms.append((cursor.next(), coef))
            else:
                constant += coef
        elif token.kind == "name":
            terms.append((token, sign))
        else:
            raise LPParseError(f"unexpected {token.text!r}", token.line, token.column)
        first = False
    return terms, constant


@dataclass
class _Sections:
    tokens: Dict[str, List[Token]]
    end_lines: Dict[str, int]
    model_name: str


def _split_sections(text: str) -> _Sections:
    tokens: Dict[str, List[Token]] = {}
    end_lines: Dict[str, int] = {}
    model_name = "model"
    current: Optional[str] = None
    line_no = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        match = MODEL_NAME_COMMENT.match(raw.strip())
        if match and model_name == "model":
            model_name = match.group(1)
        content = raw.split("\\", 1)[0]
        keyword = " ".join(content.split()).lower()
        if not keyword:
            continue
        if current == "end":
            raise LPParseError("content after End", line_no, 1)
        # Keywords head an unindented line; indented lines are section content
        heading = not content[:1].isspace()
        if heading and keyword in UNSUPPORTED_SECTIONS:
            raise LPParseError(f"unknown section {content.strip()!r}", line_no, 1)
        if heading and keyword in SECTION_KEYWORDS:
            section = SECTION_KEYWORDS[keyword]
            if section in tokens:
                raise LPParseError(f"duplicate section {content.strip()!r}", line_no, 1)
            if tokens and SECTION_ORDER.index(section) < SECTION_ORDER.index(current):
                raise LPParseError(f"section {content.strip()!r} out of order", line_no, 1)
            if current is None and section != "minimize":
                raise LPParseError("expected Minimize as the first section", line_no, 1)
            current = section
            tokens[section] = []
            end_lines[section] = line_no
            continue
        if current is None:
            raise LPParseError("expected Minimize as the first section", line_no, 1)
        tokens[current].extend(_tokenize(content, line_no))
        end_lines[current] = line_no
    if current != "end":
        raise LPParseError("missing End", line_no + 1, 1)
    return _Sections(tokens, end_lines, model_name)


def read_lp(text: str) -> Model:
    """
    Parse LP text in the dialect written by write_lp.

    Variables are created in Bounds order, then in order of first
    appearance. Variables without a Bounds entry default to [0, inf), or
    [0, 1] when listed under Binaries.

    Raises:
        LPParseError: with line and column on malformed input, an unknown
            section, a missing End or a duplicate Bounds/Binaries entry
    """
    sections = _split_sections(text)

    def cursor(name: str) -> _Cursor:
        return _Cursor(sections.tokens.get(name, []), sections.end_lines.get(name, 1))

    # Objective
    obj = cursor("minimize")
    if obj.is_label():
        obj.next()
        obj.next()
    objective, constant = _parse_expression(obj)
    if not obj.at_end():
        token = obj.peek()
        raise LPParseError(f"unexpected {token.text!r} in objective", token.line, token.column)
    if constant != 0.0:
        raise LPParseError("constant terms in the objective are not supported",
                           sections.end_lines["minimize"], 1)

    # Constraints
    rows: List[Tuple[Optional[str], List[Tuple[Token, float]], Sense, float]] = []
    st = cursor("subject to")
    while not st.at_end():
        name = None
        if st.is_label():
            name = st.next().text
            st.next()
        terms, constant = _parse_expression(st)
        token = st.next()
        if token.text not in SENSE_TOKENS:
            raise LPParseError(f"expected a constraint sense, got {token.text!r}", token.line, token.column)
        rhs = st.signed_number()
        rows.append((name, terms, SENSE_TOKENS[token.text], rhs - constant))

    # Bounds
    bounds: Dict[str, Tuple[Optional[float], Optional[float]]] = {}
    order: List[str] = []
    bd = cursor("bounds")
    while not bd.at_end():
        head = bd.peek()
        if head.kind == "name" and head.text.lower() not in INFINITY_WORDS:
            var = bd.next()
            token = bd.next()
            if token.kind == "name" and token.text.lower() == "free":
                lb, ub = -math.inf, math.inf
            elif token.text in SENSE_TOKENS:
                value = bd.signed_number(allow_infinity=True)
                sense = SENSE_TOKENS[token.text]
                lb = value if sense in (Sense.GE, Sense.EQ) else None
                ub = value if sense in (Sense.LE, Sense.EQ) else None
            else:
                raise LPParseError(f"expected a bound on {var.text}, got {token.text!r}",
                                   token.line, token.column)
        else:
            lb = bd.signed_number(allow_infinity=True)
            token = bd.next()
            if SENSE_TOKENS.get(token.text) is not Sense.LE:
                raise LPParseError(f"expected '<=', got {token.text!r}", token.line, token.column)
            var = bd.next()
            if var.kind != "name":
                raise LPParseError(f"expected a variable name, got {var.text!r}", var.line, var.column)
            ub = None
            if bd.peek() is not None and SENSE_TOKENS.get(bd.peek().text) is Sense.LE:
                bd.next()
                ub = bd.signed_number(allow_infinity=True)
        if var.text in bounds:
            raise LPParseError(f"duplicate variable {var.text!r} in Bounds", var.line, var.column)
        bounds[var.text] = (lb, ub)
        order.append(var.text)

    # Binaries
    binaries: Dict[str, Token] = {}
    for token in cursor("binaries").tokens:
        if token.kind != "name":
            raise LPParseError(f"expected a variable name, got {token.text!r}", token.line, token.column)
        if token.text in binaries:
            raise LPParseError(f"duplicate variable {token.text!r} in Binaries", token.line, token.column)
        binaries[token.text] = token

    seen = set(order)
    for token, _ in objective + [term for row in rows for term in row[1]]:
        if token.text not in seen:
            seen.add(token.text)
            order.append(token.text)
    for name in binaries:
        if name not in seen:
            seen.add(name)
            order.append(name)

    model = Model(sections.model_name)
    for name in order:
        kind = VarKind.BINARY if name in binaries else VarKind.CONTINUOUS
        default_ub = 1.0 if kind is VarKind.BINARY else math.inf
        lb, ub = bounds.get(name, (None, None))
        model.add_variable(kind, 0.0 if lb is None else lb, default_ub if ub is None else ub, name)

    model.set_objective([(model.variable_id(t.text), c) for t, c in objective])
    for name, terms, sense, rhs in rows:
        model.add_constraint([(model.variable_id(t.text), c) for t, c in terms], sense, rhs, name)
    return model
