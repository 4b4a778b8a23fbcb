"""
Text serialization of quantified programs (`.qlp`).

Purpose: An LP-style document extended with an uncertainty section for the
universal constraint system and an ORDER section fixing the quantifier
blocks. Flat programs are written as documents with a single existential
block. ``write`` is canonical, so ``write(parse(write(x))) == write(x)``.

Grammar (whitespace and line breaks are insignificant; ``\\`` starts a
comment running to the end of the line):

    \\Problem name: <name>
    MINIMIZE | MAXIMIZE   [label:] expr
    SUBJECT TO            { [label:] expr (<=|>=|=) number }
    UNCERTAINTY SUBJECT TO { [label:] expr (<=|>=|=) number }
    BOUNDS                { l <= x <= u | l <= x | x <= u | x >= l | x = v }
    GENERALS | BINARIES | CONTINUOUS  { x }
    ORDER                 { (E|A) x ... }
    END
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .core import (
    Finding,
    FindingCode,
    LinConstraint,
    ObjectiveSense,
    QipInstance,
    QuantBlock,
    Quantifier,
    RowSide,
    VarDomain,
    VarKind,
    make_terms,
    validate,
)
from .dep import MipInstance
from .errors import ConfigError, QipSemanticError, QipSyntaxError

NAME_PREFIX = "\\Problem name:"
NAMES_PER_LINE = 10
KEYWORDS = frozenset({
    "MINIMIZE", "MAXIMIZE", "SUBJECT", "TO", "UNCERTAINTY", "BOUNDS",
    "GENERALS", "BINARIES", "CONTINUOUS", "ORDER", "END",
})
SECTION_STARTS = frozenset(KEYWORDS - {"TO"})
QUANTIFIERS = {"E": Quantifier.EXISTS, "A": Quantifier.FORALL}

_TOKEN = re.compile(r"""
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\\[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.@]*)
  | (?P<op><=|>=|=<|=>|<|>|=|\+|-|:)
""", re.VERBOSE)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.@]*\Z")
_SENSES = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> Tuple[List[Token], Optional[str]]:
    """Tokens of ``text`` plus the problem name from a ``\\Problem name:`` comment."""
    tokens: List[Token] = []
    name: Optional[str] = None
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QipSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind == "comment":
            if name is None and m.group().startswith(NAME_PREFIX):
                name = m.group()[len(NAME_PREFIX):].strip()
        elif kind != "space":
            word = m.group()
            if kind == "ident" and word.upper() in KEYWORDS:
                kind, word = "keyword", word.upper()
            tokens.append(Token(kind, word, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens, name


def _number(text: str) -> Fraction:
    return Fraction(text)


@dataclass(frozen=True)
class _RawRow:
    """A parsed row keyed by variable name; indices are fixed once the document is read."""
    terms: Dict[str, Fraction]
    sense: str
    rhs: Fraction
    side: RowSide
    name: str

    def build(self, index: Dict[str, int]) -> LinConstraint:
        terms = {index[v]: c for v, c in self.terms.items()}
        if self.sense == ">=":
            return LinConstraint.ge(terms, self.rhs, side=self.side, name=self.name)
        if self.sense == "=":
            return LinConstraint.eq(terms, self.rhs, side=self.side, name=self.name)
        return LinConstraint.le(terms, self.rhs, side=self.side, name=self.name)


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.seen: Dict[str, None] = {}
        self.bounds: Dict[str, List[Optional[int]]] = {}
        self.kinds: Dict[str, VarKind] = {}
        self.binaries: set = set()

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None) -> QipSyntaxError:
        tok = tok or self.tok
        return QipSyntaxError(message, tok.line, tok.column)

    def expect_keyword(self, word: str) -> None:
        if self.tok.kind != "keyword" or self.tok.text != word:
            raise self.error(f"expected {word}, found {self.tok.text or 'end of input'!r}")
        self.advance()

    def at_section(self) -> bool:
        return self.tok.kind == "eof" or (self.tok.kind == "keyword" and self.tok.text in SECTION_STARTS)

    def var(self, name: str) -> str:
        self.seen.setdefault(name, None)
        return name

    # grammar

    def signed_number(self) -> Fraction:
        sign = 1
        while self.tok.kind == "op" and self.tok.text in "+-":
            if self.advance().text == "-":
                sign = -sign
        if self.tok.kind != "number":
            raise self.error(f"expected a number, found {self.tok.text or 'end of input'!r}")
        return sign * _number(self.advance().text)

    def label(self) -> str:
        if self.tok.kind == "ident" and self.peek().kind == "op" and self.peek().text == ":":
            name = self.advance().text
            self.advance()
            return name
        return ""

    def expression(self, stop_at_sense: bool) -> Tuple[Dict[str, Fraction], Fraction]:
        terms: Dict[str, Fraction] = {}
        const = Fraction(0)
        first = True
        while True:
            tok = self.tok
            if stop_at_sense and tok.kind == "op" and tok.text in _SENSES:
                break
            if not stop_at_sense and self.at_section():
                break
            sign = 1
            saw_sign = False
            while self.tok.kind == "op" and self.tok.text in "+-":
                saw_sign = True
                if self.advance().text == "-":
                    sign = -sign
            if not first and not saw_sign:
                raise self.error(f"expected '+' or '-', found {self.tok.text or 'end of input'!r}")
            coeff: Optional[Fraction] = None
            if self.tok.kind == "number":
                coeff = _number(self.advance().text)
            if self.tok.kind == "ident" and not (self.peek().kind == "op" and self.peek().text == ":"):
                j = self.var(self.advance().text)
                terms[j] = terms.get(j, Fraction(0)) + sign * (Fraction(1) if coeff is None else coeff)
            elif coeff is not None:
                const += sign * coeff
            else:
                raise self.error(f"expected a term, found {self.tok.text or 'end of input'!r}")
            first = False
        if first:
            raise self.error("empty expression")
        return terms, const

    def row(self, side: RowSide) -> "_RawRow":
        name = self.label()
        terms, const = self.expression(stop_at_sense=True)
        sense = _SENSES[self.advance().text]
        return _RawRow(terms, sense, self.signed_number() - const, side, name)

    def integer_bound(self) -> int:
        tok = self.tok
        value = self.signed_number()
        if value.denominator != 1:
            raise self.error(f"bound {value} is not an integer", tok)
        return int(value)

    def set_bound(self, j: str, lower: Optional[int] = None, upper: Optional[int] = None) -> None:
        bounds = self.bounds.setdefault(j, [None, None])
        if lower is not None:
            bounds[0] = lower
        if upper is not None:
            bounds[1] = upper

    def bound(self) -> None:
        if self.tok.kind == "ident":
            j = self.var(self.advance().text)
            if self.tok.kind != "op" or self.tok.text not in _SENSES:
                raise self.error("expected a comparison in bound")
            sense = _SENSES[self.advance().text]
            value = self.integer_bound()
            if sense == "=":
                self.set_bound(j, value, value)
            elif sense == "<=":
                self.set_bound(j, upper=value)
            else:
                self.set_bound(j, lower=value)
            return
        lower = self.integer_bound()
        if self.tok.kind != "op" or _SENSES.get(self.tok.text) != "<=":
            raise self.error("expected '<=' after lower bound")
        self.advance()
        if self.tok.kind != "ident":
            raise self.error("expected a variable name in bound")
        j = self.var(self.advance().text)
        self.set_bound(j, lower=lower)
        if self.tok.kind == "op" and _SENSES.get(self.tok.text) == "<=":
            self.advance()
            self.set_bound(j, upper=self.integer_bound())

    def name_list(self) -> List[str]:
        found = []
        while self.tok.kind == "ident":
            found.append(self.var(self.advance().text))
        if not self.at_section():
            raise self.error(f"expected a variable name, found {self.tok.text!r}")
        return found

    def order(self) -> List[Tuple[Quantifier, List[str]]]:
        blocks = []
        while self.tok.kind == "ident" and self.tok.text in QUANTIFIERS:
            quantifier = QUANTIFIERS[self.advance().text]
            members = []
            while self.tok.kind == "ident" and self.tok.text not in QUANTIFIERS:
                members.append(self.var(self.advance().text))
            blocks.append((quantifier, members))
        if not self.at_section():
            raise self.error(f"expected 'E' or 'A', found {self.tok.text!r}")
        return blocks

    def document(self, name: str) -> QipInstance:
        if self.tok.kind != "keyword" or self.tok.text not in ("MINIMIZE", "MAXIMIZE"):
            raise self.error("document must start with MINIMIZE or MAXIMIZE")
        sense = ObjectiveSense.MINIMIZE if self.advance().text == "MINIMIZE" else ObjectiveSense.MAXIMIZE
        self.label()
        objective, offset = self.expression(stop_at_sense=False)
        rows: List[_RawRow] = []
        universal: List[_RawRow] = []
        blocks: List[Tuple[Quantifier, List[str]]] = []
        seen = set()
        while True:
            tok = self.tok
            if tok.kind == "eof":
                raise self.error("missing END")
            if tok.kind != "keyword" or tok.text not in SECTION_STARTS:
                raise self.error(f"expected a section keyword, found {tok.text!r}")
            section = tok.text
            if section == "END":
                self.advance()
                break
            self.advance()
            if section == "UNCERTAINTY":
                self.expect_keyword("SUBJECT")
            if section in ("SUBJECT", "UNCERTAINTY"):
                self.expect_keyword("TO")
            if section in seen:
                raise self.error(f"section {section} repeats", tok)
            seen.add(section)
            if section == "SUBJECT":
                while not self.at_section():
                    rows.append(self.row(RowSide.EXISTENTIAL))
            elif section == "UNCERTAINTY":
                while not self.at_section():
                    universal.append(self.row(RowSide.UNIVERSAL))
            elif section == "BOUNDS":
                while not self.at_section():
                    self.bound()
            elif section == "GENERALS":
                for j in self.name_list():
                    self.kinds[j] = VarKind.INTEGER
            elif section == "BINARIES":
                for j in self.name_list():
                    self.kinds[j] = VarKind.INTEGER
                    self.binaries.add(j)
            elif section == "CONTINUOUS":
                for j in self.name_list():
                    self.kinds[j] = VarKind.TRAILING_CONTINUOUS
            elif section == "ORDER":
                blocks = self.order()
            else:
                raise self.error(f"{section} is not allowed here", tok)
        if self.tok.kind != "eof":
            raise self.error(f"unexpected text after END: {self.tok.text!r}")
        return self.instance(name, sense, objective, offset, rows, universal, blocks)

    def instance(self, name, sense, objective, offset, rows, universal, blocks) -> QipInstance:
        # bounded variables first, in BOUNDS order, then by first appearance
        var_names = tuple(list(self.bounds) + [v for v in self.seen if v not in self.bounds])
        index = {v: j for j, v in enumerate(var_names)}
        findings: List[Finding] = []
        domains = []
        for j, var_name in enumerate(var_names):
            lower, upper = self.bounds.get(var_name, [None, None])
            if var_name in self.binaries:
                upper = 1 if upper is None else upper
            lower = 0 if lower is None else lower
            if upper is None:
                findings.append(Finding(FindingCode.UNBOUNDED_VARIABLE, j, f"variable {var_name} has no upper bound"))
                upper = lower
            domains.append(VarDomain(lower, upper, self.kinds.get(var_name, VarKind.INTEGER)))
        if findings:
            raise QipSemanticError(findings)
        instance = QipInstance(
            name=name,
            var_names=var_names,
            domains=tuple(domains),
            blocks=tuple(QuantBlock(q, tuple(index[v] for v in members)) for q, members in blocks),
            objective=make_terms({index[v]: c for v, c in objective.items()}),
            existential_rows=tuple(row.build(index) for row in rows),
            universal_rows=tuple(row.build(index) for row in universal),
            sense=sense,
            offset=offset,
        )
        report = validate(instance)
        if not report.ok:
            raise QipSemanticError(report.findings)
        return instance


def parse(text: str, default_name: str = "qlp") -> QipInstance:
    """
    Parse a `.qlp` document into a validated instance.

    Variable indices follow the BOUNDS section, then first appearance
    elsewhere. Variables not listed under CONTINUOUS are integers; a missing
    lower bound is 0 and a missing upper bound is an error unless the
    variable is binary.
    """
    tokens, name = tokenize(text)
    return _Parser(tokens).document(name or default_name)


# Writing

def format_number(value: Fraction) -> str:
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _check_name(name: str) -> str:
    if not _IDENT.match(name) or name.upper() in KEYWORDS or name in QUANTIFIERS:
        raise ConfigError(f"variable or row name {name!r} cannot be written to a .qlp document")
    return name


def format_expression(terms, names, const: Fraction = Fraction(0)) -> str:
    parts: List[str] = []
    for j, c in terms:
        magnitude = abs(c)
        body = names[j] if magnitude == 1 else f"{format_number(magnitude)} {names[j]}"
        if parts:
            parts.append(f"{'-' if c < 0 else '+'} {body}")
        else:
            parts.append(f"-{body}" if c < 0 else body)
    if const or not parts:
        magnitude = format_number(abs(const))
        if parts:
            parts.append(f"{'-' if const < 0 else '+'} {magnitude}")
        else:
            parts.append(f"-{magnitude}" if const < 0 else magnitude)
    return " ".join(parts)


def _format_row(row: LinConstraint, names) -> str:
    label = f"{_check_name(row.name)}: " if row.name else ""
    return f" {label}{format_expression(row.terms, names)} {row.sense.value} {format_number(row.rhs)}"


def _name_lines(indices: List[int], names) -> List[str]:
    return [" " + " ".join(names[j] for j in indices[k:k + NAMES_PER_LINE])
            for k in range(0, len(indices), NAMES_PER_LINE)]


def write(instance: Union[QipInstance, MipInstance]) -> str:
    """Canonical `.qlp` text: variables, terms and rows in index order, rationals in lowest terms."""
    if isinstance(instance, MipInstance):
        instance = instance.as_qip()
    names = [_check_name(n) for n in instance.var_names]
    lines = [f"{NAME_PREFIX} {instance.name}"]
    lines.append("MAXIMIZE" if instance.is_maximization else "MINIMIZE")
    lines.append(f" obj: {format_expression(instance.objective, names, instance.offset)}")
    lines.append("SUBJECT TO")
    lines.extend(_format_row(row, names) for row in instance.existential_rows)
    if instance.universal_rows:
        lines.append("UNCERTAINTY SUBJECT TO")
        lines.extend(_format_row(row, names) for row in instance.universal_rows)
    lines.append("BOUNDS")
    lines.extend(f" {d.lower} <= {names[j]} <= {d.upper}" for j, d in enumerate(instance.domains))
    integers = [j for j, d in enumerate(instance.domains) if d.kind is VarKind.INTEGER]
    continuous = [j for j, d in enumerate(instance.domains) if d.kind is VarKind.TRAILING_CONTINUOUS]
    if integers:
        lines.append("GENERALS")
        lines.extend(_name_lines(integers, names))
    if continuous:
        lines.append("CONTINUOUS")
        lines.extend(_name_lines(continuous, names))
    lines.append("ORDER")
    for block in instance.blocks:
        lines.append(" " + " ".join([block.quantifier.value] + [names[j] for j in block.var_indices]))
    lines.append("END")
    return "\n".join(lines) + "\n"


def read_qlp(path: Union[str, Path]) -> QipInstance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse(text, default_name=path.stem)


def write_qlp(instance: Union[QipInstance, MipInstance], path: Union[str, Path]) -> None:
    Path(path).write_text(write(instance), encoding="utf-8", newline="\n")
