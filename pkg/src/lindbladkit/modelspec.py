"""
Model files and the operator-expression language they use.

Expressions::

    expr    := term (("+" | "-") term)*
    term    := unary ("*" unary)*
    unary   := "-" unary | power
    power   := primary ("^" integer)?
    primary := "(" expr ")" | "dag" "(" expr ")" | identifier | number

so ``^`` binds tighter than unary minus, which binds tighter than ``*``,
which binds tighter than ``+``/``-``. Atoms carry a 1-based site label:
``X1, Y1, Z1, Sp1, Sm1`` on qubits and ``a1, ad1, n1`` on Fock factors; ``I``
is the identity and ``i`` the imaginary unit. Other identifiers are
parameters. Numbers may carry an ``i`` suffix (``2i``, ``0.5i``).

A model file is a JSON object::

    {"name": "two_qubit",
     "spaces": [{"kind": "qubit"}, {"kind": "qubit"}],
     "parameters": {"omega": 1.0},
     "hamiltonian": "omega*X2",
     "jump_operators": ["0.5*(I - Z1*Z2)*X2"]}
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import jsonschema
import numpy as np

from .liouvillian import Model
from .operator_core import (FOCK, PAULI, QUBIT, HilbertSpace, annihilation, creation, embed,
                            number, operator_power)

__all__ = [
    "ModelSpecError", "TokenizeError", "ParseError", "EvaluationError", "SchemaError",
    "Token", "tokenize", "parse", "parse_expression", "evaluate", "pretty",
    "Num", "Param", "Atom", "Neg", "Add", "Sub", "Mul", "Pow", "Dag",
    "ModelFile", "MODEL_SCHEMA", "model_file_from_dict", "build_model", "load_model",
    "load_model_file", "dump_model_file",
]


class ModelSpecError(ValueError):
    """Invalid model file or expression; ``position`` is a 1-based column if known."""

    def __init__(self, message: str, position: int | None = None, source: str | None = None,
                 field: str | None = None):
        self.position = position
        self.source = source
        self.field = field
        self.bare_message = message
        where = f"column {position}: " if position is not None else ""
        origin = f"{source}: " if source else ""
        name = f"{field}: " if field else ""
        super().__init__(f"{origin}{name}{where}{message}")


class TokenizeError(ModelSpecError):
    pass


class ParseError(ModelSpecError):
    pass


class EvaluationError(ModelSpecError):
    pass


class SchemaError(ModelSpecError):
    pass


# ----------------------------------------------------------------------------
# tokens

NUMBER, IDENT, DAG, OP = "number", "ident", "dag", "op"

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<ident>[A-Za-z][A-Za-z0-9]*)
  | (?P<op>[-+*^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int
    value: complex | None = None

    def __str__(self):
        return self.text


def tokenize(src: str) -> list[Token]:
    """Split an expression into tokens with 1-based column positions.

    Raises
    ------
    TokenizeError
        On any character that cannot start a token.
    """
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise TokenizeError(f"illegal character {src[pos]!r}", pos + 1)
        kind = m.lastgroup
        text = m.group()
        if kind == NUMBER:
            if text.endswith("i"):
                value = complex(0.0, float(text[:-1]))
            else:
                value = complex(float(text))
            tokens.append(Token(NUMBER, text, pos + 1, value))
        elif kind == IDENT:
            if text == "i":
                tokens.append(Token(NUMBER, text, pos + 1, 1j))
            elif text == "dag":
                tokens.append(Token(DAG, text, pos + 1))
            else:
                tokens.append(Token(IDENT, text, pos + 1))
        elif kind == OP:
            tokens.append(Token(OP, text, pos + 1))
        pos = m.end()
    return tokens


# ----------------------------------------------------------------------------
# syntax tree

_ATOM_RE = re.compile(r"(Sp|Sm|ad|X|Y|Z|a|n)([1-9][0-9]*)")
QUBIT_ATOMS = ("X", "Y", "Z", "Sp", "Sm")
FOCK_ATOMS = ("a", "ad", "n")
RESERVED = ("I", "i", "dag")


@dataclass(frozen=True)
class Num:
    value: complex
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Param:
    name: str
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Atom:
    """Operator symbol on a 1-based ``site``; ``I`` has ``site = 0``."""

    symbol: str
    site: int
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Dag:
    operand: "Expr"
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"
    position: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int
    position: int | None = field(default=None, compare=False)


Expr = Union[Num, Param, Atom, Neg, Dag, Add, Sub, Mul, Pow]


def _identifier_node(tok: Token) -> Expr:
    if tok.text == "I":
        return Atom("I", 0, tok.position)
    m = _ATOM_RE.fullmatch(tok.text)
    if m:
        return Atom(m.group(1), int(m.group(2)), tok.position)
    return Param(tok.text, tok.position)


class _Parser:
    def __init__(self, tokens: list[Token], src_len: int):
        self.tokens = tokens
        self.i = 0
        self.end = src_len + 1

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def where(self) -> int:
        tok = self.peek()
        return tok.position if tok else self.end

    def found(self) -> str:
        tok = self.peek()
        return f"{tok.text!r}" if tok else "end of input"

    def accept(self, text: str) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.kind == OP and tok.text == text:
            self.i += 1
            return tok
        return None

    def expect(self, text: str, context: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            raise ParseError(f"expected {text!r} {context}, found {self.found()}", self.where())
        return tok

    def expr(self) -> Expr:
        node = self.term()
        while True:
            tok = self.accept("+") or self.accept("-")
            if tok is None:
                return node
            right = self.term()
            node = (Add if tok.text == "+" else Sub)(node, right, tok.position)

    def term(self) -> Expr:
        node = self.unary()
        while (tok := self.accept("*")) is not None:
            node = Mul(node, self.unary(), tok.position)
        return node

    def unary(self) -> Expr:
        tok = self.accept("-")
        if tok is not None:
            return Neg(self.unary(), tok.position)
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        tok = self.accept("^")
        if tok is None:
            return base
        exp = self.peek()
        if exp is None or exp.kind != NUMBER or not exp.text.isdigit():
            raise ParseError(f"expected a nonnegative integer exponent, found {self.found()}",
                             self.where())
        self.i += 1
        return Pow(base, int(exp.text), tok.position)

    def primary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError("expected expression, found end of input", self.end)
        if tok.kind == OP and tok.text == "(":
            self.i += 1
            node = self.expr()
            self.expect(")", f"to close '(' at column {tok.position}")
            return node
        if tok.kind == DAG:
            self.i += 1
            self.expect("(", "after 'dag'")
            node = self.expr()
            self.expect(")", "to close 'dag('")
            return Dag(node, tok.position)
        if tok.kind == IDENT:
            self.i += 1
            return _identifier_node(tok)
        if tok.kind == NUMBER:
            self.i += 1
            return Num(tok.value, tok.position)
        raise ParseError(f"expected expression (identifier, number, '(' or 'dag'), found {tok.text!r}",
                         tok.position)


def parse(tokens: list[Token], src_len: int | None = None) -> Expr:
    """Build the syntax tree of a token list.

    Raises
    ------
    ParseError
        With the column of the offending token and what was expected there.
    """
    if src_len is None:
        src_len = (tokens[-1].position + len(tokens[-1].text) - 1) if tokens else 0
    p = _Parser(tokens, src_len)
    node = p.expr()
    if p.peek() is not None:
        tok = p.peek()
        if tok.kind == OP and tok.text == ")":
            raise ParseError("unbalanced ')'", tok.position)
        raise ParseError(f"expected operator or end of input, found {tok.text!r}", tok.position)
    return node


def parse_expression(src: str) -> Expr:
    return parse(tokenize(src), len(src))


def _fmt_number(v: complex) -> str:
    if v.imag == 0:
        return repr(float(v.real))
    if v.real == 0:
        return "i" if v.imag == 1 else f"{float(v.imag)!r}i"
    return f"({float(v.real)!r} + {float(v.imag)!r}i)"


def pretty(node: Expr) -> str:
    """Source text that parses back to the same tree."""
    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Atom):
        return "I" if node.symbol == "I" else f"{node.symbol}{node.site}"
    if isinstance(node, Neg):
        return f"-{_wrap(node.operand, Neg)}"
    if isinstance(node, Dag):
        return f"dag({pretty(node.operand)})"
    if isinstance(node, Pow):
        return f"{_wrap(node.base, Pow)}^{node.exponent}"
    if isinstance(node, Mul):
        return f"{_wrap(node.left, Mul)}*{_wrap(node.right, Mul, right=True)}"
    if isinstance(node, (Add, Sub)):
        op = "+" if isinstance(node, Add) else "-"
        return f"{pretty(node.left)} {op} {_wrap(node.right, Add, right=True)}"
    raise TypeError(f"not an expression node: {node!r}")


_LEVEL = {Add: 0, Sub: 0, Mul: 1, Neg: 2, Pow: 3}


def _wrap(child: Expr, parent: type, right: bool = False) -> str:
    text = pretty(child)
    if isinstance(child, Num) and (child.value.real != 0 and child.value.imag != 0):
        return text
    lvl = _LEVEL.get(type(child), 4)
    need = lvl < _LEVEL[parent] or (right and lvl == _LEVEL[parent])
    if parent is Pow and isinstance(child, (Pow, Neg)):
        need = True
    return f"({text})" if need else text


# ----------------------------------------------------------------------------
# evaluation


def _atom_matrix(node: Atom, space: HilbertSpace) -> np.ndarray:
    if node.symbol == "I":
        return space.identity()
    if not 1 <= node.site <= len(space):
        raise EvaluationError(f"site {node.site} of {node.symbol}{node.site} is not declared "
                              f"(model has {len(space)} spaces)", node.position)
    kind, dim = space.factors[node.site - 1]
    if node.symbol in QUBIT_ATOMS:
        if kind != QUBIT:
            raise EvaluationError(f"qubit operator {node.symbol}{node.site} used on a fock space",
                                  node.position)
        if node.symbol == "Sp":
            local = 0.5 * (PAULI["X"] + 1j * PAULI["Y"])
        elif node.symbol == "Sm":
            local = 0.5 * (PAULI["X"] - 1j * PAULI["Y"])
        else:
            local = PAULI[node.symbol]
    else:
        if kind != FOCK:
            raise EvaluationError(f"fock operator {node.symbol}{node.site} used on a qubit space",
                                  node.position)
        local = {"a": annihilation, "ad": creation, "n": number}[node.symbol](dim)
    return embed(node.site - 1, local, space)


def _scalar(v: complex):
    # keep real scalars real so that results match plain float arithmetic exactly
    return float(v.real) if v.imag == 0 else complex(v)


def evaluate(node: Expr, space: HilbertSpace, params: dict | None = None) -> np.ndarray:
    """Matrix of an expression on ``space``; pure scalars become multiples of ``I``.

    Raises
    ------
    EvaluationError
        For unbound parameters, undeclared sites or atoms on the wrong kind of space.
    """
    value = _eval(node, space, params or {})
    if np.ndim(value) == 0:
        return value * space.identity()
    return value


def _promote(v, space):
    return v * space.identity() if np.ndim(v) == 0 else v


def _eval(node, space, params):
    if isinstance(node, Num):
        return _scalar(node.value)
    if isinstance(node, Param):
        if node.name not in params:
            raise EvaluationError(f"unbound parameter {node.name!r}", node.position)
        return _scalar(complex(params[node.name]))
    if isinstance(node, Atom):
        return _atom_matrix(node, space)
    if isinstance(node, Neg):
        return -_eval(node.operand, space, params)
    if isinstance(node, Dag):
        v = _eval(node.operand, space, params)
        return np.conj(v) if np.ndim(v) == 0 else v.conj().T
    if isinstance(node, Pow):
        v = _eval(node.base, space, params)
        return v ** node.exponent if np.ndim(v) == 0 else operator_power(v, node.exponent)
    if isinstance(node, Mul):
        a = _eval(node.left, space, params)
        b = _eval(node.right, space, params)
        if np.ndim(a) == 0 or np.ndim(b) == 0:
            return a * b
        return a @ b
    if isinstance(node, (Add, Sub)):
        a = _eval(node.left, space, params)
        b = _eval(node.right, space, params)
        if np.ndim(a) and not np.ndim(b):
            b = _promote(b, space)
        elif np.ndim(b) and not np.ndim(a):
            a = _promote(a, space)
        return a + b if isinstance(node, Add) else a - b
    raise TypeError(f"not an expression node: {node!r}")


# ----------------------------------------------------------------------------
# model files

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "spaces", "jump_operators"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "spaces": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": [QUBIT, FOCK]},
                    "dim": {"type": "integer", "minimum": 2},
                },
                "if": {"properties": {"kind": {"const": FOCK}}},
                "then": {"required": ["dim"]},
                "else": {"properties": {"dim": {"const": 2}}},
            },
        },
        "parameters": {
            "type": "object",
            "propertyNames": {"pattern": "^[A-Za-z][A-Za-z0-9]*$"},
            "additionalProperties": {"type": "number"},
        },
        "hamiltonian": {"type": "string"},
        "jump_operators": {"type": "array", "items": {"type": "string"}},
    },
}


@dataclass(frozen=True)
class ModelFile:
    """Parsed model file holding the declared space and the expression trees."""

    name: str
    space: HilbertSpace
    parameters: dict
    hamiltonian: Expr | None
    jumps: tuple
    hamiltonian_source: str | None = None
    jump_sources: tuple = ()


def _schema_error(err: jsonschema.ValidationError, source) -> SchemaError:
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return SchemaError(f"field {path}: {err.message}", source=source)


def _parse_field(src: str, what: str, source) -> Expr:
    try:
        return parse_expression(src)
    except ModelSpecError as exc:
        raise type(exc)(exc.bare_message, exc.position, source, what) from None


def model_file_from_dict(data: dict, source: str | None = None) -> ModelFile:
    """Validate a decoded model file and parse its expressions."""
    validator = jsonschema.Draft202012Validator(MODEL_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise _schema_error(errors[0], source)
    params = {k: float(v) for k, v in data.get("parameters", {}).items()}
    for name in params:
        if name in RESERVED or _ATOM_RE.fullmatch(name):
            raise SchemaError(f"field parameters/{name}: name collides with an operator atom",
                              source=source)
    space = HilbertSpace(tuple((s["kind"], s.get("dim", 2)) for s in data["spaces"]))
    hsrc = data.get("hamiltonian")
    H = _parse_field(hsrc, "hamiltonian", source) if hsrc is not None else None
    jsrc = tuple(data["jump_operators"])
    jumps = tuple(_parse_field(s, f"jump_operators/{k}", source) for k, s in enumerate(jsrc))
    return ModelFile(data["name"], space, params, H, jumps, hsrc, jsrc)


def _evaluate_field(node, what, mf: ModelFile, source):
    try:
        return evaluate(node, mf.space, mf.parameters)
    except ModelSpecError as exc:
        raise type(exc)(exc.bare_message, exc.position, source, what) from None


def build_model(mf: ModelFile, source: str | None = None) -> Model:
    """Evaluate a :class:`ModelFile` into a :class:`Model`.

    Raises
    ------
    EvaluationError
        If an expression cannot be evaluated or the Hamiltonian is not Hermitian.
    """
    H = None
    if mf.hamiltonian is not None:
        H = _evaluate_field(mf.hamiltonian, "hamiltonian", mf, source)
        dev = float(np.max(np.abs(H - H.conj().T)))
        if dev >= 1e-10:
            raise EvaluationError(f"hamiltonian is not Hermitian (max |H - H^dag| = {dev:.3g})",
                                  source=source)
    jumps = [_evaluate_field(j, f"jump_operators/{k}", mf, source) for k, j in enumerate(mf.jumps)]
    return Model(mf.space, H, jumps, name=mf.name, parameters=dict(mf.parameters))


def load_model_file(path, overrides: dict | None = None) -> ModelFile:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                          source=str(path)) from None
    if overrides and isinstance(data, dict):
        params = dict(data.get("parameters", {}))
        unknown = sorted(set(overrides) - set(params))
        if unknown:
            raise SchemaError(f"unknown parameter(s) {', '.join(unknown)}", source=str(path))
        params.update(overrides)
        data = {**data, "parameters": params}
    return model_file_from_dict(data, source=str(path))


def load_model(path, overrides: dict | None = None) -> Model:
    """Load a model file and evaluate it into a :class:`Model`.

    Raises
    ------
    ModelSpecError
        Schema violations name the offending field; expression errors give
        the field and column.
    OSError
        If the file cannot be read.
    """
    return build_model(load_model_file(path, overrides), source=str(path))


def dump_model_file(mf: ModelFile) -> dict:
    """Inverse of :func:`model_file_from_dict` with expressions pretty-printed."""
    spaces = [{"kind": k} if k == QUBIT else {"kind": k, "dim": d} for k, d in mf.space.factors]
    out = {"name": mf.name, "spaces": spaces}
    if mf.parameters:
        out["parameters"] = dict(mf.parameters)
    if mf.hamiltonian is not None:
        out["hamiltonian"] = pretty(mf.hamiltonian)
    out["jump_operators"] = [pretty(j) for j in mf.jumps]
    return out
