"""Lexer and recursive-descent parser for the agent scripting language.

The grammar is documented in docs/script-language.md. Statements end at a
newline or ``;``; blocks are delimited by braces. Newlines inside ``( )`` and
``[ ]`` are ignored, and inside map literals the parser skips them itself.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any


class ScriptSyntaxError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER STRING NAME OP NEWLINE EOF
    value: Any
    line: int


KEYWORDS = {
    "if", "elif", "else", "for", "in", "while", "def", "return", "break",
    "continue", "and", "or", "not", "true", "false", "null", "True", "False", "None",
}

_OPERATORS = sorted(
    ["==", "!=", "<=", ">=", "+=", "-=", "//", "<", ">", "=", "+", "-", "*", "/", "%",
     "(", ")", "[", "]", "{", "}", ",", ":", ";", "."],
    key=len, reverse=True,
)
_NUMBER_RE = re.compile(r"\d+(\.\d+)?([eE][-+]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "'": "'", "0": "\0"}


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, depth = 0, 1, 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            if depth == 0:
                tokens.append(Token("NEWLINE", None, line))
            line += 1
            i += 1
        elif c in " \t\r":
            i += 1
        elif c == "#":
            while i < n and source[i] != "\n":
                i += 1
        elif c in "\"'":
            i, line, text = _read_string(source, i, line)
            tokens.append(Token("STRING", text, line))
        elif c.isdigit():
            m = _NUMBER_RE.match(source, i)
            text = m.group(0)
            value = float(text) if (m.group(1) or m.group(2)) else int(text)
            tokens.append(Token("NUMBER", value, line))
            i = m.end()
        elif c.isalpha() or c == "_":
            m = _NAME_RE.match(source, i)
            word = m.group(0)
            tokens.append(Token("KEYWORD" if word in KEYWORDS else "NAME", word, line))
            i = m.end()
        else:
            for op in _OPERATORS:
                if source.startswith(op, i):
                    break
            else:
                raise ScriptSyntaxError(f"unexpected character {c!r}", line)
            if op in "([":
                depth += 1
            elif op in ")]":
                depth = max(0, depth - 1)
            tokens.append(Token("OP", op, line))
            i += len(op)
    tokens.append(Token("EOF", None, line))
    return tokens


def _read_string(source: str, i: int, line: int) -> tuple[int, int, str]:
    quote = source[i]
    start_line = line
    if source.startswith(quote * 3, i):
        end = source.find(quote * 3, i + 3)
        if end == -1:
            raise ScriptSyntaxError("unterminated string", start_line)
        text = source[i + 3:end]
        return end + 3, line + text.count("\n"), text
    i += 1
    out = []
    while True:
        if i >= len(source) or source[i] == "\n":
            raise ScriptSyntaxError("unterminated string", start_line)
        c = source[i]
        if c == quote:
            return i + 1, line, "".join(out)
        if c == "\\" and i + 1 < len(source):
            out.append(_ESCAPES.get(source[i + 1], "\\" + source[i + 1]))
            i += 2
            continue
        out.append(c)
        i += 1


# --- AST -------------------------------------------------------------------

@dataclass
class Node:
    line: int


@dataclass
class Literal(Node):
    value: Any


@dataclass
class Name(Node):
    id: str


@dataclass
class ListExpr(Node):
    items: list


@dataclass
class MapExpr(Node):
    pairs: list


@dataclass
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass
class BoolOp(Node):
    op: str  # "and" | "or"
    left: Node
    right: Node


@dataclass
class UnaryOp(Node):
    op: str  # "-" | "not"
    operand: Node


@dataclass
class Call(Node):
    func: Node
    args: list


@dataclass
class MethodCall(Node):
    obj: Node
    method: str
    args: list


@dataclass
class Index(Node):
    obj: Node
    index: Node


@dataclass
class Slice(Node):
    obj: Node
    start: Node | None
    stop: Node | None


@dataclass
class Assign(Node):
    target: Node  # Name or Index
    value: Node
    op: str = "="


@dataclass
class ExprStmt(Node):
    expr: Node


@dataclass
class If(Node):
    cond: Node
    body: list
    orelse: list = field(default_factory=list)


@dataclass
class For(Node):
    var: str
    iterable: Node
    body: list


@dataclass
class While(Node):
    cond: Node
    body: list


@dataclass
class FunctionDef(Node):
    name: str
    params: list
    body: list


@dataclass
class Return(Node):
    value: Node | None


@dataclass
class Break(Node):
    pass


@dataclass
class ContinueStmt(Node):
    pass


_COMPARE_OPS = {"==", "!=", "<", "<=", ">", ">="}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # token helpers
    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def check(self, kind: str, value: Any = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind: str, value: Any = None) -> Token | None:
        if self.check(kind, value):
            return self.next()
        return None

    def expect(self, kind: str, value: Any = None) -> Token:
        tok = self.peek()
        if not self.check(kind, value):
            want = value if value is not None else kind.lower()
            got = tok.value if tok.value is not None else tok.kind.lower()
            raise ScriptSyntaxError(f"expected {want!r}, found {got!r}", tok.line)
        return self.next()

    def skip_newlines(self) -> None:
        while self.accept("NEWLINE") or self.accept("OP", ";"):
            pass

    # statements
    def parse_program(self) -> list[Node]:
        body = []
        self.skip_newlines()
        while not self.check("EOF"):
            body.append(self.statement())
            self.skip_newlines()
        return body

    def block(self) -> list[Node]:
        self.expect("OP", "{")
        body = []
        self.skip_newlines()
        while not self.check("OP", "}"):
            if self.check("EOF"):
                raise ScriptSyntaxError("unclosed block, expected '}'", self.peek().line)
            body.append(self.statement())
            self.skip_newlines()
        self.expect("OP", "}")
        return body

    def statement(self) -> Node:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.value == "if":
                return self.if_stmt()
            if tok.value == "for":
                return self.for_stmt()
            if tok.value == "while":
                self.next()
                cond = self.expression()
                return While(tok.line, cond, self.block())
            if tok.value == "def":
                return self.def_stmt()
        stmt = self.simple_statement()
        if not (self.check("NEWLINE") or self.check("OP", ";") or self.check("OP", "}") or self.check("EOF")):
            bad = self.peek()
            raise ScriptSyntaxError(f"unexpected {bad.value!r} after statement", bad.line)
        return stmt

    def simple_statement(self) -> Node:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.value == "return":
                self.next()
                if self.check("NEWLINE") or self.check("OP", ";") or self.check("OP", "}") or self.check("EOF"):
                    return Return(tok.line, None)
                return Return(tok.line, self.expression())
            if tok.value == "break":
                self.next()
                return Break(tok.line)
            if tok.value == "continue":
                self.next()
                return ContinueStmt(tok.line)
        expr = self.expression()
        for op in ("=", "+=", "-="):
            if self.check("OP", op):
                if not isinstance(expr, (Name, Index)):
                    raise ScriptSyntaxError("invalid assignment target", tok.line)
                self.next()
                return Assign(tok.line, expr, self.expression(), op)
        return ExprStmt(tok.line, expr)

    def if_stmt(self) -> If:
        tok = self.next()  # if / elif
        cond = self.expression()
        body = self.block()
        orelse: list[Node] = []
        save = self.pos
        while self.accept("NEWLINE"):
            pass
        if self.check("KEYWORD", "elif"):
            orelse = [self.if_stmt()]
        elif self.accept("KEYWORD", "else"):
            if self.check("KEYWORD", "if"):
                orelse = [self.if_stmt()]
            else:
                orelse = self.block()
        else:
            self.pos = save
        return If(tok.line, cond, body, orelse)

    def for_stmt(self) -> For:
        tok = self.next()
        var = self.expect("NAME").value
        self.expect("KEYWORD", "in")
        iterable = self.expression()
        return For(tok.line, var, iterable, self.block())

    def def_stmt(self) -> FunctionDef:
        tok = self.next()
        name = self.expect("NAME").value
        self.expect("OP", "(")
        params = []
        if not self.check("OP", ")"):
            params.append(self.expect("NAME").value)
            while self.accept("OP", ","):
                params.append(self.expect("NAME").value)
        self.expect("OP", ")")
        if len(set(params)) != len(params):
            raise ScriptSyntaxError("duplicate parameter name", tok.line)
        return FunctionDef(tok.line, name, params, self.block())

    # expressions
    def expression(self) -> Node:
        return self.or_expr()

    def or_expr(self) -> Node:
        left = self.and_expr()
        while self.check("KEYWORD", "or"):
            tok = self.next()
            left = BoolOp(tok.line, "or", left, self.and_expr())
        return left

    def and_expr(self) -> Node:
        left = self.not_expr()
        while self.check("KEYWORD", "and"):
            tok = self.next()
            left = BoolOp(tok.line, "and", left, self.not_expr())
        return left

    def not_expr(self) -> Node:
        if self.check("KEYWORD", "not"):
            tok = self.next()
            return UnaryOp(tok.line, "not", self.not_expr())
        return self.comparison()

    def comparison(self) -> Node:
        left = self.additive()
        tok = self.peek()
        if tok.kind == "OP" and tok.value in _COMPARE_OPS:
            self.next()
            return BinOp(tok.line, tok.value, left, self.additive())
        if tok.kind == "KEYWORD" and tok.value == "in":
            self.next()
            return BinOp(tok.line, "in", left, self.additive())
        if tok.kind == "KEYWORD" and tok.value == "not" and self.peek(1).value == "in":
            self.next()
            self.next()
            return BinOp(tok.line, "not in", left, self.additive())
        return left

    def additive(self) -> Node:
        left = self.term()
        while self.peek().kind == "OP" and self.peek().value in ("+", "-"):
            tok = self.next()
            left = BinOp(tok.line, tok.value, left, self.term())
        return left

    def term(self) -> Node:
        left = self.unary()
        while self.peek().kind == "OP" and self.peek().value in ("*", "/", "//", "%"):
            tok = self.next()
            left = BinOp(tok.line, tok.value, left, self.unary())
        return left

    def unary(self) -> Node:
        if self.check("OP", "-"):
            tok = self.next()
            return UnaryOp(tok.line, "-", self.unary())
        return self.postfix()

    def postfix(self) -> Node:
        node = self.primary()
        while True:
            tok = self.peek()
            if self.accept("OP", "("):
                node = Call(tok.line, node, self.arguments(")"))
            elif self.accept("OP", "["):
                start = None if self.check("OP", ":") else self.expression()
                if self.accept("OP", ":"):
                    stop = None if self.check("OP", "]") else self.expression()
                    self.expect("OP", "]")
                    node = Slice(tok.line, node, start, stop)
                else:
                    self.expect("OP", "]")
                    node = Index(tok.line, node, start)
            elif self.accept("OP", "."):
                method = self.expect("NAME").value
                self.expect("OP", "(")
                node = MethodCall(tok.line, node, method, self.arguments(")"))
            else:
                return node

    def arguments(self, closer: str) -> list[Node]:
        args: list[Node] = []
        self.skip_newlines()
        while not self.check("OP", closer):
            args.append(self.expression())
            self.skip_newlines()
            if not self.accept("OP", ","):
                break
            self.skip_newlines()
        self.skip_newlines()
        self.expect("OP", closer)
        return args

    def primary(self) -> Node:
        tok = self.next()
        if tok.kind in ("NUMBER", "STRING"):
            return Literal(tok.line, tok.value)
        if tok.kind == "KEYWORD":
            if tok.value in ("true", "True"):
                return Literal(tok.line, True)
            if tok.value in ("false", "False"):
                return Literal(tok.line, False)
            if tok.value in ("null", "None"):
                return Literal(tok.line, None)
        if tok.kind == "NAME":
            return Name(tok.line, tok.value)
        if tok.kind == "OP":
            if tok.value == "(":
                expr = self.expression()
                self.expect("OP", ")")
                return expr
            if tok.value == "[":
                return ListExpr(tok.line, self.arguments("]"))
            if tok.value == "{":
                return self.map_literal(tok)
        got = tok.value if tok.value is not None else tok.kind.lower()
        raise ScriptSyntaxError(f"unexpected {got!r}", tok.line)

    def map_literal(self, tok: Token) -> MapExpr:
        pairs = []
        self.skip_newlines()
        while not self.check("OP", "}"):
            key = self.expression()
            self.expect("OP", ":")
            self.skip_newlines()
            pairs.append((key, self.expression()))
            self.skip_newlines()
            if not self.accept("OP", ","):
                break
            self.skip_newlines()
        self.skip_newlines()
        self.expect("OP", "}")
        return MapExpr(tok.line, pairs)


def parse(source: str) -> list[Node]:
    return Parser(tokenize(source)).parse_program()
