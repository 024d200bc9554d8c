"""Tree-walking evaluator for parsed scripts."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any

from ..errors import LimitExceeded, ScriptError, ScriptTypeError, UndefinedName
from . import parser as ast
from .builtins import Builtin, CallContext, call_method, display, type_name

MAX_CALL_DEPTH = 64


@dataclass
class Function:
    name: str
    params: list
    body: list

    def __repr__(self):
        return f"<function {self.name}>"


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def truthy(v: Any) -> bool:
    if v is None or v is False:
        return False
    if isinstance(v, (int, float, str, list, dict)) and not isinstance(v, bool):
        return bool(v)
    return True


class Interpreter:
    """Evaluates one script against a session's globals.

    ``globals_`` and ``functions`` are the session's own dicts and are mutated
    in place, so state persists once the script finishes (or fails).
    """

    def __init__(self, globals_: dict, functions: dict, registry, ctx: CallContext,
                 deadline: float, max_loop_iterations: int):
        self.globals = globals_
        self.functions = functions
        self.registry = registry
        self.ctx = ctx
        self.deadline = deadline
        self.max_loop_iterations = max_loop_iterations
        self.iterations = 0
        self.depth = 0
        self._ticks = 0

    # -- limits
    def check_deadline(self) -> None:
        if time.monotonic() > self.deadline:
            raise LimitExceeded("wall time limit exceeded")

    def _tick(self, line: int) -> None:
        self.iterations += 1
        if self.iterations > self.max_loop_iterations:
            raise LimitExceeded(f"loop iteration limit of {self.max_loop_iterations} exceeded", line)
        self._ticks += 1
        if self._ticks >= 64:
            self._ticks = 0
            if time.monotonic() > self.deadline:
                raise LimitExceeded("wall time limit exceeded", line)

    # -- statements
    def run(self, program: list) -> None:
        self.exec_block(program, None)

    def exec_block(self, body: list, scope: dict | None) -> None:
        for stmt in body:
            self.exec_stmt(stmt, scope)

    def exec_stmt(self, stmt, scope: dict | None) -> None:
        try:
            self._exec(stmt, scope)
        except ScriptError as err:
            if err.line is None:
                err.line = stmt.line
            raise

    def _exec(self, stmt, scope):
        t = type(stmt)
        if t is ast.ExprStmt:
            self.eval(stmt.expr, scope)
        elif t is ast.Assign:
            self.assign(stmt, scope)
        elif t is ast.If:
            if truthy(self.eval(stmt.cond, scope)):
                self.exec_block(stmt.body, scope)
            else:
                self.exec_block(stmt.orelse, scope)
        elif t is ast.For:
            self.exec_for(stmt, scope)
        elif t is ast.While:
            while truthy(self.eval(stmt.cond, scope)):
                self._tick(stmt.line)
                try:
                    self.exec_block(stmt.body, scope)
                except _Break:
                    break
                except _Continue:
                    continue
        elif t is ast.FunctionDef:
            fn = Function(stmt.name, stmt.params, stmt.body)
            if scope is None:
                self.functions[stmt.name] = fn
            else:
                scope[stmt.name] = fn
        elif t is ast.Return:
            if scope is None:
                raise ScriptError("return outside function", stmt.line)
            raise _Return(None if stmt.value is None else self.eval(stmt.value, scope))
        elif t is ast.Break:
            raise _Break()
        elif t is ast.ContinueStmt:
            raise _Continue()
        else:  # pragma: no cover
            raise ScriptError(f"unknown statement {t.__name__}", stmt.line)

    def exec_for(self, stmt, scope):
        seq = self.eval(stmt.iterable, scope)
        if isinstance(seq, dict):
            items = list(seq.keys())
        elif isinstance(seq, (list, str)):
            items = list(seq)
        else:
            raise ScriptTypeError(f"cannot iterate over {type_name(seq)}", stmt.line)
        target = self.globals if scope is None else scope
        for item in items:
            self._tick(stmt.line)
            target[stmt.var] = item
            try:
                self.exec_block(stmt.body, scope)
            except _Break:
                break
            except _Continue:
                continue

    def assign(self, stmt, scope):
        value = self.eval(stmt.value, scope)
        target = stmt.target
        if isinstance(target, ast.Name):
            env = self.globals if scope is None else scope
            if stmt.op != "=":
                value = self.binop(stmt.op[0], self.lookup(target.id, scope, target.line), value, stmt.line)
            env[target.id] = value
            return
        container = self.eval(target.obj, scope)
        key = self.eval(target.index, scope)
        if stmt.op != "=":
            value = self.binop(stmt.op[0], self.index(container, key, stmt.line), value, stmt.line)
        if isinstance(container, list):
            if not isinstance(key, int) or isinstance(key, bool):
                raise ScriptTypeError("list index must be an int", stmt.line)
            try:
                container[key] = value
            except IndexError:
                raise ScriptError(f"list index {key} out of range", stmt.line) from None
        elif isinstance(container, dict):
            self._check_key(key, stmt.line)
            container[key] = value
        else:
            raise ScriptTypeError(f"cannot assign into {type_name(container)}", stmt.line)

    # -- expressions
    def lookup(self, name: str, scope: dict | None, line: int):
        if scope is not None and name in scope:
            return scope[name]
        if name in self.globals:
            return self.globals[name]
        if name in self.functions:
            return self.functions[name]
        builtin = self.registry.get(name)
        if builtin is not None:
            return builtin
        raise UndefinedName(f"undefined name {name!r}", line)

    def eval(self, node, scope):
        t = type(node)
        if t is ast.Literal:
            return node.value
        if t is ast.Name:
            return self.lookup(node.id, scope, node.line)
        if t is ast.BinOp:
            if node.op in ("in", "not in"):
                left = self.eval(node.left, scope)
                right = self.eval(node.right, scope)
                found = self.membership(left, right, node.line)
                return found if node.op == "in" else not found
            return self.binop(node.op, self.eval(node.left, scope), self.eval(node.right, scope), node.line)
        if t is ast.BoolOp:
            left = self.eval(node.left, scope)
            if node.op == "and":
                return self.eval(node.right, scope) if truthy(left) else left
            return left if truthy(left) else self.eval(node.right, scope)
        if t is ast.UnaryOp:
            v = self.eval(node.operand, scope)
            if node.op == "not":
                return not truthy(v)
            if not _is_number(v):
                raise ScriptTypeError(f"bad operand for unary -: {type_name(v)}", node.line)
            return -v
        if t is ast.Call:
            fn = self.eval(node.func, scope)
            args = [self.eval(a, scope) for a in node.args]
            return self.call(fn, args, node.line)
        if t is ast.MethodCall:
            obj = self.eval(node.obj, scope)
            args = [self.eval(a, scope) for a in node.args]
            return call_method(obj, node.method, args)
        if t is ast.Index:
            return self.index(self.eval(node.obj, scope), self.eval(node.index, scope), node.line)
        if t is ast.Slice:
            obj = self.eval(node.obj, scope)
            start = None if node.start is None else self.eval(node.start, scope)
            stop = None if node.stop is None else self.eval(node.stop, scope)
            if not isinstance(obj, (list, str)):
                raise ScriptTypeError(f"cannot slice {type_name(obj)}", node.line)
            for b in (start, stop):
                if b is not None and (not isinstance(b, int) or isinstance(b, bool)):
                    raise ScriptTypeError("slice bounds must be ints", node.line)
            return obj[start:stop]
        if t is ast.ListExpr:
            return [self.eval(x, scope) for x in node.items]
        if t is ast.MapExpr:
            out = {}
            for k, v in node.pairs:
                key = self.eval(k, scope)
                self._check_key(key, node.line)
                out[key] = self.eval(v, scope)
            return out
        raise ScriptError(f"cannot evaluate {t.__name__}", node.line)  # pragma: no cover

    @staticmethod
    def _check_key(key, line):
        if not isinstance(key, (str, int, float, bool)) and key is not None:
            raise ScriptTypeError(f"map keys must be scalars, got {type_name(key)}", line)

    def membership(self, item, container, line):
        if isinstance(container, str):
            if not isinstance(item, str):
                raise ScriptTypeError("'in <string>' requires a string on the left", line)
            return item in container
        if isinstance(container, list):
            return item in container
        if isinstance(container, dict):
            self._check_key(item, line)
            return item in container
        raise ScriptTypeError(f"'in' not supported for {type_name(container)}", line)

    def index(self, obj, key, line):
        if isinstance(obj, (list, str)):
            if not isinstance(key, int) or isinstance(key, bool):
                raise ScriptTypeError(f"{type_name(obj)} index must be an int", line)
            try:
                return obj[key]
            except IndexError:
                raise ScriptError(f"index {key} out of range", line) from None
        if isinstance(obj, dict):
            self._check_key(key, line)
            if key not in obj:
                raise ScriptError(f"key {display(key, True)} not found", line)
            return obj[key]
        raise ScriptTypeError(f"cannot index {type_name(obj)}", line)

    def binop(self, op, a, b, line):
        if op == "==":
            return a == b and type_name(a) == type_name(b) or (_is_number(a) and _is_number(b) and a == b)
        if op == "!=":
            return not self.binop("==", a, b, line)
        if op in ("<", "<=", ">", ">="):
            if not ((_is_number(a) and _is_number(b)) or (isinstance(a, str) and isinstance(b, str))):
                raise ScriptTypeError(f"cannot compare {type_name(a)} and {type_name(b)}", line)
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        if op == "+":
            if _is_number(a) and _is_number(b):
                return a + b
            if isinstance(a, str) and isinstance(b, str):
                return a + b
            if isinstance(a, list) and isinstance(b, list):
                return a + b
            raise ScriptTypeError(f"cannot add {type_name(a)} and {type_name(b)}", line)
        if op == "*":
            if _is_number(a) and _is_number(b):
                return a * b
            if isinstance(a, (str, list)) and isinstance(b, int) and not isinstance(b, bool):
                if len(a) * max(b, 0) > 1_000_000:
                    raise LimitExceeded("repetition result too large", line)
                return a * b
            raise ScriptTypeError(f"cannot multiply {type_name(a)} and {type_name(b)}", line)
        if not (_is_number(a) and _is_number(b)):
            raise ScriptTypeError(f"unsupported operands for {op}: {type_name(a)} and {type_name(b)}", line)
        if op == "-":
            return a - b
        if b == 0:
            raise ScriptError("division by zero", line)
        if op == "/":
            return a / b
        if op == "//":
            return a // b
        if op == "%":
            return a % b
        raise ScriptError(f"unknown operator {op}", line)  # pragma: no cover

    def call(self, fn, args, line):
        if isinstance(fn, Builtin):
            if len(args) < fn.min_args or (fn.max_args is not None and len(args) > fn.max_args):
                raise ScriptTypeError(f"{fn.name}() got {len(args)} arguments", line)
            self.check_deadline()
            try:
                return fn.fn(self.ctx, *args)
            except TypeError as exc:
                raise ScriptTypeError(f"{fn.name}(): {exc}", line) from None
        if isinstance(fn, Function):
            if len(args) != len(fn.params):
                raise ScriptTypeError(f"{fn.name}() takes {len(fn.params)} arguments, got {len(args)}", line)
            if self.depth >= MAX_CALL_DEPTH:
                raise LimitExceeded(f"call depth limit of {MAX_CALL_DEPTH} exceeded", line)
            self.depth += 1
            try:
                self.exec_block(fn.body, dict(zip(fn.params, args)))
            except _Return as r:
                return r.value
            except (_Break, _Continue):
                raise ScriptError("break/continue outside loop", line) from None
            finally:
                self.depth -= 1
            return None
        raise ScriptTypeError(f"{type_name(fn)} is not callable", line)
