"""Builtin functions, method whitelist and value formatting for the sandbox."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import LimitExceeded, ScriptTypeError, ToolError


@dataclass(frozen=True)
class Builtin:
    name: str
    fn: Callable[..., Any]  # fn(ctx, *args)
    signature: str
    doc: str
    tool: bool = False
    min_args: int = 0
    max_args: int | None = None


class BuiltinRegistry:
    """Name -> :class:`Builtin` mapping handed to every new session."""

    def __init__(self, builtins: list[Builtin] = ()):
        self._items: dict[str, Builtin] = {}
        for b in builtins:
            self.register(b)

    def register(self, builtin: Builtin) -> None:
        self._items[builtin.name] = builtin

    def without(self, *names: str) -> "BuiltinRegistry":
        return BuiltinRegistry([b for n, b in self._items.items() if n not in names])

    def get(self, name: str) -> Builtin | None:
        return self._items.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._items

    def __iter__(self):
        return iter(self._items.values())

    def names(self) -> list[str]:
        return list(self._items)

    def describe(self, tools_only: bool = False) -> str:
        """One line per builtin, used in the executor system prompt."""
        return "\n".join(f"- {b.signature}: {b.doc}" for b in self._items.values()
                         if b.tool or not tools_only)


@dataclass(frozen=True)
class ToolCallRecord:
    name: str
    arg_digest: str
    urls: tuple[str, ...] = ()
    args: tuple = ()
    detail: dict = field(default_factory=dict, hash=False, compare=False)

    def to_dict(self) -> dict:
        out = {"name": self.name, "arg_digest": self.arg_digest, "args": list(self.args),
               "urls": list(self.urls)}
        if self.detail:
            out["detail"] = dict(self.detail)
        return out


def arg_digest(args: tuple) -> str:
    payload = json.dumps(list(args), sort_keys=True, default=str, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class CallContext:
    """Per-execution services available to builtin implementations."""

    max_tool_calls: int
    write: Callable[[str], None]
    check_deadline: Callable[[], None]
    tool_calls: list[ToolCallRecord] = field(default_factory=list)
    reserved: int = 0

    def reserve(self, n: int = 1) -> None:
        if self.reserved + n > self.max_tool_calls:
            raise LimitExceeded(f"tool call limit of {self.max_tool_calls} per execution")
        self.reserved += n

    def record(self, name: str, args: tuple, urls=(), detail: dict | None = None) -> None:
        self.tool_calls.append(ToolCallRecord(name, arg_digest(args), tuple(urls), tuple(args), detail or {}))


# --- formatting ---------------------------------------------------------------

def type_name(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        return "list"
    if isinstance(v, dict):
        return "map"
    return "function"


def display(v: Any, nested: bool = False) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False) if nested else v
    if isinstance(v, list):
        return "[" + ", ".join(display(x, True) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{display(k, True)}: {display(x, True)}" for k, x in v.items()) + "}"
    name = getattr(v, "name", "?")
    return f"<function {name}>"


# --- core builtins --------------------------------------------------------------

def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ScriptTypeError(msg)


def _print(ctx, *args):
    ctx.write(" ".join(display(a) for a in args) + "\n")


def _len(ctx, x):
    _need(isinstance(x, (str, list, dict)), f"len() expects string, list or map, got {type_name(x)}")
    return len(x)


def _range(ctx, *args):
    _need(all(isinstance(a, int) and not isinstance(a, bool) for a in args), "range() expects integers")
    r = range(*args)
    _need(len(r) <= 1_000_000, "range() too large")
    return list(r)


def _str(ctx, x):
    return display(x)


def _int(ctx, x):
    try:
        return int(x) if not isinstance(x, str) else int(x.strip())
    except (TypeError, ValueError):
        raise ScriptTypeError(f"cannot convert {display(x, True)} to int") from None


def _float(ctx, x):
    try:
        return float(x)
    except (TypeError, ValueError):
        raise ScriptTypeError(f"cannot convert {display(x, True)} to float") from None


def _append(ctx, xs, v):
    _need(isinstance(xs, list), f"append() expects a list, got {type_name(xs)}")
    xs.append(v)
    return xs


def _keys(ctx, m):
    _need(isinstance(m, dict), f"keys() expects a map, got {type_name(m)}")
    return list(m.keys())


def _values(ctx, m):
    _need(isinstance(m, dict), f"values() expects a map, got {type_name(m)}")
    return list(m.values())


def _contains(ctx, haystack, needle):
    if isinstance(haystack, str):
        _need(isinstance(needle, str), "contains() on a string expects a string needle")
        return needle.lower() in haystack.lower()
    _need(isinstance(haystack, (list, dict)), f"contains() expects string, list or map, got {type_name(haystack)}")
    return needle in haystack


def _join(ctx, sep, items):
    _need(isinstance(sep, str) and isinstance(items, list), "join(sep, list) expects a string and a list")
    return sep.join(display(i) for i in items)


def _split(ctx, s, sep=None):
    _need(isinstance(s, str), "split() expects a string")
    return s.split(sep) if sep is not None else s.split()


def _lower(ctx, s):
    _need(isinstance(s, str), "lower() expects a string")
    return s.lower()


def _sorted(ctx, xs):
    _need(isinstance(xs, list), "sorted() expects a list")
    try:
        return sorted(xs)
    except TypeError:
        raise ScriptTypeError("sorted() needs mutually comparable items") from None


def _numbers(name, xs):
    _need(isinstance(xs, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in xs),
          f"{name}() expects a list of numbers")


def _sum(ctx, xs):
    _numbers("sum", xs)
    return sum(xs)


def _min(ctx, *xs):
    xs = xs[0] if len(xs) == 1 and isinstance(xs[0], list) else list(xs)
    _need(len(xs) > 0, "min() of empty sequence")
    try:
        return min(xs)
    except TypeError:
        raise ScriptTypeError("min() needs comparable items") from None


def _max(ctx, *xs):
    xs = xs[0] if len(xs) == 1 and isinstance(xs[0], list) else list(xs)
    _need(len(xs) > 0, "max() of empty sequence")
    try:
        return max(xs)
    except TypeError:
        raise ScriptTypeError("max() needs comparable items") from None


def _abs(ctx, x):
    _need(isinstance(x, (int, float)) and not isinstance(x, bool), "abs() expects a number")
    return abs(x)


def _round(ctx, x, nd=0):
    _need(isinstance(x, (int, float)) and isinstance(nd, int), "round() expects a number")
    return round(x, nd) if nd else round(x)


def _enumerate(ctx, xs):
    _need(isinstance(xs, list), "enumerate() expects a list")
    return [[i, x] for i, x in enumerate(xs)]


def _type(ctx, x):
    return type_name(x)


CORE_BUILTINS = [
    Builtin("print", _print, "print(value, ...)", "write values separated by spaces, then a newline"),
    Builtin("len", _len, "len(x) -> int", "length of a string, list or map", min_args=1, max_args=1),
    Builtin("range", _range, "range([start,] stop[, step]) -> list", "list of integers", min_args=1, max_args=3),
    Builtin("str", _str, "str(x) -> string", "display form of a value", min_args=1, max_args=1),
    Builtin("int", _int, "int(x) -> int", "convert to integer", min_args=1, max_args=1),
    Builtin("float", _float, "float(x) -> float", "convert to float", min_args=1, max_args=1),
    Builtin("append", _append, "append(list, value) -> list", "append in place and return the list", min_args=2, max_args=2),
    Builtin("keys", _keys, "keys(map) -> list", "keys in insertion order", min_args=1, max_args=1),
    Builtin("values", _values, "values(map) -> list", "values in insertion order", min_args=1, max_args=1),
    Builtin("contains", _contains, "contains(haystack, needle) -> bool",
            "case-insensitive substring test for strings, membership for lists and maps", min_args=2, max_args=2),
    Builtin("join", _join, "join(sep, list) -> string", "join display forms with sep", min_args=2, max_args=2),
    Builtin("split", _split, "split(string[, sep]) -> list", "split on whitespace or sep", min_args=1, max_args=2),
    Builtin("lower", _lower, "lower(string) -> string", "lower-case copy", min_args=1, max_args=1),
    Builtin("sorted", _sorted, "sorted(list) -> list", "ascending copy", min_args=1, max_args=1),
    Builtin("sum", _sum, "sum(list) -> number", "sum of numbers", min_args=1, max_args=1),
    Builtin("min", _min, "min(list | a, b, ...)", "smallest item", min_args=1),
    Builtin("max", _max, "max(list | a, b, ...)", "largest item", min_args=1),
    Builtin("abs", _abs, "abs(x) -> number", "absolute value", min_args=1, max_args=1),
    Builtin("round", _round, "round(x[, digits]) -> number", "round half to even", min_args=1, max_args=2),
    Builtin("enumerate", _enumerate, "enumerate(list) -> list", "list of [index, item] pairs", min_args=1, max_args=1),
    Builtin("type", _type, "type(x) -> string", "type name", min_args=1, max_args=1),
]


# receiver type -> allowed method names; all are pure or mutate only the receiver
METHODS: dict[type, set[str]] = {
    str: {"lower", "upper", "strip", "split", "join", "startswith", "endswith", "replace",
          "find", "count", "splitlines"},
    list: {"append", "extend", "pop", "index", "count", "insert", "reverse"},
    dict: {"get", "keys", "values", "items", "pop", "update"},
}


def call_method(obj: Any, method: str, args: list) -> Any:
    kind = type(obj) if type(obj) in METHODS else None
    if kind is None or method not in METHODS[kind]:
        raise ScriptTypeError(f"{type_name(obj)} has no method {method!r}")
    try:
        result = getattr(obj, method)(*args)
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise ScriptTypeError(f"{type_name(obj)}.{method}(): {exc}") from None
    if method in ("keys", "values"):
        return list(result)
    if method == "items":
        return [[k, v] for k, v in result]
    return result


def check_tool_arg(name: str, value: Any, kind, what: str) -> None:
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ScriptTypeError(f"{name}() argument {what} must be {_kind_name(kind)}, got {type_name(value)}")


def _kind_name(kind) -> str:
    names = {str: "string", int: "int", list: "list", dict: "map", float: "float"}
    if isinstance(kind, tuple):
        return " or ".join(names.get(k, k.__name__) for k in kind)
    return names.get(kind, kind.__name__)


__all__ = [
    "Builtin", "BuiltinRegistry", "CallContext", "CORE_BUILTINS", "ToolCallRecord", "ToolError",
    "call_method", "check_tool_arg", "display", "type_name",
]
