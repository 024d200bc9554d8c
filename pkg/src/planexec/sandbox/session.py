"""Stateful, isolated script sessions."""
from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from ..errors import LimitExceeded, ParseError, ScriptError, SessionClosed
from .builtins import CORE_BUILTINS, BuiltinRegistry, CallContext, ToolCallRecord
from .interpreter import Interpreter, _Break, _Continue, _Return
from .parser import ScriptSyntaxError, parse

TRUNCATION_MARKER = "\n…[truncated]"
REQUIRED_BUILTINS = ("print", "web_search", "parse_page")


@dataclass(frozen=True)
class ResourceLimits:
    max_wall_time: float = 30.0
    max_stdout_bytes: int = 16384
    max_loop_iterations: int = 100_000
    max_tool_calls_per_execution: int = 256

    def __post_init__(self):
        if min(self.max_wall_time, self.max_stdout_bytes, self.max_loop_iterations,
               self.max_tool_calls_per_execution) <= 0:
            raise ValueError("resource limits must be positive")
        if self.max_stdout_bytes <= len(TRUNCATION_MARKER.encode()):
            raise ValueError("max_stdout_bytes must leave room for the truncation marker")


@dataclass
class ExecutionOutput:
    stdout: str
    error: str | None = None
    wall_time: float = 0.0
    truncated: bool = False
    tool_calls: list[ToolCallRecord] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None

    def render(self) -> str:
        """Text placed inside the ``<execution_results>`` block."""
        if self.error is None:
            return self.stdout
        sep = "" if not self.stdout or self.stdout.endswith("\n") else "\n"
        return f"{self.stdout}{sep}{self.error}"


class _Stdout:
    """UTF-8 byte-capped output buffer.

    Once the cap is hit the text is cut so that text plus marker occupy
    exactly ``cap`` bytes (ASCII output) and further writes are dropped.
    """

    def __init__(self, cap: int):
        self.cap = cap
        self.parts: list[str] = []
        self.size = 0
        self.truncated = False

    def write(self, text: str) -> None:
        if self.truncated:
            return
        data = text.encode("utf-8")
        if self.size + len(data) <= self.cap:
            self.parts.append(text)
            self.size += len(data)
            return
        self.parts.append(text)
        self.truncated = True

    def getvalue(self) -> str:
        text = "".join(self.parts)
        if not self.truncated:
            return text
        room = self.cap - len(TRUNCATION_MARKER.encode("utf-8"))
        head = text.encode("utf-8")[:room].decode("utf-8", errors="ignore")
        return head + TRUNCATION_MARKER


class SandboxSession:
    def __init__(self, limits: ResourceLimits, registry: BuiltinRegistry):
        self.id = uuid.uuid4().hex
        self.limits = limits
        self.registry = registry
        self.bindings: dict = {}
        self.defined_functions: dict = {}
        self.execution_count = 0
        self.closed = False
        self._lock = threading.Lock()

    def __repr__(self):
        return f"<SandboxSession {self.id[:8]} bindings={len(self.bindings)} runs={self.execution_count}>"


def create_session(limits: ResourceLimits | None = None,
                   builtins: BuiltinRegistry | None = None) -> SandboxSession:
    registry = BuiltinRegistry(CORE_BUILTINS)
    for b in builtins or ():
        registry.register(b)
    missing = [n for n in REQUIRED_BUILTINS if n not in registry]
    if builtins is not None and missing:
        raise ValueError(f"registry is missing required builtins: {', '.join(missing)}")
    return SandboxSession(limits or ResourceLimits(), registry)


def execute(session: SandboxSession, script: str) -> ExecutionOutput:
    if session.closed:
        raise SessionClosed("session closed")
    if not session._lock.acquire(blocking=False):
        raise RuntimeError("session is already executing a script")
    try:
        return _execute(session, script)
    finally:
        session._lock.release()


def _execute(session: SandboxSession, script: str) -> ExecutionOutput:
    limits = session.limits
    start = time.monotonic()
    deadline = start + limits.max_wall_time
    out = _Stdout(limits.max_stdout_bytes)
    session.execution_count += 1
    error = None

    def check_deadline():
        if time.monotonic() > deadline:
            raise LimitExceeded("wall time limit exceeded")

    ctx = CallContext(limits.max_tool_calls_per_execution, out.write, check_deadline)
    try:
        program = parse(script)
    except ScriptSyntaxError as exc:
        error = ParseError(str(exc), exc.line).diagnostic()
    except RecursionError:
        error = ParseError("script nested too deeply").diagnostic()
    else:
        interp = Interpreter(session.bindings, session.defined_functions, session.registry,
                             ctx, deadline, limits.max_loop_iterations)
        try:
            interp.run(program)
        except ScriptError as exc:
            error = exc.diagnostic()
        except (_Break, _Continue):
            error = ScriptError("break/continue outside loop").diagnostic()
        except _Return:
            error = ScriptError("return outside function").diagnostic()
        except RecursionError:
            error = LimitExceeded("nesting too deep").diagnostic()
    return ExecutionOutput(
        stdout=out.getvalue(),
        error=error,
        wall_time=time.monotonic() - start,
        truncated=out.truncated,
        tool_calls=list(ctx.tool_calls),
    )


def destroy_session(session: SandboxSession) -> None:
    if session.closed:
        return
    session.closed = True
    session.bindings.clear()
    session.defined_functions.clear()
