"""Stateful sandbox for the agent scripting language."""
from .builtins import Builtin, BuiltinRegistry, CallContext, ToolCallRecord, display
from .parser import ScriptSyntaxError, parse
from .session import (
    ExecutionOutput,
    ResourceLimits,
    SandboxSession,
    create_session,
    destroy_session,
    execute,
)

__all__ = [
    "Builtin", "BuiltinRegistry", "CallContext", "ExecutionOutput", "ResourceLimits",
    "SandboxSession", "ScriptSyntaxError", "ToolCallRecord", "create_session",
    "destroy_session", "display", "execute", "parse",
]
