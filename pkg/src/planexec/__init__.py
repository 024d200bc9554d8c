"""Planner/executor agent framework with a scripting sandbox and simulated web."""

__version__ = "0.1.0"
