"""Configuration management for nlspike package."""

from .settings import KernelDefaults, RunSettings, load_defaults

__all__ = [
    "KernelDefaults",
    "RunSettings",
    "load_defaults",
]
