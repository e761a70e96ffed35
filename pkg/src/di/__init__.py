"""Dependency Injection module for trajnorm."""

from .container import AppContainer, get_container
from .providers import RepositoryProvider, ServiceProvider

__all__ = [
    "AppContainer",
    "get_container",
    "RepositoryProvider",
    "ServiceProvider",
]
