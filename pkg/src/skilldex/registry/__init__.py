"""Metadata-only registry service for skills and skillsets."""

from skilldex.registry.service import Registry, RegistryError, SeedSource
from skilldex.registry.server import RegistryServer

__all__ = ["Registry", "RegistryError", "RegistryServer", "SeedSource"]
