"""Shared plumbing for the CIM-BS solver: configuration, registries and errors."""
