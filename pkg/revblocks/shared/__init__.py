"""Contain modules that can be used by several subpackages."""
