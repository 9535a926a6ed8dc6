"""Adapters for interfacing with external systems and formats."""
