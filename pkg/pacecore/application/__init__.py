"""Application layer for use cases and workflows."""
