"""Core domain models for mechanisms, pacing equilibria and core audits."""
