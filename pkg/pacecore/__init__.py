"""Pacecore: artificial-currency pacing for repeated public-good allocation."""
