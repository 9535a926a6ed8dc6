"""Tests for the pacecore artificial-currency toolkit."""
