"""Integration tests package."""
