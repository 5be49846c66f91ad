"""Tests package."""
