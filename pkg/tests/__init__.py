"""Tests for the subfinsler package."""
