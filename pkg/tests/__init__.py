"""Tests for coordconf."""
