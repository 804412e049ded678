"""Integration tests for narrowqa workflows."""
