"""Unit tests for narrowqa modules."""
