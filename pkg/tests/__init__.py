"""Test suite for narrowqa."""
