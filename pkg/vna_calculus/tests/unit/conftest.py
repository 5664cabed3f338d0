"""Unit test fixtures."""
