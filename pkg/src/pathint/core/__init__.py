"""Numeric substrate shared by every scheme."""
