"""Batch experiment harness."""
