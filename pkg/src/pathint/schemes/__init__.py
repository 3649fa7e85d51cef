"""Regularization schemes, one module per scheme."""
