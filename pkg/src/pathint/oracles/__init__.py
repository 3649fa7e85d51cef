"""Independent ground-truth engines."""
