"""Packaged data files (default experiment configuration)."""
