"""GRAN super-resolution toolkit."""
