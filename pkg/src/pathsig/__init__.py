"""Truncated path signatures over exact rationals or float64."""
