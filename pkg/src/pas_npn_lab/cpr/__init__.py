"""Carrier phase recovery."""
