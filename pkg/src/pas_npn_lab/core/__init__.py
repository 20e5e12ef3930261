"""Core utilities for the shaping lab: configuration, logging and errors."""
