"""Experiment configs, sweep driver and result tables."""
