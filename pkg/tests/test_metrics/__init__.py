# Test package for metrics module
