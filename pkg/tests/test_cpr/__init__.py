# Test package for cpr module
