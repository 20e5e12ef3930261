# Test package for core module
