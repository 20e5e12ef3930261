# Test package for pas module
