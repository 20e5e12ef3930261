# Test package for channel module
