# Test package for shaping module
