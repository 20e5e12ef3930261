# Test package for end-to-end experiment runs
