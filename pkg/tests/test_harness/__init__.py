# Test package for harness module
