"""Probabilistic amplitude shaping: QAM constellation, serial/parallel 4D maps and bit-metric demapping."""
