"""NPN model, kernel coefficients, energy dispersion indices, AIR and SNR."""
