"""WDM waveform generation, fiber propagation and receiver-side compensation."""
