"""Distribution matchers (SS, SM, CCDM), their statistics and long-block emulation."""
