# Density-matrix engine: gates, Lindblad evolution and self-verification
