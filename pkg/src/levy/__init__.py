"""Lévy-process simulation, increment densities, estimators and benchmarks."""
