"""Forced inviscid Burgers equation on the torus: entropy solver, cell problem,
effective Hamiltonian, resonance scans and spectral diagnostics."""

__version__ = "0.1.0"
