"""Renormalization-group step and contraction certificates for Dyson-Ising chains."""
