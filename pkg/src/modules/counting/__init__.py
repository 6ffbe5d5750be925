"""
Counting module: Fincke-Pohst enumeration of R(l;g) in the regions
Omega and Psi, pair counts with equal determinant and diamond windows,
successive minima and bound sweeps.
"""
