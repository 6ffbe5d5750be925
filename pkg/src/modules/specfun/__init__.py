"""
Special functions: K-Bessel of imaginary order, the spherical function Xi
and the normalized incomplete gamma, each with independent evaluation
paths, plus the decay-envelope sweep.
"""
