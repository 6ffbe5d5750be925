"""
Theta module: truncated theta kernels of R(l;g), the determinant-class
profile behind the L2 integrand and the countable fourth-moment bound.
"""
