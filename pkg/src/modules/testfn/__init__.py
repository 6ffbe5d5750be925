"""
Test-function module.

The archimedean test function Phi(P, tau) attached to a spectral window,
its two evaluation routes, the forward transform and the PDE check.
"""
