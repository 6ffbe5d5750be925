"""
Frozen constants for ratio and envelope checks.

The counting propositions and the appendix envelopes hide their implied
constants. Each value below is the single multiplicative constant a check
compares against. Regenerate with `thetalab fit` (maximum ratio of the
named sweep) and bump CONSTANTS_VERSION when a value changes.
"""

CONSTANTS_VERSION = "2026.10.1"

# Counting propositions, eps = 0, d_B = 1.
# Sweep: `thetalab fit --prop omega --N-max 6 --L-max 16`. The base point
# (N=1, l=1, g=I, delta=1, L=1) has ratio 608/16 = 38; the volume regime
# approaches 16*pi^4 ~ 1.56e3 as delta shrinks, cap set above that.
OMEGA_PROP_CONSTANT = 1.0e4

# Sweep: `thetalab fit --prop psi --N-max 6 --L-max 16`. Same volume-regime
# ceiling as the Omega sweep.
PSI_PROP_CONSTANT = 1.0e4

# Sweep: `thetalab fit --prop trace-free --N-max 6 --L-max 16`. Volume
# regime gives 4*pi ~ 12.6 against the cubic term.
TRACE_FREE_PROP_CONSTANT = 2.0e2

# Report-only threshold for the Conjecture scan.
HEART_CONJECTURE_CONSTANT = 1.0e3

# Sweep: `thetalab fit --prop upper-triangular --N-max 6 --L-max 16`.
# Base point ratio 204/4 = 51; det-zero class alone tends to ~158.
UPPER_TRIANGULAR_CONSTANT = 1.0e3

# lambda_1(R(l;g)^0, Psi(delta,1)) >= c * min(l^-1/2, l^-1 H^-1 delta^-1/2).
# Sweep: `thetalab minima --trace-free --N-max 6`; observed minimum ~0.5.
TRACE_FREE_MINIMUM_CONSTANT = 0.1

# lambda_1(R(l;g), Omega or Psi(delta,1)) >= c * min(l^-1/2, l^-1 H^-1 delta^-1/2),
# so the starred regions are empty below that scale.
# Sweep: `thetalab minima --region omega|psi --N-max 6`.
EMPTINESS_THRESHOLD_CONSTANT = 0.1

# |K cap Lambda| against prod(1 + 1/lambda_i), two-sided factor.
LATTICE_POINT_FACTOR = 64.0

# Appendix envelopes, j = 0, 1, 2.
# Sweep: `thetalab selftest --only appendix-bounds`, t in [-10, 10],
# x in [1e-2, 20] for K, u in [0, 200] for Xi.
BESSEL_ENVELOPE_CONSTANT = 25.0
XI_ENVELOPE_CONSTANT = 25.0

# Decay of Q and Phi for the long window T = 3, A = 6, P in [0, 20].
# Closed-form maxima: Q ~ 6.0, Phi envelope ~ 3.2e2.
Q_DECAY_CONSTANT = 10.0
PHI_DECAY_CONSTANT = 1.0e3

# Omega(1, L) point count over the volume estimate 2*pi^2*l^2*L^4/N, used
# by the theta truncation certificate.
SHELL_COUNT_CONSTANT = 2.0
