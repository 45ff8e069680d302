"""
Configuration settings for the recurrence lab
"""

import os

# Survival Grid Settings
T_MAX = 10.0  # Rescaled time horizon of every survival curve
DT = 0.05
CENSOR_HORIZON = 50.0  # Rescaled censoring cap, cap_steps = ceil(CENSOR_HORIZON / mu(B))

# Orbit Settings
BLOCK_CAP = 10**9  # Max steps between two visits of the return set
DEGENERATE_REDRAWS = 8  # Redraw attempts for Gauss map orbits hitting 0

# Renewal Series Settings
SERIES_TERMS = 10**6  # Terms summed explicitly before the tail correction
SAMPLER_TABLE_START = 2**12  # Initial size of the stationary inverse-CDF table
SAMPLER_TABLE_MAX = 2**22  # Table stops growing here, Hurwitz zeta takes over
SYMBOL_CEILING = 2**53  # Largest renewal symbol representable exactly

# Divergence Probe Settings
DIVERGENCE_FLOOR = 1e-2  # Doubling increments above this count as divergent
CONVERGENCE_TOLERANCE = 1e-3  # Relative doubling increment below this converges
SLOPE_TOLERANCE = 0.1
BOUNDARY_ALPHA = 2.0  # Log-divergent, excluded from dichotomy assertions

# Statistical Settings
DKW_ALPHA = 0.01  # DKW bounds hold with probability 1 - DKW_ALPHA
KAC_SIGMAS = 4.0
TAIL_FIT_FRACTION = 0.1  # Last tenth of the grid feeds the tail fit

# Verification Defaults
VERIFY_DEFAULTS = {
    'alpha': 1.5,
    'seed': 20240601,
    'kac_samples': 10**6,
    'thm_samples': 10**5,
    'oracle_samples': 10**5,
    'prop2_samples': 10**5,
    'pathwise_samples': 10**4,
    'rotation_samples': 10**5,
}

THM_BLOCKS = (2, 3, 4)  # Aperiodic block pattern, induced measure ~3.86e-4
PROP2_WORD = (1, 1, 1, 1, 1, 1, 1, 1, 1, 2)  # Aperiodic binary word of length 10
GOLDEN_THETA = (5 ** 0.5 - 1) / 2

VERIFY_TOLERANCES = {
    'telescoping': 1e-10,
    'product': 1e-12,  # running product of p_i against j^-alpha
    'eigenvector': 1e-10,
    'kac_analytic': 1e-8,
    'factorization': 1e-12,
    'identity': 1e-10,  # entry rebuilt from return, exact recursion
    'induced_gap': 0.03,
    'exponential_gap': 0.03,
    'prop2': 0.03,
    'oracle': 0.006,
    'rotation_gap': 0.04,
    'jump_slack': 1e-12,
}

# Worker Settings
WORKERS = 1
CHUNK_TRIALS = 50000  # Trials per worker task

# Paths
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
PRESET_DIR = os.path.join(BASE_DIR, 'presets')
OUTPUT_DIR = os.path.join(BASE_DIR, 'output')
