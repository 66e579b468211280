# Default settings for tailrisk. Every value here can be overridden per call
# (keyword arguments) or per run (CLI flags); this module only holds defaults.

# Distribution kernels
DIST_CONFIG = {
    'xi_zero_tol': 1e-12,      # |xi| below this uses the exponential / Gumbel branch
}

# Domain-of-attraction points
DOA_CONFIG = {
    'x_points': [1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
    'u_points': [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
    'lambdas': [2.0, 5.0, 10.0],
    't_points': [-1.0, 0.5, 1.0, 2.0],
    'acceptance_residual': 1e-2,
    'tail_points': 2,          # residuals are measured on the last N points
    'quad_epsrel': 1e-10,
    'quad_limit': 200,
    'maxima_grid': [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0],
}

# Threshold diagnostics
DIAG_CONFIG = {
    'min_exceed': 30,
    'grid_points': 40,
    'grid_lo_pct': 50.0,
    'grid_hi_pct': 99.5,
    'mrl_linearity_bound': 2.0,   # reduced chi-square of the trailing MRL line
    'xi_stability_z': 2.0,        # allowed xi drift, in standard errors
    'n_jobs': 1,                  # per-threshold fits (joblib, thread backend)
    'bins': 30,                   # density histogram
}

# GPD fitting
FIT_CONFIG = {
    'min_mle_exceed': 10,
    'min_pwm_exceed': 4,
    'xatol': 1e-8,
    'fatol': 1e-13,              # on the per-observation negative log-likelihood
    'maxiter': 5000,
    'restart_xi': 0.1,
    'grad_tol': 1e-6,             # max-norm of the per-observation gradient
    'hessian_rel_step': 1e-4,
    'confidence_level': 0.95,
}

# VaR / ES / return levels
RISK_CONFIG = {
    'q_list': [0.95, 0.99, 0.995],
    'obs_per_period': 1.0,
    'periods': [2, 5, 10, 20, 50, 100, 200, 500, 1000],
    'band_level': 0.95,
}

# Claim file schema
CSV_CONFIG = {
    'claim_size_column': 'claim_size',
    'gender_column': 'gender',
    'experience_column': 'experience',
    'gender_codes': {
        'm': 'Male', 'male': 'Male', '1': 'Male',
        'f': 'Female', 'female': 'Female', '2': 'Female',
    },
    'experience_codes': {
        'y': 'Young', 'young': 'Young', 'novice': 'Young',
        'e': 'Experienced', 'experienced': 'Experienced', 'senior': 'Experienced',
    },
    'unknown_codes': ['', 'u', 'unknown', 'na', 'n/a'],   # mapped to Unknown without a warning
}

# Synthetic spliced portfolio (log-severity units)
SIM_CONFIG = {
    'n': 100000,
    'body_mu': 7.0,
    'body_sigma': 1.0,
    'splice_u': 8.5,
    'tail_xi': -0.1,
    'tail_beta': 0.6,
    'tail_weight': 0.1,
    'gender_mix': {'Male': 0.6, 'Female': 0.35, 'Unknown': 0.05},
    'experience_mix': {'Young': 0.3, 'Experienced': 0.65, 'Unknown': 0.05},
}

# Output files
OUTPUT_CONFIG = {
    'out_dir': 'tailrisk_out',
    'format': 'csv',
    'float_format': '%.12g',
    'manifest_filename': 'run_manifest.json',
    'cache_filename': 'fit_cache.json',
    'simulated_filename': 'simulated_claims.csv',
}
