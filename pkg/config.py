#!/usr/bin/env python3
"""
SISI Operator Toolkit - Configuration

Default settings for the toolkit. Values can be overridden through a .env file
or environment variables (see LOGGING and STORAGE), or per CLI invocation with
a JSON config file.
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Operator iteration
DYNAMICS = {
    "tol_simplex": 1e-9,      # simplex membership tolerance
    "tol_conv": 1e-10,        # sup-norm step difference that counts as converged
    "max_iters": 10_000,      # default budget for a single trajectory run
    "max_stored_iterates": 10_000,  # trajectories longer than this are thinned
}

# Interior fixed point equation
ROOTS = {
    "equality_tol": 1e-12,    # |beta1*k1 - (b+alpha)| below this takes the linear closed form
    "bracket_low": 1e-15,     # left end of the bracketing fallback
    "residual_tol": 1e-12,    # accepted |f(A) - g(A)| for a returned root
    "consistency_tol": 1e-8,  # lambda17 self-consistency check
}

# Spectral classification
STABILITY = {
    "unit_circle_tol": 1e-8,
    "fixedness_tol": 1e-8,    # classify_fixed_point rejects points with larger residual
    "fd_step": 1e-6,          # finite difference step used by jacobian checks
}

# Batch experiments
HARNESS = {
    "seed": 20210,
    "max_iters": 10**6,
    "tol_conv": 1e-10,
    "tol_match": 1e-6,
    "exclusion_radius": 1e-9,  # initial points this close to Fix(V) are redrawn
    "max_redraws": 1000,
    "max_rejections": 100_000,  # parameter draws rejected against (cond) before giving up
    "margin": 0.0,             # minimum |beta1*k1 - (b+alpha)| for branch draws
    "local_radius": 1e-3,      # theorem2-local starts lie this close to lambda16
    "param_box": {
        "b": (0.05, 0.5),
        "alpha": (0.05, 0.5),
        "beta1": (0.0, 1.0),
        "beta2": (0.0, 1.0),
        "k1": (0.0, 1.0),
        "k2": (0.0, 1.0),
    },
    "workers": 1,
    "progress": True,
}

# Storage Settings
STORAGE = {
    "database_path": os.getenv("SISI_DB_PATH", "data/sisi_results.sqlite"),
    "backup_directory": "data/backups",
}

# Logging Settings
LOGGING = {
    "level": os.getenv("SISI_LOG_LEVEL", "WARNING"),  # DEBUG, INFO, WARNING, ERROR, or CRITICAL
    "log_directory": os.getenv("SISI_LOG_DIR", ""),   # empty: no log file
}
