"""
Configuration for the RIS symbiotic radio toolkit
Defaults for topology, simulation grids and solver tolerances
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).resolve().parent.parent
OUTPUT_DIR = BASE_DIR / "outputs"
LOGS_DIR = BASE_DIR / "logs"

# Ensure directories exist
OUTPUT_DIR.mkdir(exist_ok=True)
LOGS_DIR.mkdir(exist_ok=True)

# Link geometry used throughout the simulations
TOPOLOGY_CONFIG = {
    "ptx": (0.0, 0.0),         # Primary transmitter position (m)
    "ris": (75.0, 10.0),       # Surface position (m)
    "crx": (80.0, 0.0),        # Cooperative receiver position (m)
    "exp_direct": 3.0,         # PTx -> C-Rx path-loss exponent
    "exp_ptx_ris": 2.1,        # PTx -> surface path-loss exponent
    "exp_ris_crx": 2.3,        # Surface -> C-Rx path-loss exponent
}

SIMULATION_CONFIG = {
    "noise_dbm": -100.0,       # Receiver noise power (dBm)
    "elements": 16,            # Surface elements K
    "trials": 10_000,          # Trials per SNR point
    "seed": 42,
    "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
    "block_size": 4096,        # Trials per random stream block
}

SOLVER_CONFIG = {
    "root_tol": 1e-13,         # Bisection bracket width
    "quad_tol": 1e-10,         # Absolute quadrature tolerance
    "constraint_tol": 1e-9,    # Modulus / angle constraint slack
    "clamp_tol": 1e-2,         # Largest modulus excess that may be clamped
    "neighbor_rel": 1e-6,      # Neighbor set threshold relative to d_min
    "tie_tol": 1e-12,          # Relative tie window in the detectors
}

# Structural-mode reflection coefficients used in the structural sweep
STRUCTURAL_MODES = {
    "strong": complex(0.6047, 0.5042),
    "medium": complex(0.2954, -0.0524),
    "weak": complex(0.1593, -0.1209),
}

# Worker cap for trial-parallel sweeps
_threads = os.getenv("SRRIS_THREADS")
MAX_WORKERS = int(_threads) if _threads else (os.cpu_count() or 1)

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
