"""
Configuration for the annealfem box solver
Defaults for the box algorithm, the samplers and the HTTP API live here
"""

import os

from dotenv import load_dotenv

from modules.errors import SpecError

# Values in a local .env file override nothing already set in the environment
load_dotenv()

# Fallback seed when neither the CLI nor the spec file gives one
SEED_VARIABLE = 'ANNEALFEM_SEED'


def default_seed() -> int:
    """
    Seed from ANNEALFEM_SEED, 0 when unset. Read on every call.

    Raises:
        SpecError: the variable is not an unsigned 64-bit integer
    """
    raw = os.environ.get(SEED_VARIABLE, '0').strip()
    if not (raw.isascii() and raw.isdigit()) or int(raw) >= 2 ** 64:
        raise SpecError(f'expected an unsigned 64-bit integer, got {raw!r}', field=SEED_VARIABLE)
    return int(raw)


# Box algorithm settings
BOX_SETTINGS = {
    'r_init': float(os.environ.get('ANNEALFEM_R_INIT', '0.5')),
    'r_min': float(os.environ.get('ANNEALFEM_R_MIN', '1e-3')),
    'gap_factor': float(os.environ.get('ANNEALFEM_GAP_FACTOR', '10.0')),
    'max_iterations': int(os.environ.get('ANNEALFEM_MAX_ITERATIONS', '200')),
    'tie_tolerance': 1e-12,  # relative
    'energy_ceiling': 1.0,  # largest |J| after rescaling
    'dirichlet_slot': 2,
    'sampler': os.environ.get('ANNEALFEM_SAMPLER', 'exact'),
}

# Simulated annealing schedule (not calibrated against hardware runs)
ANNEAL_SETTINGS = {
    'sweeps': 2000,
    'beta_start': 0.1,
    'beta_end': 10.0,
    'reads': 50,
}

# Exhaustive solver budget: 2**24 labelings
EXACT_MAX_QUBITS = 24

# Gauss-Legendre points per element
QUAD_ORDER = 2

# HTTP API
API_SETTINGS = {
    'host': os.environ.get('ANNEALFEM_HOST', '127.0.0.1'),
    'port': int(os.environ.get('ANNEALFEM_PORT', '5000')),
}

# Logging
LOG_LEVEL = os.environ.get('ANNEALFEM_LOG_LEVEL', 'INFO').upper()
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
