import os
from dotenv import load_dotenv

load_dotenv(override=True)


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value else default


LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Randomness / Monte Carlo
DEFAULT_SEED = _env_int("DEFAULT_SEED", 0)
MC_SAMPLES = _env_int("MC_SAMPLES", 1_000_000)
MC_CHUNK = _env_int("MC_CHUNK", 100_000)
MIN_CLI_SAMPLES = 1_000

# SDP solver (read at call time, so `--sdp-tol` can override SDP_TOL)
SDP_TOL = _env_float("SDP_TOL", 1e-8)
SDP_GAP_TOL = _env_float("SDP_GAP_TOL", 1e-9)
SDP_MAX_ITER = _env_int("SDP_MAX_ITER", 200)
SDP_STEP_FRACTION = _env_float("SDP_STEP_FRACTION", 0.98)
# Status "optimal" is granted when these are met, even if the tighter targets above are not
SDP_ACCEPT_RESIDUAL = 1e-8
SDP_ACCEPT_GAP = 1e-7

# Tolerances
HERMITIAN_TOL = 1e-12
SPECTRAL_TOL = 1e-9
MEMBERSHIP_TOL = _env_float("MEMBERSHIP_TOL", 1e-9)
INCLUSION_TOL = _env_float("INCLUSION_TOL", 1e-6)
SUPPORT_TOL = 1e-9
FEASIBILITY_TOL = 1e-8
JM_MARGIN = _env_float("JM_MARGIN", 1e-7)
BISECTION_REL_WIDTH = 1e-6
INCLUSION_SLACK = 1e-7
NOISE_BISECTION_WIDTH = 1e-4
SEESAW_GAIN_TOL = 1e-9

# Guards
ENUMERATION_MAX_G = 24
JM_MAX_G = 8
INCLUSION_MAX_DIM = 64
ANTICOMMUTING_MAX_G = 13
TAU_MC_MAX_D = 32
KRON_MAX_DIM = 4096

# Nets / certification
ICOSPHERE_LEVEL = _env_int("ICOSPHERE_LEVEL", 5)
NET_COVERING_SLACK = 0.05

# Subcommand registry for the command-line front end
SUBCOMMANDS = {
    "tau": "matrix-cube inclusion constant tau*(d): closed form and Monte Carlo",
    "value": "LHS value, quantum value and violation of a steering inequality",
    "inclusion": "cube inclusion SDP for a spectrahedron tuple (max scale + certificates)",
    "pauli": "anti-commuting Pauli steering inequality and its values",
    "netopt": "Haar-net steering inequality with certified LHS bound",
    "lhs": "LHS-model decision for an assemblage",
    "robustness": "white-noise joint-measurability threshold",
    "region": "per-instance upper bounds on the inclusion-constant region along directions",
}
