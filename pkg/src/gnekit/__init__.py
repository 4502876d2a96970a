"""Tools for computing and designing generalized Nash equilibria.

Games are either linear-quadratic (LQGame) or defined by smooth callbacks
(NonlinearGame).  Equilibria are computed by smoothed-KKT nonlinear least
squares (nls), or exactly for LQ games via mixed-integer programming (milp).
The design layer tunes game parameters so the resulting equilibrium
optimizes a separate objective.  The control module applies the machinery
to LQR gain games and distributed model predictive control.
"""

from .model import (PlayerLayout, ParamBox, NonlinearGame, LQGame,
                    DesignObjective, augment_bounds, validate_nonlinear,
                    validate_lq, build_inverse_objective)
from .kkt import residual, residual_jacobian, make_layout, KKTVector, \
    fischer_burmeister, expand_variational
from .nls import (LMConfig, solve_gne_nls, solve_design, solve_sparse,
                  best_response_certificate)
from .milp import MipConfig, build_mip, solve_mip, enumerate_equilibria, \
    solve_inverse_lq, export_mps, parse_mps
from .control import (LinearSystem, LQRGameSpec, solve_lqr_game,
                      lqr_best_response_gain, centralized_lqr_gain,
                      closed_loop_spectral_radius, MPCGameSpec,
                      build_mpc_game, simulate_mpc)
from . import convexcore, diff, gamefile

__all__ = [
    "PlayerLayout", "ParamBox", "NonlinearGame", "LQGame", "DesignObjective",
    "augment_bounds", "validate_nonlinear", "validate_lq",
    "build_inverse_objective", "residual", "residual_jacobian", "make_layout",
    "KKTVector", "fischer_burmeister", "expand_variational", "LMConfig",
    "solve_gne_nls", "solve_design", "solve_sparse",
    "best_response_certificate", "MipConfig", "build_mip", "solve_mip",
    "enumerate_equilibria", "solve_inverse_lq", "export_mps", "parse_mps",
    "LinearSystem", "LQRGameSpec", "solve_lqr_game",
    "lqr_best_response_gain", "centralized_lqr_gain",
    "closed_loop_spectral_radius", "MPCGameSpec", "build_mpc_game",
    "simulate_mpc", "convexcore", "diff", "gamefile",
]

__version__ = "0.1.0"
