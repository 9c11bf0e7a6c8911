"""Model-free online LQ control by Follow-the-Leader over fantasy trajectories."""
__version__ = "0.1.0"

from ._jit import USE_NUMBA
from .alice_core import AliceParams, alice_step, make_controller, observe_transition
from .linear_env import ASchedule, PlantConfig, env_step, init_env, observe
from .oracles import solve_dare
from .step_solver import StepProblem, solve_step
