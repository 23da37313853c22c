"""Partial computation offloading with SFC placement in MEC: simulator, TD3 + dueling DDQN agents, baselines."""
from .config import ExperimentConfig
from .orchestrator import Runner, evaluate_policy, run_baseline, train_cdadrl

__version__ = "0.1.0"

__all__ = ["ExperimentConfig", "Runner", "evaluate_policy", "run_baseline", "train_cdadrl"]
