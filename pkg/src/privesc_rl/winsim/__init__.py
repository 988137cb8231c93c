"""Simulated Windows host: generation, ground truth, dynamics, facts."""

from .env import EscalationEnv, reset, step
from .facts import StepResult, fact_from_dict, fact_to_dict
from .generate import generate_host
from .host import AttackerContext, SimHost, check_success
from .knowledge import Knowledge

__all__ = [
    "AttackerContext",
    "EscalationEnv",
    "Knowledge",
    "SimHost",
    "StepResult",
    "check_success",
    "fact_from_dict",
    "fact_to_dict",
    "generate_host",
    "reset",
    "step",
]
