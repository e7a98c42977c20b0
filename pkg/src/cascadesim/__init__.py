"""Vacuum-mediated two-molecule corrections to heterodyne-detected optical signals."""

from .core import MolecularModel, model_from_transitions, three_level, two_level
from .fields import Pulse
from .signals import Scenario, SignalGrid

__version__ = "0.1.0"

__all__ = ["MolecularModel", "Pulse", "Scenario", "SignalGrid", "model_from_transitions",
           "three_level", "two_level", "__version__"]
