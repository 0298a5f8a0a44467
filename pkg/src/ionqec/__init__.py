"""Repetition-code memories on ion crystals driven by a global entangling gate."""

__version__ = "0.1.0"

from .noise import NoiseParams, PauliFrame
from .statevector import Partition, StateVector

__all__ = ["NoiseParams", "PauliFrame", "Partition", "StateVector", "__version__"]
