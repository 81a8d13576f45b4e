"""Scene-specific training data synthesis for foreground segmentation.

Weak foreground masks from a static camera are used to harvest objects,
which are pasted back onto a median background at their original
locations (optionally with Poisson blending) to build an annotated set.
"""

from scenesynth.errors import (
    ConfigError,
    DimensionError,
    SceneSynthError,
    SolverError,
)

__all__ = ["ConfigError", "DimensionError", "SceneSynthError", "SolverError"]
__version__ = "0.1.0"
