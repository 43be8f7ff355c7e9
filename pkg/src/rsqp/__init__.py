"""Reference-spreading QP control for dual-arm impact manipulation, in simulation.

Record an impact-consistent demonstration under a low-gain impedance QP,
extend it into overlapping ante/post-impact references, and track it
autonomously through ante, interim, and post-impact QP modes.
"""

from ._kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
