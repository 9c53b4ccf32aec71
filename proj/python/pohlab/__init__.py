"""Phase-only hologram generation, coding and evaluation.

Holograms are 2-D uint8 arrays (sample p is phase 2*pi*p/256), complex
fields are 2-D complex128 arrays, distances are meters.
"""

from ._pohlab import *  # noqa: F401,F403
from ._pohlab import CapacityError, CodecError, PohlabError

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.3.0"
