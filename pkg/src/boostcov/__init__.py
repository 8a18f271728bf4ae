"""Complex boosted free-field covariances and their verification suites."""

from .symbols import BoostSpec
from .periodize import CompactSpec

__all__ = ["BoostSpec", "CompactSpec"]
__version__ = "0.1.0"
