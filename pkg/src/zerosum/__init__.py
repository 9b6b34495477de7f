"""Zero-sum invariants of modified dicyclic groups and their baselines."""

__version__ = "0.1.0"

from .errors import ZeroSumError  # noqa: E402
from .groups import GroupSpec, GroupTable, build_group, evaluate_word  # noqa: E402
from .sequences import Certificate, Sequence  # noqa: E402

__all__ = [
    "__version__", "ZeroSumError", "GroupSpec", "GroupTable", "build_group", "evaluate_word",
    "Certificate", "Sequence",
]
