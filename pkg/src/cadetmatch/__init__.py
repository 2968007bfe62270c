"""Cadet-to-branch assignment mechanisms with voluntary increased service costs."""

from cadetmatch.core import (
    UNMATCHED,
    Allocation,
    BaselinePriority,
    BranchQuota,
    Contract,
    ContractPreference,
    Cost,
    Economy,
    QuasiStrategy,
    ValidityReport,
    compare_assignments,
    validate_allocation,
)
from cadetmatch.policies import (
    BradsoPolicy,
    NativeOrder,
    TierAssignment,
    TierVariant,
    native_order,
    tiered_policy,
    ultimate_policy,
    weakly_more_effective,
)

__all__ = [
    "UNMATCHED",
    "Allocation",
    "BaselinePriority",
    "BradsoPolicy",
    "BranchQuota",
    "Contract",
    "ContractPreference",
    "Cost",
    "Economy",
    "NativeOrder",
    "QuasiStrategy",
    "TierAssignment",
    "TierVariant",
    "ValidityReport",
    "compare_assignments",
    "native_order",
    "tiered_policy",
    "ultimate_policy",
    "validate_allocation",
    "weakly_more_effective",
]

__version__ = "0.1.0"
