from cadetmatch.mechanisms.classic import deferred_acceptance, serial_dictatorship
from cadetmatch.mechanisms.cumulative_offer import (
    ViabilityError,
    check_viable,
    choice_rule_br,
    com_bradso,
)
from cadetmatch.mechanisms.handles import (
    COM_BRADSO,
    DIRECT,
    PHI_BR,
    QUASI_DIRECT,
    SERIAL_DICTATORSHIP,
    USMA2006,
    USMA2020,
    Mechanism,
    as_direct,
    as_quasi_direct,
    consecutive_preference,
    truthful_strategy,
)
from cadetmatch.mechanisms.quasi_direct import RegimeError, adjusted_priority, usma2006, usma2020
from cadetmatch.mechanisms.single_branch import phi_br
from cadetmatch.mechanisms.trace import MechanismTrace, TraceEvent

__all__ = [
    "COM_BRADSO",
    "DIRECT",
    "PHI_BR",
    "QUASI_DIRECT",
    "SERIAL_DICTATORSHIP",
    "USMA2006",
    "USMA2020",
    "Mechanism",
    "MechanismTrace",
    "RegimeError",
    "TraceEvent",
    "ViabilityError",
    "adjusted_priority",
    "as_direct",
    "as_quasi_direct",
    "check_viable",
    "choice_rule_br",
    "com_bradso",
    "consecutive_preference",
    "deferred_acceptance",
    "phi_br",
    "serial_dictatorship",
    "truthful_strategy",
    "usma2006",
    "usma2020",
]
