"""Re-runnable mechanism handles used by the auditors and analysis code.

A handle wraps an outcome function with its strategy space: ``direct``
handles take :class:`ContractPreference` profiles, ``quasi-direct`` handles
take :class:`QuasiStrategy` profiles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from cadetmatch.core import Allocation, ContractPreference, Cost, Economy, QuasiStrategy
from cadetmatch.mechanisms.classic import serial_dictatorship
from cadetmatch.mechanisms.cumulative_offer import com_bradso
from cadetmatch.mechanisms.quasi_direct import usma2006, usma2020
from cadetmatch.mechanisms.single_branch import phi_br

DIRECT = "direct"
QUASI_DIRECT = "quasi-direct"


@dataclass(frozen=True)
class Mechanism:
    name: str
    kind: str
    run: Callable[[Economy, Mapping], Allocation]

    def __call__(self, econ: Economy, profile: Mapping) -> Allocation:
        return self.run(econ, profile)

    @property
    def is_direct(self) -> bool:
        return self.kind == DIRECT


def truthful_strategy(pref: ContractPreference) -> QuasiStrategy:
    """Branch ranking by base-cost position; willing wherever the increased cost is acceptable."""
    order = tuple(b for b, t in pref.acceptable if t is Cost.BASE)
    willing = frozenset(b for b, t in pref.acceptable if t is Cost.INCREASED)
    return QuasiStrategy(pref.cadet, order, willing)


def consecutive_preference(strategy: QuasiStrategy) -> ContractPreference:
    """Contract preference that lists each increased-cost pair right after its base pair."""
    ranked = []
    for b in strategy.branch_order:
        ranked.append((b, Cost.BASE))
        if b in strategy.bradso_set:
            ranked.append((b, Cost.INCREASED))
    return ContractPreference(strategy.cadet, tuple(ranked))


def as_direct(mech: Mechanism) -> Mechanism:
    """Run a quasi-direct mechanism on the truthful projection of contract preferences."""
    if mech.is_direct:
        return mech

    def run(econ: Economy, prefs: Mapping) -> Allocation:
        return mech.run(econ, {i: truthful_strategy(p) for i, p in prefs.items()})

    return Mechanism(f"{mech.name}[direct]", DIRECT, run)


def as_quasi_direct(mech: Mechanism) -> Mechanism:
    """Run a direct mechanism on the consecutive embedding of quasi-strategies.

    With a single branch the embedding is a bijection between the two
    strategy spaces, so nothing is lost.
    """
    if not mech.is_direct:
        return mech

    def run(econ: Economy, strategies: Mapping) -> Allocation:
        return mech.run(econ, {i: consecutive_preference(s) for i, s in strategies.items()})

    return Mechanism(f"{mech.name}[quasi]", QUASI_DIRECT, run)


def _sd_direct(econ: Economy, prefs: Mapping) -> Allocation:
    return serial_dictatorship(econ, {i: truthful_strategy(p).branch_order for i, p in prefs.items()})


SERIAL_DICTATORSHIP = Mechanism("serial_dictatorship", DIRECT, _sd_direct)
PHI_BR = Mechanism("phi_br", DIRECT, phi_br)
COM_BRADSO = Mechanism("com_bradso", DIRECT, lambda e, p: com_bradso(e, p)[0])
USMA2006 = Mechanism("usma2006", QUASI_DIRECT, lambda e, s: usma2006(e, s)[0])
USMA2020 = Mechanism("usma2020", QUASI_DIRECT, lambda e, s: usma2020(e, s)[0])

REGISTRY = {
    "sd": SERIAL_DICTATORSHIP,
    "serial-dictatorship": SERIAL_DICTATORSHIP,
    "phi-br": PHI_BR,
    "com-bradso": COM_BRADSO,
    "usma2006": USMA2006,
    "usma2020": USMA2020,
}


def get(name: str) -> Mechanism:
    try:
        return REGISTRY[name.lower()]
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}; choose from {sorted(REGISTRY)}") from None
