"""Direct mechanism for a single branch that settles the number of increased-cost positions."""

from __future__ import annotations

from typing import Mapping

from cadetmatch.core import Allocation, ContractPreference, Cost, Economy


def phi_br(econ: Economy, prefs: Mapping[str, ContractPreference]) -> Allocation:
    """Single-branch allocation.

    Cadets are ranked by the branch priority. The top ``q0`` keep base-cost
    positions, the next ``q+`` hold base-cost positions tentatively, and a
    counting pass decides how many of those tentative holders (from the bottom
    up) give way to lower-priority cadets whose increased-cost pair the
    policy ranks above the tentative holder's base-cost pair.

    Cadets who do not find ``(b, t0)`` acceptable take no part. When fewer
    cadets remain than there are positions, each stage takes everyone left.
    """
    if not econ.is_single_branch:
        raise ValueError("phi_br is defined for single-branch economies only")
    (b,) = econ.branches
    q = econ.quotas[b]
    pri = econ.priorities[b]
    policy = econ.policies[b]

    def accepts(i: str, t: Cost) -> bool:
        return prefs[i].is_acceptable((b, t)) if i in prefs else False

    ranked = [i for i in pri.ranking if accepts(i, Cost.BASE)]
    top = ranked[: q.base_only]
    middle = ranked[q.base_only : q.base_only + q.bradso_cap]
    below = ranked[q.base_only + q.bradso_cap :]

    # tentative holders relabelled lowest priority first; the lowest of the
    # top group follows them
    contested = list(reversed(middle))
    if top:
        contested.append(top[-1])
    pool = [j for j in below if accepts(j, Cost.INCREASED)]

    def overtaking(target: str) -> int:
        return sum(1 for j in pool if policy.boosts(j, target))

    n = 0
    if len(middle) == q.bradso_cap and contested and overtaking(contested[0]) > 0:
        for ell in range(1, q.bradso_cap + 1):
            if accepts(contested[ell - 1], Cost.INCREASED):
                pool.append(contested[ell - 1])
            if ell == q.bradso_cap or overtaking(contested[ell]) <= ell:
                n = ell
                break

    out = {i: (b, Cost.BASE) for i in top}
    displaced = set(contested[:n])
    out.update({i: (b, Cost.BASE) for i in middle if i not in displaced})
    for i in pri.sort(pool)[:n]:
        out[i] = (b, Cost.INCREASED)
    return Allocation.from_assignments(out)
