"""Operator-oriented reservation baselines.

Both schemes budget resource per entity, then serve each entity's flows with
the same max-min water-filling used at the flow level elsewhere, so the
comparison isolates the reservation policy rather than the flow scheduler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams
from .fairshare import water_fill
from .model import FlowAllocation

_REDISTRIBUTE_EPS = 1e-12


@dataclass(frozen=True)
class ReservationConfig:
    per_bs_fraction: float = 0.05   # per-entity reservation at each element
    net_min_fraction: float = 0.02  # per-entity aggregate floor
    net_max_fraction: float = 0.10  # per-entity aggregate cap

    def __post_init__(self):
        for name in ("per_bs_fraction", "net_min_fraction", "net_max_fraction"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidParams(f"{name} must lie in [0, 1], got {v}")
        if self.net_min_fraction > self.net_max_fraction:
            raise InvalidParams("net_min_fraction cannot exceed net_max_fraction")


@dataclass(frozen=True)
class EntityAllocation:
    """Resource actually delivered to each entity's flows, plus the flow detail."""

    per_entity: np.ndarray       # (E, I, K) resource attributed to flows
    flow_alloc: FlowAllocation   # aligned with the scenario's flow order

    def __post_init__(self):
        arr = np.array(self.per_entity, dtype=float)
        if np.any(arr < 0):
            raise InvalidParams("entity allocations must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "per_entity", arr)


def _flow_arrays(scenario):
    flows = scenario.flows
    ent = np.array([f.entity_id for f in flows], dtype=int)
    el = np.array([f.element_id for f in flows], dtype=int)
    app = np.array([f.app_id for f in flows], dtype=int)
    bw = np.array([f.demand_bw for f in flows], dtype=float)
    p = scenario.ratios.values[el, app] if len(flows) else np.zeros(0)
    return ent, el, app, bw, bw * p, p


def _fill_pools(scenario, budget_of_pool):
    """Water-fill each (entity, element) pool of flows under its resource budget."""
    ent, el, app, bw, res_demand, p = _flow_arrays(scenario)
    num_e = len(scenario.entities)
    num_i = len(scenario.elements)
    num_k = len(scenario.apps)
    alloc_res = np.zeros(len(scenario.flows))

    pools: dict = {}
    for j in range(len(scenario.flows)):
        pools.setdefault((ent[j], el[j]), []).append(j)
    for (e, i), members in sorted(pools.items()):
        budget = budget_of_pool(e, i)
        idx = np.array(members, dtype=int)
        alloc_res[idx] = water_fill(res_demand[idx], budget)

    per_entity = np.zeros((num_e, num_i, num_k))
    np.add.at(per_entity, (ent, el, app), alloc_res)
    flow_alloc = FlowAllocation(
        flow_ids=tuple(f.id for f in scenario.flows),
        bandwidth=np.divide(alloc_res, p, out=np.zeros_like(alloc_res), where=p > 0),
        resource=alloc_res,
        demand_resource=res_demand,
    )
    return EntityAllocation(per_entity=per_entity, flow_alloc=flow_alloc)


def per_bs_rsv_allocate(scenario, cfg: ReservationConfig | None = None) -> EntityAllocation:
    """Fixed per-element reservation: entity e owns fraction rho of every element.

    Budgets are hard and never shared, so an entity without flows at an
    element idles its slice even when other entities overflow there.
    """
    cfg = cfg or ReservationConfig()
    num_e = len(scenario.entities)
    if num_e * cfg.per_bs_fraction > 1.0 + 1e-12:
        raise InvalidParams(
            f"{num_e} entities at per_bs_fraction={cfg.per_bs_fraction} oversubscribe elements"
        )
    caps = np.array([el.capacity for el in scenario.elements])
    return _fill_pools(scenario, lambda e, i: cfg.per_bs_fraction * caps[i])


def net_rsv_allocate(scenario, cfg: ReservationConfig | None = None) -> EntityAllocation:
    """Network-wide reservation with demand-adaptive budgets.

    Each entity's aggregate budget is its total resource demand clamped into
    [net_min, net_max] fractions of the aggregate capacity (rescaled if the
    budgets oversubscribe it).  The budget is spread over elements in
    proportion to the entity's per-element demand, truncated by remaining
    element capacity with the excess re-spread over the entity's other
    elements.  Reserved amounts are held even if the entity's flows cannot
    use them (reservation semantics).
    """
    cfg = cfg or ReservationConfig()
    ent, el, app, bw, res_demand, p = _flow_arrays(scenario)
    num_e = len(scenario.entities)
    num_i = len(scenario.elements)
    caps = np.array([e.capacity for e in scenario.elements], dtype=float)
    total_cap = float(caps.sum())

    demand_ei = np.zeros((num_e, num_i))
    if len(scenario.flows):
        np.add.at(demand_ei, (ent, el), res_demand)
    demand_e = demand_ei.sum(axis=1)

    budgets = np.clip(demand_e, cfg.net_min_fraction * total_cap,
                      cfg.net_max_fraction * total_cap)
    if budgets.sum() > total_cap:
        budgets *= total_cap / budgets.sum()

    remaining = caps.copy()
    reserved = np.zeros((num_e, num_i))
    for e in range(num_e):
        if demand_e[e] <= 0:
            continue  # nothing to spread the budget over
        pool = budgets[e]
        alloc = np.zeros(num_i)
        active = demand_ei[e] > 0
        while pool > _REDISTRIBUTE_EPS * budgets[e] and active.any():
            weights = demand_ei[e] * active
            share = pool * weights / weights.sum()
            give = np.minimum(share, remaining - alloc)
            give = np.maximum(give, 0.0)
            given = float(give.sum())
            alloc += give
            pool -= given
            active &= (remaining - alloc) > _REDISTRIBUTE_EPS
            if given <= _REDISTRIBUTE_EPS * max(budgets[e], 1.0):
                break
        reserved[e] = alloc
        remaining -= alloc
    return _fill_pools(scenario, lambda e, i: reserved[e, i])
