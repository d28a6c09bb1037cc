"""Transport/stocking recommendations from a forecast and its explanation.

Candidate options (transport mode x ship day x coarse quantity grid) are
scored by simulating inventory day-by-day along the forecast's lower, point,
and upper demand paths; the expected cost is the (1,2,1)/4 blend of the three
path costs. Options are ranked by ascending cost, and the top option's
directive text cites the explanation's leading feature when one is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DataValidationError, UsageError
from .explain import Explanation
from .forecasting import Forecast

QUANTITY_GRID_FACTORS = (0.0, 0.5, 1.0, 1.5)
PATH_WEIGHTS = {"lower": 1.0, "point": 2.0, "upper": 1.0}


@dataclass(frozen=True)
class TransportOption:
    mode: str
    lead_time: int
    fixed_cost: float

    def __post_init__(self):
        if not self.mode:
            raise DataValidationError("transport mode name must be nonempty")
        if self.lead_time < 0:
            raise DataValidationError("lead time must be >= 0 days")
        if self.fixed_cost < 0 or not math.isfinite(self.fixed_cost):
            raise DataValidationError("fixed cost must be finite and nonnegative")


@dataclass(frozen=True)
class DecisionContext:
    series_id: str
    forecast_id: str
    on_hand: float
    unit_holding_cost: float
    unit_stockout_penalty: float
    transport_options: tuple[TransportOption, ...]
    risk_flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.on_hand < 0:
            raise DataValidationError("on_hand must be nonnegative")
        if self.unit_holding_cost < 0 or self.unit_stockout_penalty < 0:
            raise DataValidationError("costs must be nonnegative")
        if not self.transport_options:
            raise DataValidationError("context needs at least one transport option")


@dataclass(frozen=True)
class CandidateOption:
    mode: str
    ship_day: int
    quantity: float


@dataclass(frozen=True)
class DecisionOption:
    option_id: str
    mode: str
    ship_day: int
    quantity: float
    expected_cost: float
    rank: int
    directive_text: str
    risk_flags: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        return {
            "option_id": self.option_id,
            "mode": self.mode,
            "ship_day": self.ship_day,
            "quantity": self.quantity,
            "expected_cost": round(self.expected_cost, 2),
            "rank": self.rank,
            "directive_text": self.directive_text,
            "risk_flags": list(self.risk_flags),
        }


def enumerate_options(ctx: DecisionContext, forecast: Forecast) -> list[CandidateOption]:
    """Modes x ship days x quantity grid {0, D/2, D, 1.5D} with D the summed
    point forecast. Ship days leave room for the lead time inside the horizon."""
    horizon = forecast.horizon
    max_lead = max(o.lead_time for o in ctx.transport_options)
    if horizon < max_lead + 1:
        raise UsageError(
            f"horizon {horizon} is too short for lead time {max_lead}; need at least {max_lead + 1}"
        )
    demand_total = float(sum(forecast.point))
    grid = [f * demand_total for f in QUANTITY_GRID_FACTORS]
    candidates = []
    for option in ctx.transport_options:
        for ship_day in range(0, horizon - option.lead_time):
            for q in grid:
                candidates.append(CandidateOption(option.mode, ship_day, q))
    return candidates


def _path_cost(
    demand: Sequence[float],
    on_hand: float,
    quantity: float,
    arrival_day: int,
    holding: float,
    penalty: float,
) -> float:
    """Day-by-day inventory walk: demand is consumed first, a shipment arriving
    on day t joins end-of-day stock, holding is charged on end-of-day stock."""
    inventory = float(on_hand)
    held = 0.0
    unmet = 0.0
    for t, d in enumerate(demand):
        unmet += max(0.0, d - inventory)
        inventory = max(0.0, inventory - d)
        if t == arrival_day:
            inventory += quantity
        held += inventory
    return holding * held + penalty * unmet


def score_option(ctx: DecisionContext, option: CandidateOption, forecast: Forecast) -> float:
    """Blend of the three demand-path costs; a zero-quantity option ships
    nothing and is charged no fixed cost."""
    transport = next((t for t in ctx.transport_options if t.mode == option.mode), None)
    if transport is None:
        raise UsageError(f"unknown transport mode {option.mode!r}")
    arrival = option.ship_day + transport.lead_time
    if arrival >= forecast.horizon:
        raise UsageError(
            f"arrival day {arrival} falls beyond the forecast horizon {forecast.horizon}"
        )
    if option.quantity < 0:
        raise DataValidationError("quantity must be nonnegative")
    paths = {"lower": forecast.lower, "point": forecast.point, "upper": forecast.upper}
    total = 0.0
    for name, demand in paths.items():
        cost = _path_cost(
            demand, ctx.on_hand, option.quantity, arrival,
            ctx.unit_holding_cost, ctx.unit_stockout_penalty,
        )
        total += PATH_WEIGHTS[name] * cost
    expected = total / sum(PATH_WEIGHTS.values())
    if option.quantity > 0:
        expected += transport.fixed_cost
    return expected


def recommend(
    ctx: DecisionContext,
    forecast: Forecast,
    explanation: Explanation | None = None,
) -> list[DecisionOption]:
    """Rank all candidates by ascending expected cost.

    Ties break toward smaller quantity, earlier ship day, then mode name.
    Ranks run 1..N without gaps; the context's risk flags are attached to every
    option verbatim.
    """
    scored = [
        (cand, score_option(ctx, cand, forecast))
        for cand in enumerate_options(ctx, forecast)
    ]
    scored.sort(key=lambda cs: (cs[1], cs[0].quantity, cs[0].ship_day, cs[0].mode))
    options = []
    for rank, (cand, cost) in enumerate(scored, start=1):
        if rank == 1:
            directive = _top_directive(cand, cost, explanation)
        else:
            directive = f"Option expected cost {cost:.2f}"
        options.append(
            DecisionOption(
                option_id=f"{ctx.forecast_id}:{cand.mode}:d{cand.ship_day}:q{cand.quantity:g}",
                mode=cand.mode,
                ship_day=cand.ship_day,
                quantity=cand.quantity,
                expected_cost=cost,
                rank=rank,
                directive_text=directive,
                risk_flags=ctx.risk_flags,
            )
        )
    return options


def _top_directive(cand: CandidateOption, cost: float, explanation: Explanation | None) -> str:
    if explanation is not None:
        redacted = set(explanation.redacted_features)
        for name, weight in explanation.attributions:
            if name in redacted:
                continue
            sign = "+" if weight >= 0 else "-"
            return (
                f"Demand outlook driven by {name} ({sign}); "
                f"option minimizes expected cost {cost:.2f}"
            )
    return f"Option minimizes expected cost {cost:.2f}"
