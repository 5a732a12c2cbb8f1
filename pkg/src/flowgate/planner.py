"""Frame-budget allocation across events and final plan assembly.

Every event gets its anchor when the budget permits; the rest of the budget
goes to priority events proportionally to event length (largest-remainder
apportionment). Pruned frames cost fewer tokens, so the frame budget is
expanded until the token budget is filled; token totals are always recomputed
from actual mask popcounts.
"""

import hashlib
import json
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .des import EventSegment
from .errors import (AnchorsExceedBudget, CountExceedsLength, CountMismatch,
                     MissingMask, TokenBudgetExceeded)
from .mtp import TokenMask


@dataclass(frozen=True)
class BudgetConfig:
    base_frames: int = 64
    tokens_per_frame: int = 169
    keep_percent: float = 50.0
    p_target: float = 0.05

    def __post_init__(self):
        if self.base_frames < 1:
            raise ValueError("base_frames must be >= 1")
        if self.tokens_per_frame < 1:
            raise ValueError("tokens_per_frame must be >= 1")
        if not 0.0 < self.keep_percent <= 100.0:
            raise ValueError("keep_percent must be in (0, 100]")

    @property
    def token_budget(self) -> int:
        return self.base_frames * self.tokens_per_frame

    @property
    def pruned_frame_cost(self) -> int:
        return math.ceil(self.keep_percent * self.tokens_per_frame / 100.0)


@dataclass(frozen=True)
class PlanFrame:
    index: int
    role: str                      # "anchor" | "pruned"
    mask: TokenMask | None         # None = all tokens kept


@dataclass(frozen=True)
class PlanEvent:
    start: int
    end: int
    anchor: int
    frames: tuple[PlanFrame, ...]


@dataclass(frozen=True)
class SelectionPlan:
    video: str
    config: dict[str, Any]
    events: tuple[PlanEvent, ...]
    total_frames: int
    total_tokens: int
    provenance: dict[str, Any]


def priority_events(selected: set[int], event_count: int) -> set[int]:
    """Selected events plus their immediate temporal neighbors."""
    out: set[int] = set()
    for i in selected:
        for j in (i - 1, i, i + 1):
            if 0 <= j < event_count:
                out.add(j)
    return out


def _largest_remainder(weights: Sequence[float], caps: Sequence[int],
                       total: int) -> list[int]:
    """Apportion `total` units proportionally to weights, under per-item caps.

    Tie-break on equal remainders: larger weight, then lower index. Capped
    surplus is re-apportioned among the non-saturated items; leftover that no
    capacity can absorb is dropped.
    """
    n = len(weights)
    alloc = [0] * n
    remaining = total
    active = [i for i in range(n) if caps[i] > 0]
    while remaining > 0 and active:
        wsum = sum(weights[i] for i in active)
        if wsum <= 0:
            break
        quotas = {i: remaining * weights[i] / wsum for i in active}
        floors = {i: min(int(quotas[i]), caps[i] - alloc[i]) for i in active}
        handed = sum(floors.values())
        for i in active:
            alloc[i] += floors[i]
        leftover = remaining - handed
        by_remainder = sorted(
            (i for i in active if alloc[i] < caps[i]),
            key=lambda i: (-(quotas[i] - int(quotas[i])), -weights[i], i))
        for i in by_remainder:
            if leftover == 0:
                break
            alloc[i] += 1
            leftover -= 1
        progressed = remaining - leftover
        remaining = leftover
        active = [i for i in active if alloc[i] < caps[i]]
        if progressed == 0:
            break  # no capacity could absorb anything
    return alloc


def allocate_frames(events: Sequence[EventSegment], priority: set[int],
                    budget: int) -> list[int]:
    """Per-event frame counts under a total frame budget.

    With budget >= event count every event gets its anchor and the remainder
    is split among priority events proportionally to length (then among the
    others once priority events saturate). With a sub-event budget, events
    are ranked priority-first, longest-first, and the top `budget` get one
    frame each.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = len(events)
    lengths = [e.length for e in events]
    if budget < n:
        counts = [0] * n
        rank = sorted(range(n), key=lambda i: (0 if i in priority else 1,
                                               -lengths[i], i))
        for i in rank[:budget]:
            counts[i] = 1
        return counts

    counts = [1] * n
    remaining = budget - n
    if remaining == 0:
        return counts
    caps = [lengths[i] - 1 for i in range(n)]
    pri = sorted(priority)
    pri_alloc = _largest_remainder([lengths[i] for i in pri],
                                   [caps[i] for i in pri], remaining)
    for i, extra in zip(pri, pri_alloc):
        counts[i] += extra
    remaining -= sum(pri_alloc)
    if remaining > 0:
        rest = [i for i in range(n) if i not in priority]
        rest_alloc = _largest_remainder([lengths[i] for i in rest],
                                        [caps[i] for i in rest], remaining)
        for i, extra in zip(rest, rest_alloc):
            counts[i] += extra
    return counts


def sample_within_event(event: EventSegment, count: int) -> list[int]:
    """Frame indices to sample from one event; the anchor is always included.

    The other count-1 frames are taken at evenly spaced positions of the
    event with the anchor removed, rounding positions toward the start.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > event.length:
        raise CountExceedsLength(f"count {count} > event length {event.length}")
    if count == 1:
        return [event.anchor]
    pool = [i for i in range(event.start, event.end + 1) if i != event.anchor]
    m = count - 1
    picks = [pool[(j * len(pool)) // m] for j in range(m)]
    return sorted(picks + [event.anchor])


def expand_frame_budget(base_frames: int, tokens_per_frame: int,
                        keep_percent: float, anchor_count: int) -> int:
    """Largest frame count that fits the base token budget.

    Anchors cost tokens_per_frame each; every other frame costs
    ceil(keep_percent/100 * tokens_per_frame).
    """
    if anchor_count < 1:
        raise ValueError("anchor_count must be >= 1")
    if anchor_count > base_frames:
        raise AnchorsExceedBudget(
            f"{anchor_count} anchors exceed the {base_frames}-frame budget")
    pruned_cost = math.ceil(keep_percent * tokens_per_frame / 100.0)
    spare = (base_frames - anchor_count) * tokens_per_frame
    return anchor_count + spare // pruned_cost


def plan_layout(events: Sequence[EventSegment], selected: set[int],
                config: BudgetConfig, frame_budget: int | None = None):
    """Resolve (priority set, frame budget, per-event counts, samples)."""
    n = len(events)
    priority = priority_events(selected, n)
    if frame_budget is None:
        if n > config.base_frames:
            frame_budget = config.base_frames  # sub-budget regime, no expansion
        else:
            frame_budget = expand_frame_budget(
                config.base_frames, config.tokens_per_frame,
                config.keep_percent, n)
    counts = allocate_frames(events, priority, frame_budget)
    samples = {i: sample_within_event(events[i], c) if c > 0 else []
               for i, c in enumerate(counts)}
    return priority, frame_budget, counts, samples


def assemble_plan(events: Sequence[EventSegment], selected: set[int],
                  masks: Mapping[int, TokenMask], config: BudgetConfig,
                  video: str = "", provenance: dict[str, Any] | None = None,
                  frame_budget: int | None = None) -> SelectionPlan:
    """Build the final plan and enforce its invariants.

    masks maps frame index -> TokenMask for every sampled non-anchor frame
    (ignored when keep_percent is 100: nothing is pruned then). Token totals
    come from actual popcounts; exceeding the base token budget raises.
    """
    t = config.tokens_per_frame
    _, _, counts, samples = plan_layout(events, selected, config, frame_budget)
    plan_events = []
    total_frames = 0
    total_tokens = 0
    no_pruning = config.keep_percent >= 100.0
    for i, event in enumerate(events):
        if counts[i] == 0:
            continue
        frames = []
        for idx in samples[i]:
            if idx == event.anchor:
                frames.append(PlanFrame(index=idx, role="anchor", mask=None))
                total_tokens += t
            elif no_pruning:
                frames.append(PlanFrame(index=idx, role="pruned", mask=None))
                total_tokens += t
            else:
                if idx not in masks:
                    raise MissingMask(f"no token mask for sampled frame {idx}")
                mask = masks[idx]
                if mask.grid_w * mask.grid_h != t:
                    raise CountMismatch(
                        f"mask grid {mask.grid_w}x{mask.grid_h} does not match "
                        f"tokens_per_frame={t}")
                frames.append(PlanFrame(index=idx, role="pruned", mask=mask))
                total_tokens += mask.popcount
            total_frames += 1
        plan_events.append(PlanEvent(start=event.start, end=event.end,
                                     anchor=event.anchor, frames=tuple(frames)))
    if total_tokens > config.token_budget:
        raise TokenBudgetExceeded(
            f"plan needs {total_tokens} tokens, budget is {config.token_budget}")
    return SelectionPlan(video=video, config=config_dict(config),
                         events=tuple(plan_events), total_frames=total_frames,
                         total_tokens=total_tokens,
                         provenance=dict(provenance or {}))


def build_plan(events: Sequence[EventSegment], selected: set[int],
               mask_provider: Callable[[int], TokenMask], config: BudgetConfig,
               video: str = "", provenance: dict[str, Any] | None = None) -> SelectionPlan:
    """Assemble a plan, shrinking the frame budget until token totals fit.

    Fail-open masks cost more than the nominal pruned-frame price, so the
    expanded frame budget can overshoot; the budget is walked down (at least
    one frame per step) until the recomputed total fits. The floor of
    min(event_count, base_frames) frames always fits: those are anchors only.
    """
    t = config.tokens_per_frame
    n = len(events)
    floor = min(n, config.base_frames)
    _, budget, _, samples = plan_layout(events, selected, config)
    cache: dict[int, TokenMask] = {}
    no_pruning = config.keep_percent >= 100.0
    while True:
        total = 0
        for i, event in enumerate(events):
            for idx in samples[i]:
                if idx == event.anchor or no_pruning:
                    total += t
                else:
                    if idx not in cache:
                        cache[idx] = mask_provider(idx)
                    total += cache[idx].popcount
        if total <= config.token_budget or budget <= floor:
            return assemble_plan(events, selected, cache, config, video=video,
                                 provenance=provenance, frame_budget=budget)
        overshoot = total - config.token_budget
        budget = max(floor, budget - max(1, math.ceil(overshoot / t)))
        _, budget, _, samples = plan_layout(events, selected, config,
                                            frame_budget=budget)


def config_dict(config: BudgetConfig) -> dict[str, Any]:
    return {"base_frames": config.base_frames,
            "tokens_per_frame": config.tokens_per_frame,
            "keep_percent": config.keep_percent,
            "p_target": config.p_target}


def config_hash(payload: Mapping[str, Any]) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def plan_to_json(plan: SelectionPlan) -> str:
    """Serialize to the stable wire schema (byte-identical for equal plans)."""
    doc = {
        "video": plan.video,
        "config": plan.config,
        "events": [
            {
                "start": e.start,
                "end": e.end,
                "anchor": e.anchor,
                "frames": [
                    {"index": f.index, "role": f.role,
                     "mask_b64": None if f.mask is None else f.mask.to_base64()}
                    for f in e.frames
                ],
            }
            for e in plan.events
        ],
        "totals": {"frames": plan.total_frames, "tokens": plan.total_tokens},
        "provenance": plan.provenance,
    }
    return json.dumps(doc, indent=2) + "\n"


def plan_from_json(text: str) -> dict[str, Any]:
    return json.loads(text)
