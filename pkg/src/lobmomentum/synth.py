"""Synthetic stream generation and spoof injection.

The background generator emits a fully replayable stream: the best
quotes are held by two explicit anchor orders, a seeded ±1-tick random
walk moves them via cancel/resubmit swaps, and every other order is
placed strictly inside its side's band so the replayed book's quotes
always equal the intended ones.  Each background order is scheduled at
submission to either cancel or match later (``cancel_fraction`` picks
which), so the realized open/cancel mix tracks the target, and order
placement honors ``active_fraction`` as measured by the analyzer
(``edge_margin`` keeps samples clear of area edges so intra-bucket quote
drift cannot flip their classification).

Sizes are log-normal in size units, clipped at ``clip_units`` — the clip
is what makes the background's per-bucket passive momentum boundable,
which injection experiments rely on.

Injected spoof orders get ``synthetic-`` ids and never collide with
background ids.
"""

from __future__ import annotations

import heapq
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .book import BookState
from .errors import ConfigError
from .events import Action, AreaConfig, Event, OrderKind, Quotes, Side
from .momentum import Area, classify_area

log = logging.getLogger(__name__)

SYNTHETIC_PREFIX = "synthetic-"


@dataclass(frozen=True)
class SizeModel:
    """Log-normal order-size model, in integer size units."""

    median_units: int = 2_000
    sigma: float = 1.0
    clip_units: int = 150_000

    def draw(self, rng: random.Random) -> int:
        units = round(rng.lognormvariate(math.log(self.median_units), self.sigma))
        return max(1, min(self.clip_units, units))


@dataclass(frozen=True)
class BackgroundParams:
    seed: int
    duration_us: int
    event_rate: float                  # total events per second, roughly
    base_quotes: Quotes
    alpha: int = 50
    active_fraction: float = 0.97
    cancel_fraction: float = 0.986
    outside_share: float = 0.25        # of the non-active placement mass
    mean_lifetime_us: int = 2_000_000
    quote_move_rate: float = 0.2       # walk steps per second
    size_model: SizeModel = field(default_factory=SizeModel)
    edge_margin: int = 4               # ticks kept clear of band edges
    start_us: int = 0

    def __post_init__(self) -> None:
        if self.duration_us <= 0 or self.event_rate <= 0:
            raise ValueError("duration and event_rate must be positive")
        if not 0.0 < self.active_fraction < 1.0:
            raise ValueError("active_fraction must be in (0, 1)")
        if not 0.0 <= self.cancel_fraction <= 1.0:
            raise ValueError("cancel_fraction must be in [0, 1]")
        if self.quote_move_rate < 0:
            raise ValueError("quote_move_rate cannot be negative")
        if self.alpha < 2 * self.edge_margin + 3:
            raise ValueError("alpha too small for the configured edge_margin")
        if self.base_quotes.bid <= 3 * self.alpha + self.edge_margin + 2:
            raise ValueError("base bid leaves no room for the outside band; "
                             "raise the base quotes or shrink alpha")


def gen_background(params: BackgroundParams) -> Iterator[Event]:
    """Deterministic background stream for one seed.

    Quote control: anchors always hold the touch, background orders are
    placed strictly inside their side's range, and each walk step first
    cancels any background orders tied with the vacating touch level —
    otherwise two same-direction steps would leave them inside the new
    spread.  Orders removed that way are marked dead so their scheduled
    resolutions are dropped instead of emitted dangling.
    """
    rng = random.Random(params.seed)
    alpha, margin = params.alpha, params.edge_margin
    sizes = params.size_model
    bid, ask = params.base_quotes.bid, params.base_quotes.ask
    end_us = params.start_us + params.duration_us
    walk_floor = 3 * alpha + margin + 2
    sub_rate = params.event_rate / 2.0          # submissions later resolve

    def exp_us(rate_per_s: float) -> int:
        return max(1, round(rng.expovariate(rate_per_s) * 1_000_000))

    n_orders = 0

    def fresh_id(tag: str) -> str:
        nonlocal n_orders
        n_orders += 1
        return f"bg-{tag}{n_orders}"

    # resolutions scheduled for already-submitted orders
    pending: list[tuple[int, int, str, int, int, Side, bool]] = []
    pending_seq = 0
    # live background orders by (side, price), to find touch-level ties
    at_level: dict[Side, dict[int, dict[str, int]]] = {Side.BUY: {}, Side.SELL: {}}
    dead: set[str] = set()

    def submit_background(ts: int, side: Side, price: int, size: int) -> Event:
        nonlocal pending_seq
        oid = fresh_id("")
        due = ts + exp_us(1_000_000.0 / params.mean_lifetime_us)
        if due <= end_us:
            is_cancel = rng.random() < params.cancel_fraction
            pending_seq += 1
            heapq.heappush(pending,
                           (due, pending_seq, oid, price, size, side, is_cancel))
        at_level[side].setdefault(price, {})[oid] = size
        return Event(ts, oid, Action.SUBMIT, side, OrderKind.LIMIT, price, size)

    def submit_anchor(ts: int, side: Side, price: int) -> Event:
        return Event(ts, fresh_id("a"), Action.SUBMIT, side, OrderKind.LIMIT,
                     price, sizes.draw(rng))

    def clear_level(ts: int, side: Side, price: int) -> Iterator[Event]:
        for oid, size in sorted(at_level[side].pop(price, {}).items()):
            dead.add(oid)
            yield Event(ts, oid, Action.CANCEL, side, OrderKind.LIMIT,
                        price, size)

    t0 = params.start_us
    bid_anchor = submit_anchor(t0, Side.BUY, bid)
    ask_anchor = submit_anchor(t0, Side.SELL, ask)
    yield bid_anchor
    yield ask_anchor

    def background_price(side: Side) -> int:
        r = rng.random()
        if r < params.active_fraction:
            if side is Side.BUY:
                lo, hi = bid - alpha + margin, bid - 1
            else:
                lo, hi = ask + 1, ask + alpha - margin
        elif r < params.active_fraction + (1 - params.active_fraction) * (1 - params.outside_share):
            if side is Side.BUY:
                lo, hi = bid - 2 * alpha + margin, bid - alpha - 1 - margin
            else:
                lo, hi = ask + alpha + 1 + margin, ask + 2 * alpha - margin
        else:
            if side is Side.BUY:
                lo, hi = bid - 3 * alpha + margin, bid - 2 * alpha - 1 - margin
            else:
                lo, hi = ask + 2 * alpha + 1 + margin, ask + 3 * alpha - margin
        return rng.randint(lo, hi)

    next_sub = t0 + exp_us(sub_rate)
    # rate 0 freezes the quotes for the whole stream
    next_move = (t0 + exp_us(params.quote_move_rate)
                 if params.quote_move_rate > 0 else end_us + 1)

    while True:
        t_res = pending[0][0] if pending else end_us + 1
        t = min(next_sub, next_move, t_res)
        if t > end_us:
            return
        if t_res <= next_sub and t_res <= next_move:
            _, _, oid, price, size, side, is_cancel = heapq.heappop(pending)
            if oid in dead:
                dead.discard(oid)
                continue
            level = at_level[side][price]
            del level[oid]
            if not level:
                del at_level[side][price]
            action = Action.CANCEL if is_cancel else Action.MATCH
            yield Event(t_res, oid, action, side, OrderKind.LIMIT, price, size)
        elif next_sub <= next_move:
            side = Side.BUY if rng.getrandbits(1) else Side.SELL
            yield submit_background(next_sub, side, background_price(side),
                                    sizes.draw(rng))
            next_sub += exp_us(sub_rate)
        else:
            step = 1 if rng.getrandbits(1) else -1
            if bid + step <= walk_floor:
                step = 1
            ts = next_move
            if step > 0:
                yield from clear_level(ts, Side.SELL, ask)
                new_ask = submit_anchor(ts, Side.SELL, ask + 1)
                yield new_ask
                yield Event(ts, ask_anchor.order_id, Action.CANCEL, Side.SELL,
                            OrderKind.LIMIT, ask_anchor.price, ask_anchor.size)
                new_bid = submit_anchor(ts, Side.BUY, bid + 1)
                yield new_bid
                yield Event(ts, bid_anchor.order_id, Action.CANCEL, Side.BUY,
                            OrderKind.LIMIT, bid_anchor.price, bid_anchor.size)
            else:
                yield from clear_level(ts, Side.BUY, bid)
                new_bid = submit_anchor(ts, Side.BUY, bid - 1)
                yield new_bid
                yield Event(ts, bid_anchor.order_id, Action.CANCEL, Side.BUY,
                            OrderKind.LIMIT, bid_anchor.price, bid_anchor.size)
                new_ask = submit_anchor(ts, Side.SELL, ask - 1)
                yield new_ask
                yield Event(ts, ask_anchor.order_id, Action.CANCEL, Side.SELL,
                            OrderKind.LIMIT, ask_anchor.price, ask_anchor.size)
            bid += step
            ask += step
            bid_anchor, ask_anchor = new_bid, new_ask
            next_move += exp_us(params.quote_move_rate)


# ---------------------------------------------------------------------------
# spoof injection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpoofSpec:
    """A to-be-injected spoof: where, how big, and its lifecycle.

    ``price_offset`` places the first level that many ticks beyond the
    active-area edge on the chosen side (into the passive shell for
    offsets in ``(0, alpha]``); an absolute ``price`` overrides it.
    Layered style submits ``levels`` orders stepping ``level_gap`` ticks
    away from the touch, staggered ``level_stagger_us`` apart, all
    canceled together at ``cancel_ts``.
    """

    submit_ts: int
    cancel_ts: int
    size: int
    side: Side = Side.BUY
    style: str = "traditional"
    price_offset: int = 10
    price: int | None = None
    levels: int = 4
    level_gap: int = 8
    level_stagger_us: int = 900_000
    id_prefix: str = "synthetic-spoof"

    def __post_init__(self) -> None:
        if self.style not in ("traditional", "layered"):
            raise ValueError(f"unknown spoof style {self.style!r}")
        if self.size <= 0:
            raise ValueError("spoof size must be positive")
        n = self.levels if self.style == "layered" else 1
        if n < 1 or (self.style == "layered" and n < 2):
            raise ValueError("layered spoofs need at least 2 levels")
        last_submit = self.submit_ts + (n - 1) * self.level_stagger_us
        if self.cancel_ts <= last_submit:
            raise ValueError("cancel_ts must come after the last submission")
        if not self.id_prefix.startswith(SYNTHETIC_PREFIX):
            raise ValueError(f"injected ids must start with {SYNTHETIC_PREFIX!r}")


def plan_spoof(events: Iterable[Event], spec: SpoofSpec,
               cfg: AreaConfig) -> tuple[list[Event], dict]:
    """Work out the spoof's concrete orders against prevailing quotes.

    Replays the stream up to ``submit_ts`` to find the quotes the spoof
    is placed against.  Returns the injected events (time-ordered) and a
    ground-truth label dict; placements that do not land in the passive
    shell produce warnings, not errors.
    """
    book = BookState()
    for e in events:
        if e.ts > spec.submit_ts:
            break
        book.apply_event(e)
    q = book.quotes()
    if q is None:
        raise ConfigError("book has no valid quotes at the spoof submit time")

    n = spec.levels if spec.style == "layered" else 1
    if spec.price is not None:
        first = spec.price
    elif spec.side is Side.BUY:
        first = q.bid - cfg.alpha - spec.price_offset
    else:
        first = q.ask + cfg.alpha + spec.price_offset
    step = -spec.level_gap if spec.side is Side.BUY else spec.level_gap

    injected: list[Event] = []
    levels: list[dict] = []
    warnings: list[str] = []
    for i in range(n):
        price = first + i * step
        if price <= 0:
            raise ConfigError(f"spoof level {i + 1} price {price} is not positive")
        area = classify_area(price, q, cfg.alpha)
        if area is not Area.PASSIVE:
            msg = (f"spoof level {i + 1} at {price} ticks classifies as "
                   f"{area.value}, not passive, against quotes "
                   f"{q.bid}/{q.ask}")
            warnings.append(msg)
            log.warning(msg)
        oid = f"{spec.id_prefix}-{i + 1}"
        sub_ts = spec.submit_ts + i * spec.level_stagger_us
        injected.append(Event(sub_ts, oid, Action.SUBMIT, spec.side,
                              OrderKind.LIMIT, price, spec.size))
        levels.append({"order_id": oid, "price_ticks": price,
                       "submit_ts_us": sub_ts, "cancel_ts_us": spec.cancel_ts})
    for i in range(n):
        injected.append(Event(spec.cancel_ts, levels[i]["order_id"],
                              Action.CANCEL, spec.side, OrderKind.LIMIT,
                              levels[i]["price_ticks"], spec.size))

    labels = {
        "style": spec.style,
        "side": spec.side.value,
        "size_units": spec.size,
        "quotes_at_submit": {"bid_ticks": q.bid, "ask_ticks": q.ask},
        "order_ids": [lv["order_id"] for lv in levels],
        "levels": levels,
        "warnings": warnings,
    }
    return injected, labels


def inject_spoof(events: Sequence[Event], spec: SpoofSpec,
                 cfg: AreaConfig) -> tuple[list[Event], dict]:
    """Merge a spoof into a stream; returns (merged events, labels).

    The merge is stable: at equal timestamps, pre-existing events keep
    their position ahead of injected ones.
    """
    injected, labels = plan_spoof(events, spec, cfg)
    merged = list(events) + injected
    merged.sort(key=lambda e: e.ts)
    return merged, labels


def spoof_spec_from_json(obj: dict, cfg: AreaConfig) -> SpoofSpec:
    """Build a SpoofSpec from a JSON dict using human units.

    Timestamps are timestamp strings, ``size`` and ``price`` are decimals
    in natural units, ``price_offset``/``level_gap`` are decimals in quote
    currency, ``level_stagger`` is seconds.
    """
    from .events import parse_ts, text_to_scaled

    def ticks(key, default=None):
        if key not in obj:
            return default
        return text_to_scaled(str(obj[key]), cfg.tick_size)

    try:
        kwargs = {
            "submit_ts": parse_ts(str(obj["submit_ts"])),
            "cancel_ts": parse_ts(str(obj["cancel_ts"])),
            "size": text_to_scaled(str(obj["size"]), cfg.size_unit),
        }
    except KeyError as exc:
        raise ConfigError(f"spoof spec is missing {exc.args[0]!r}") from exc
    if "side" in obj:
        kwargs["side"] = Side(obj["side"])
    if "style" in obj:
        kwargs["style"] = obj["style"]
    off = ticks("price_offset")
    if off is not None:
        kwargs["price_offset"] = off
    price = ticks("price")
    if price is not None:
        kwargs["price"] = price
    gap = ticks("level_gap")
    if gap is not None:
        kwargs["level_gap"] = gap
    if "levels" in obj:
        kwargs["levels"] = int(obj["levels"])
    if "level_stagger" in obj:
        kwargs["level_stagger_us"] = round(float(obj["level_stagger"]) * 1_000_000)
    if "id_prefix" in obj:
        kwargs["id_prefix"] = str(obj["id_prefix"])
    try:
        return SpoofSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
