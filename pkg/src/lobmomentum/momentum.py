"""Event momentum: who is pushing the price, how hard, from where.

Each submit/cancel/match is treated as a particle with momentum
``size × velocity``.  Velocity measures the displacement of the event's
effective price from its side's area edge, per sampling interval:

* buy submit:   ``(p* - (bid_ref - alpha_eff)) / dt``
* buy cancel:   ``((bid_ref - alpha_eff) - p*) / dt``
* sell submit:  ``(p* - (ask_ref + alpha_eff)) / dt``
* sell cancel:  ``((ask_ref + alpha_eff) - p*) / dt``

where ``alpha_eff`` is ``alpha`` in the active area and ``2*alpha`` in the
passive shell, and all reference quotes are the bucket's frozen pair.
Buys therefore push up (positive), sells push down, and a submit/cancel
round trip under unchanged references sums to exactly zero.

A match is the aggressor's submission executing: it contributes once, on
the aggressor side, at the clamped effective price (the opposite best
quote), and counts toward the market split.  ``match_both_sides=True``
additionally annihilates the resting particle (cancel-style, limit split)
as a sensitivity variant.

Momentum values are kept as exact integers in size-units x ticks; the
common ``1/dt`` factor and the tick/size scales are applied only when
formatting output (:func:`momentum_rate`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

from .book import Bucket
from .events import (US_PER_SECOND, Action, AreaConfig, Event, OrderKind,
                     Quotes, Side, flip)


class Area(enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"
    OUTSIDE = "outside"


class Split(enum.Enum):
    LIMIT = "limit"
    MARKET = "market"


def classify_area(price: int, q: Quotes, alpha: int) -> Area:
    """Active band is ``[bid-alpha, ask+alpha]`` (closed); the passive
    shell extends one further ``alpha`` on each side, half-open so the
    three regions partition the price axis."""
    if q.bid - alpha <= price <= q.ask + alpha:
        return Area.ACTIVE
    if q.bid - 2 * alpha <= price < q.bid - alpha:
        return Area.PASSIVE
    if q.ask + alpha < price <= q.ask + 2 * alpha:
        return Area.PASSIVE
    return Area.OUTSIDE


def active_band(q: Quotes, alpha: int) -> tuple[int, int]:
    """Inclusive tick endpoints of the active area."""
    return q.bid - alpha, q.ask + alpha


def effective_price(e: Event, q_ref: Quotes) -> int:
    """The price a particle actually acts at, after marketability clamping.

    Buy events above the frozen ask act at the ask; sell events below the
    frozen bid act at the bid; market-kind submissions always act at the
    opposite quote.  For a match the acting particle is the *aggressor*
    (flip of the row's resting side), so the clamp always binds.
    """
    if e.action is Action.MATCH:
        return q_ref.ask if flip(e.side) is Side.BUY else q_ref.bid
    if e.price is None or e.kind is OrderKind.MARKET:
        return q_ref.ask if e.side is Side.BUY else q_ref.bid
    if e.side is Side.BUY and e.price > q_ref.ask:
        return q_ref.ask
    if e.side is Side.SELL and e.price < q_ref.bid:
        return q_ref.bid
    return e.price


def velocity_bound(side: Side, q_ref: Quotes, alpha_eff: int) -> int:
    """The area edge displacement is measured from, for the given side."""
    return q_ref.bid - alpha_eff if side is Side.BUY else q_ref.ask + alpha_eff


def _alpha_eff(area: Area, alpha: int) -> int:
    if area is Area.OUTSIDE:
        raise ValueError("no momentum is defined outside the passive shell")
    return alpha if area is Area.ACTIVE else 2 * alpha


def event_velocity(e: Event, q_ref: Quotes, bound: int, dt: int) -> Fraction:
    """Signed velocity in ticks per second (exact)."""
    p_star = effective_price(e, q_ref)
    num = (bound - p_star) if e.action is Action.CANCEL else (p_star - bound)
    return Fraction(num * US_PER_SECOND, dt)


def event_momentum(e: Event, q_ref: Quotes, cfg: AreaConfig, area: Area) -> Fraction:
    """``size × velocity`` in size-units·ticks per second (exact)."""
    side = flip(e.side) if e.action is Action.MATCH else e.side
    bound = velocity_bound(side, q_ref, _alpha_eff(area, cfg.alpha))
    return e.size * event_velocity(e, q_ref, bound, cfg.dt)


def event_contributions(e: Event, q_ref: Quotes, alpha: int, *,
                        match_both_sides: bool = False) -> list[tuple[Area, Split, int]]:
    """All momentum contributions of one event, as integer numerators.

    Each element is ``(area, split, size * displacement_ticks)``; dividing
    by ``dt`` recovers the momentum rate.  Events acting outside the
    passive shell contribute nothing.  Book membership is irrelevant here:
    a cancel contributes even if the replay never saw its submission (the
    book layer counts that separately).
    """
    out: list[tuple[Area, Split, int]] = []
    if e.action is Action.MATCH:
        agg = flip(e.side)
        p_star = q_ref.ask if agg is Side.BUY else q_ref.bid
        area = classify_area(p_star, q_ref, alpha)
        if area is not Area.OUTSIDE:
            bound = velocity_bound(agg, q_ref, _alpha_eff(area, alpha))
            out.append((area, Split.MARKET, e.size * (p_star - bound)))
        if match_both_sides and e.price is not None:
            # the resting particle leaves the book at the execution price
            p_rest = e.price
            if e.side is Side.BUY and p_rest > q_ref.ask:
                p_rest = q_ref.ask
            elif e.side is Side.SELL and p_rest < q_ref.bid:
                p_rest = q_ref.bid
            area_r = classify_area(p_rest, q_ref, alpha)
            if area_r is not Area.OUTSIDE:
                bound_r = velocity_bound(e.side, q_ref, _alpha_eff(area_r, alpha))
                out.append((area_r, Split.LIMIT, e.size * (bound_r - p_rest)))
        return out

    p_star = effective_price(e, q_ref)
    area = classify_area(p_star, q_ref, alpha)
    if area is Area.OUTSIDE:
        return out
    bound = velocity_bound(e.side, q_ref, _alpha_eff(area, alpha))
    num = (bound - p_star) if e.action is Action.CANCEL else (p_star - bound)
    marketable = e.kind is OrderKind.MARKET or (
        e.action is Action.SUBMIT and p_star != e.price)
    out.append((area, Split.MARKET if marketable else Split.LIMIT, e.size * num))
    return out


@dataclass(frozen=True)
class MomentumSample:
    """Net momentum of one bucket in one area.

    ``m_*`` are integer numerators (size-units x ticks); divide by ``dt``
    seconds and scale by tick/size units for quote-currency per second.
    ``m_total == m_limit + m_market`` exactly, always.
    """

    bucket_end: int
    area: Area
    m_limit: int
    m_market: int
    m_total: int


def bucket_net_momentum(bucket: Bucket, cfg: AreaConfig, area: Area, *,
                        match_both_sides: bool = False) -> MomentumSample:
    if bucket.ref_quotes is None:
        raise ValueError(f"bucket ending {bucket.end_ts} has no reference quotes")
    m_limit = m_market = 0
    for e in bucket.events:
        for a, split, m in event_contributions(
                e, bucket.ref_quotes, cfg.alpha, match_both_sides=match_both_sides):
            if a is area:
                if split is Split.LIMIT:
                    m_limit += m
                else:
                    m_market += m
    return MomentumSample(bucket.end_ts, area, m_limit, m_market, m_limit + m_market)


def momentum_series(buckets, cfg: AreaConfig, area: Area, *,
                    match_both_sides: bool = False) -> list[MomentumSample]:
    """Per-bucket net momentum, skipping unclassifiable buckets."""
    return [bucket_net_momentum(b, cfg, area, match_both_sides=match_both_sides)
            for b in buckets if b.ref_quotes is not None]


def cumulative_series(samples: list[MomentumSample]) -> list[MomentumSample]:
    """Running totals of a per-bucket series (same type, prefix-summed)."""
    out: list[MomentumSample] = []
    cl = cm = 0
    for s in samples:
        cl += s.m_limit
        cm += s.m_market
        out.append(MomentumSample(s.bucket_end, s.area, cl, cm, cl + cm))
    return out


def momentum_rate(m_int: int, cfg: AreaConfig) -> Decimal:
    """Convert an integer momentum numerator to quote-currency x size per
    second, as an exact Decimal (the only place ``1/dt`` is applied)."""
    return (Decimal(m_int) * cfg.tick_size * cfg.size_unit * US_PER_SECOND
            / Decimal(cfg.dt))
