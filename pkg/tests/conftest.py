"""Shared fixtures and stream builders for the test suite."""

from __future__ import annotations

import random

import pytest

from lobmomentum.events import (Action, AreaConfig, Event, OrderKind, Quotes,
                                Side)

CFG = AreaConfig()          # alpha 50 ticks, dt 0.1 s, 0.01 / 0.001 grids


@pytest.fixture
def cfg() -> AreaConfig:
    return CFG


def ev(ts, oid, action, side, price, size, kind=OrderKind.LIMIT) -> Event:
    """Terse event builder; prices in ticks, sizes in units."""
    return Event(ts, oid, Action(action), Side(side), kind, price, size)


def sub(ts, oid, side, price, size):
    return ev(ts, oid, "open", side, price, size)


def can(ts, oid, side, price, size):
    return ev(ts, oid, "cancel", side, price, size)


def mat(ts, oid, side, price, size):
    return ev(ts, oid, "match", side, price, size)


def random_stream(rng: random.Random, n: int, *, id_pool: int = 60,
                  p_lo: int = 100, p_hi: int = 250) -> list[Event]:
    """Adversarial random event stream for oracle/property testing.

    Covers duplicate ids, dangling/oversize cancels and matches, market
    submissions (priced and unpriced), crossing limit orders, one-sided
    and crossed interludes, same-timestamp runs, and multi-bucket gaps.
    """
    events: list[Event] = []
    ts = rng.randrange(0, 3_600 * 1_000_000)
    ids = [f"o{i}" for i in range(id_pool)]
    for _ in range(n):
        r = rng.random()
        if r < 0.55:
            ts += 0
        elif r < 0.90:
            ts += rng.randrange(1, 150_000)
        else:
            ts += rng.randrange(150_000, 1_200_000)
        oid = rng.choice(ids)
        side = Side.BUY if rng.getrandbits(1) else Side.SELL
        size = rng.randint(1, 5_000)
        price = rng.randint(p_lo, p_hi)
        a = rng.random()
        if a < 0.52:
            if rng.random() < 0.10:
                kind = OrderKind.MARKET
                if rng.getrandbits(1):
                    price = None
            else:
                kind = OrderKind.LIMIT
            events.append(Event(ts, oid, Action.SUBMIT, side, kind, price, size))
        elif a < 0.82:
            kind = OrderKind.MARKET if rng.random() < 0.03 else OrderKind.LIMIT
            events.append(Event(ts, oid, Action.CANCEL, side, kind, price, size))
        else:
            events.append(Event(ts, oid, Action.MATCH, side, OrderKind.LIMIT,
                                price, size))
    return events


def write_csv(path, rows, header=True):
    """Write raw CSV text lines (already formatted) to ``path``."""
    from lobmomentum.ingest import CANONICAL_HEADER
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write(CANONICAL_HEADER + "\n")
        for row in rows:
            f.write(row + "\n")
    return path
