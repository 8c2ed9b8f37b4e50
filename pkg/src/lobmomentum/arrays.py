"""Struct-of-arrays event storage for the high-throughput path.

The object tier (:mod:`lobmomentum.events`) is the contract surface; this
module carries the same information as flat int64/int8 numpy arrays so the
kernels can chew through millions of events.  Integer codes:

* action: 0 submit, 1 cancel, 2 match
* side:   0 buy, 1 sell
* kind:   0 limit, 1 market
* price:  ticks, ``-1`` for "no price" (market submissions)

Order ids are factorized once into dense integer indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .events import Action, Event, OrderKind, Side

ACTION_CODE = {Action.SUBMIT: 0, Action.CANCEL: 1, Action.MATCH: 2}
SIDE_CODE = {Side.BUY: 0, Side.SELL: 1}
KIND_CODE = {OrderKind.LIMIT: 0, OrderKind.MARKET: 1}
ACTION_FROM_CODE = {v: k for k, v in ACTION_CODE.items()}
SIDE_FROM_CODE = {v: k for k, v in SIDE_CODE.items()}
KIND_FROM_CODE = {v: k for k, v in KIND_CODE.items()}
PRICE_NONE = -1


@dataclass
class EventBatch:
    ts: np.ndarray
    action: np.ndarray
    side: np.ndarray
    kind: np.ndarray
    price: np.ndarray
    size: np.ndarray
    oid_index: np.ndarray
    order_ids: Sequence[str]      # unique ids, indexed by oid_index
    n_orders: int

    def __len__(self) -> int:
        return len(self.ts)

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> "EventBatch":
        ts, action, side, kind, price, size, oid = [], [], [], [], [], [], []
        id_codes: dict[str, int] = {}
        for e in events:
            ts.append(e.ts)
            action.append(ACTION_CODE[e.action])
            side.append(SIDE_CODE[e.side])
            kind.append(KIND_CODE[e.kind])
            price.append(PRICE_NONE if e.price is None else e.price)
            size.append(e.size)
            code = id_codes.setdefault(e.order_id, len(id_codes))
            oid.append(code)
        return cls(
            ts=np.asarray(ts, dtype=np.int64),
            action=np.asarray(action, dtype=np.int8),
            side=np.asarray(side, dtype=np.int8),
            kind=np.asarray(kind, dtype=np.int8),
            price=np.asarray(price, dtype=np.int64),
            size=np.asarray(size, dtype=np.int64),
            oid_index=np.asarray(oid, dtype=np.int64),
            order_ids=list(id_codes),
            n_orders=len(id_codes),
        )

    def event_at(self, i: int) -> Event:
        price = int(self.price[i])
        return Event(
            ts=int(self.ts[i]),
            order_id=str(self.order_ids[int(self.oid_index[i])]),
            action=ACTION_FROM_CODE[int(self.action[i])],
            side=SIDE_FROM_CODE[int(self.side[i])],
            kind=KIND_FROM_CODE[int(self.kind[i])],
            price=None if price == PRICE_NONE else price,
            size=int(self.size[i]),
        )

    def events_at(self, indices: Iterable[int]) -> list[Event]:
        return [self.event_at(int(i)) for i in indices]
