"""Book replay and sampling-bucket assembly.

The book is replayed, never re-derived: matches and cancels in the input
are applied as recorded.  Replay is lenient by default — events that do
not line up with the current state (a cancel for an unknown id, a match
bigger than the resting remainder) are counted and skipped rather than
fatal, because recorded feeds routinely start mid-session.  ``strict=True``
turns each of those counters into a :class:`~lobmomentum.errors.ContractError`.

Buckets are half-open wall-clock intervals ``(T - dt, T]`` aligned to the
clock grid (an event at exactly ``T`` belongs to the bucket ending at
``T``).  Each bucket carries the reference quotes frozen at the end of the
previous bucket; empty buckets carry them forward unchanged.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import ContractError
from .events import Action, Event, OrderKind, Quotes, Side


@dataclass(slots=True)
class _Resting:
    side: Side
    price: int
    remaining: int


class BookState:
    """Mutable Level-3 book: resting orders plus per-level open-order counts."""

    __slots__ = ("orders", "bid_depth", "ask_depth", "counters", "n_applied",
                 "_bid_heap", "_ask_heap")

    def __init__(self) -> None:
        self.orders: dict[str, _Resting] = {}
        self.bid_depth: dict[int, int] = {}
        self.ask_depth: dict[int, int] = {}
        self.counters: dict[str, int] = {}
        self.n_applied = 0
        self._bid_heap: list[int] = []   # negated prices, lazy deletion
        self._ask_heap: list[int] = []

    # -- queries ------------------------------------------------------------

    def depth_counts(self, side: Side) -> dict[int, int]:
        return self.bid_depth if side is Side.BUY else self.ask_depth

    def best_bid(self) -> int | None:
        heap = self._bid_heap
        while heap and -heap[0] not in self.bid_depth:
            heapq.heappop(heap)
        return -heap[0] if heap else None

    def best_ask(self) -> int | None:
        heap = self._ask_heap
        while heap and heap[0] not in self.ask_depth:
            heapq.heappop(heap)
        return heap[0] if heap else None

    def quotes(self) -> Quotes | None:
        """Current best pair, or None while the book is one-sided or crossed."""
        bid, ask = self.best_bid(), self.best_ask()
        if bid is None or ask is None or bid >= ask:
            return None
        return Quotes(bid, ask)

    # -- mutation -----------------------------------------------------------

    def _flag(self, name: str, strict: bool, detail: str) -> None:
        if strict:
            raise ContractError(f"{name}: {detail}")
        self.counters[name] = self.counters.get(name, 0) + 1

    def _insert(self, order_id: str, side: Side, price: int, size: int) -> None:
        self.orders[order_id] = _Resting(side, price, size)
        depth = self.depth_counts(side)
        depth[price] = depth.get(price, 0) + 1
        if side is Side.BUY:
            heapq.heappush(self._bid_heap, -price)
        else:
            heapq.heappush(self._ask_heap, price)

    def _remove(self, order_id: str, rest: _Resting) -> None:
        del self.orders[order_id]
        depth = self.depth_counts(rest.side)
        left = depth[rest.price] - 1
        if left:
            depth[rest.price] = left
        else:
            del depth[rest.price]

    def apply_event(self, e: Event, *, strict: bool = False) -> None:
        self.n_applied += 1
        if e.action is Action.SUBMIT:
            if e.kind is OrderKind.MARKET:
                return  # never rests; executions arrive as MATCH rows
            if e.order_id in self.orders:
                self._flag("duplicate_submit", strict, e.order_id)
                return
            assert e.price is not None
            self._insert(e.order_id, e.side, e.price, e.size)
            return

        rest = self.orders.get(e.order_id)
        if e.action is Action.CANCEL:
            if rest is None:
                self._flag("dangling_cancel", strict, e.order_id)
                return
            if e.side is not rest.side or e.price != rest.price:
                self._flag("cancel_mismatch", strict,
                           f"{e.order_id} cancels {e.side.value}@{e.price}, "
                           f"resting {rest.side.value}@{rest.price}")
            if e.size >= rest.remaining:
                if e.size > rest.remaining:
                    self._flag("oversize_cancel", strict, e.order_id)
                self._remove(e.order_id, rest)
            else:
                rest.remaining -= e.size
            return

        # MATCH: reduce the resting maker order
        if rest is None:
            self._flag("dangling_match", strict, e.order_id)
            return
        if e.size >= rest.remaining:
            if e.size > rest.remaining:
                self._flag("oversize_match", strict, e.order_id)
            self._remove(e.order_id, rest)
        else:
            rest.remaining -= e.size


@dataclass(frozen=True)
class Bucket:
    """Events of one sampling interval ``(end_ts - dt, end_ts]``.

    ``ref_quotes`` are the quotes frozen at the end of the previous bucket
    (or derived during warm-up); ``None`` marks the bucket unclassifiable.
    """

    end_ts: int
    events: tuple[Event, ...]
    ref_quotes: Quotes | None


def bucket_end(ts: int, dt: int) -> int:
    """End timestamp of the bucket containing ``ts`` on the ``dt`` grid."""
    return ((ts + dt - 1) // dt) * dt


def bucketize(events, cfg, initial_quotes: Quotes | None = None, *,
              derive_initial: bool = True, strict: bool = False) -> list[Bucket]:
    buckets, _, _ = bucketize_with_book(
        events, cfg, initial_quotes,
        derive_initial=derive_initial, strict=strict)
    return buckets


def bucketize_with_book(events, cfg, initial_quotes: Quotes | None = None, *,
                        derive_initial: bool = True, strict: bool = False):
    """Replay ``events`` into time-ordered buckets.

    Returns ``(buckets, book, counters)`` where ``counters`` augments the
    book's replay counters with bucket-level ones (``invalid_boundary_quotes``:
    bucket ends at which the live book had no valid pair and the previous
    reference was carried forward).
    """
    dt = cfg.dt
    book = BookState()
    buckets: list[Bucket] = []
    counters: dict[str, int] = {}

    cur_ref = initial_quotes
    have_ref = initial_quotes is not None

    pending: list[Event] = []
    pending_end: int | None = None
    pending_ref: Quotes | None = None
    last_ts: int | None = None

    def close_bucket() -> None:
        nonlocal cur_ref
        buckets.append(Bucket(pending_end, tuple(pending), pending_ref))
        q = book.quotes()
        if q is not None:
            cur_ref = q
        elif book.orders:
            counters["invalid_boundary_quotes"] = counters.get("invalid_boundary_quotes", 0) + 1

    for e in events:
        if last_ts is not None and e.ts < last_ts:
            raise ContractError(f"stream not sorted by ts: {e.ts} after {last_ts}")
        last_ts = e.ts
        end = bucket_end(e.ts, dt)
        if pending_end is None:
            pending_end, pending_ref = end, cur_ref
        while end > pending_end:
            close_bucket()
            pending.clear()
            pending_end += dt
            pending_ref = cur_ref
        book.apply_event(e, strict=strict)
        pending.append(e)
        if pending_ref is None and derive_initial and not have_ref:
            q = book.quotes()
            if q is not None:
                pending_ref = q
                cur_ref = q
        if pending_ref is not None:
            have_ref = True
    if pending_end is not None:
        close_bucket()

    counters.update(book.counters)
    return buckets, book, counters
