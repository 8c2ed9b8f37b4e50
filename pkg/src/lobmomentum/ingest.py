"""Stream ingest: canonical CSV/JSONL, an exchange-feed adapter, validation.

Canonical format, one record per line::

    ts,order_id,action,side,kind,price,size
    18:36:13.590000,oid-1,open,buy,limit,1.14,100000

* ``ts``      — ``HH:MM:SS[.ffffff]`` or ISO-8601
* ``action``  — ``open`` | ``cancel`` | ``match``
* ``side``    — ``buy`` | ``sell`` (for ``match``: the resting side)
* ``kind``    — ``limit`` | ``market``
* ``price``   — decimal on the tick grid; empty or ``none`` for market opens
* ``size``    — positive decimal on the size-unit grid

The JSONL mirror uses the same field names; price/size are decimal
*strings* (numbers are accepted on input) so the serialize->parse round
trip is exact by construction.  ``.gz`` inputs and outputs are handled
transparently.  Malformed records are fatal parse errors carrying line
and column; only the exchange adapter skips (and counts) message types
that genuinely carry no book event.
"""

from __future__ import annotations

import gzip
import io
import json
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import ParseError
from .events import (Action, AreaConfig, Event, OrderKind, Side, format_ts,
                     parse_ts, scaled_to_text, text_to_scaled)

CANONICAL_FIELDS = ("ts", "order_id", "action", "side", "kind", "price", "size")
CANONICAL_HEADER = ",".join(CANONICAL_FIELDS)

_ACTIONS = {a.value: a for a in Action}
_SIDES = {s.value: s for s in Side}
_KINDS = {k.value: k for k in OrderKind}


@dataclass
class ParseStats:
    """Record-level accounting filled while a parse iterator is consumed."""

    total_records: int = 0
    parse_errors: int = 0
    skipped_by_type: dict[str, int] = field(default_factory=dict)

    def skip(self, reason: str) -> None:
        self.skipped_by_type[reason] = self.skipped_by_type.get(reason, 0) + 1


def open_maybe_gzip(path: str | os.PathLike, mode: str = "rt") -> IO:
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode, encoding=None if "b" in mode else "utf-8")
    if "b" in mode:
        return open(path, mode)
    return open(path, mode, encoding="utf-8", newline="" if "w" in mode else None)


def _lines(source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open_maybe_gzip(source) as f:
            yield from f
    else:
        yield from source


# ---------------------------------------------------------------------------
# canonical parsing
# ---------------------------------------------------------------------------

def _parse_csv_row(parts: list[str], cfg: AreaConfig, lineno: int,
                   pdec: int | None, sdec: int | None) -> Event:
    if len(parts) != 7:
        raise ParseError(f"expected 7 fields, got {len(parts)}", line=lineno)
    ts_text, order_id, action_t, side_t, kind_t, price_t, size_t = parts
    try:
        ts = parse_ts(ts_text)
    except ValueError as exc:
        raise ParseError(str(exc), line=lineno, column="ts") from exc
    if not order_id:
        raise ParseError("empty order_id", line=lineno, column="order_id")
    action = _ACTIONS.get(action_t.strip())
    if action is None:
        raise ParseError(f"unknown action {action_t!r}", line=lineno, column="action")
    side = _SIDES.get(side_t.strip())
    if side is None:
        raise ParseError(f"unknown side {side_t!r}", line=lineno, column="side")
    kind = _KINDS.get(kind_t.strip())
    if kind is None:
        raise ParseError(f"unknown kind {kind_t!r}", line=lineno, column="kind")

    price_t = price_t.strip()
    if price_t in ("", "none"):
        price = None
    else:
        try:
            price = text_to_scaled(price_t, cfg.tick_size, pdec)
        except ParseError as exc:  # PrecisionError, re-raise with location
            raise type(exc)(f"{exc.args[0]}", line=lineno, column="price") from exc
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, column="price") from exc
    try:
        size = text_to_scaled(size_t, cfg.size_unit, sdec)
    except ParseError as exc:
        raise type(exc)(f"{exc.args[0]}", line=lineno, column="size") from exc
    except ValueError as exc:
        raise ParseError(str(exc), line=lineno, column="size") from exc

    try:
        return Event(ts, order_id.strip(), action, side, kind, price, size)
    except ValueError as exc:
        raise ParseError(str(exc), line=lineno) from exc


def parse_canonical_csv(source, cfg: AreaConfig,
                        stats: ParseStats | None = None) -> Iterator[Event]:
    stats = stats if stats is not None else ParseStats()
    pdec, sdec = cfg.price_decimals, cfg.size_decimals
    for lineno, line in enumerate(_lines(source), start=1):
        line = line.rstrip("\r\n")
        if not line:
            continue
        if lineno == 1 and line == CANONICAL_HEADER:
            continue
        stats.total_records += 1
        yield _parse_csv_row(line.split(","), cfg, lineno, pdec, sdec)


def parse_canonical_jsonl(source, cfg: AreaConfig,
                          stats: ParseStats | None = None) -> Iterator[Event]:
    stats = stats if stats is not None else ParseStats()
    pdec, sdec = cfg.price_decimals, cfg.size_decimals
    for lineno, line in enumerate(_lines(source), start=1):
        line = line.strip()
        if not line:
            continue
        stats.total_records += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(obj, dict):
            raise ParseError("record is not a JSON object", line=lineno)
        parts = []
        for name in CANONICAL_FIELDS:
            if name == "price":
                v = obj.get("price")
                parts.append("" if v is None else _num_text(v))
            elif name not in obj:
                raise ParseError(f"missing field {name!r}", line=lineno, column=name)
            elif name == "size":
                parts.append(_num_text(obj[name]))
            else:
                parts.append(str(obj[name]))
        yield _parse_csv_row(parts, cfg, lineno, pdec, sdec)


def _num_text(value) -> str:
    # JSON numbers arrive as int/float; repr(float) is the shortest
    # round-tripping decimal, which the grid conversion then checks exactly.
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------

def event_to_row(e: Event, cfg: AreaConfig) -> tuple[str, ...]:
    price = "" if e.price is None else scaled_to_text(e.price, cfg.tick_size,
                                                      cfg.price_decimals)
    return (format_ts(e.ts), e.order_id, e.action.value, e.side.value,
            e.kind.value, price, scaled_to_text(e.size, cfg.size_unit,
                                                cfg.size_decimals))


def write_canonical_csv(events: Iterable[Event], dest, cfg: AreaConfig, *,
                        header: bool = True) -> int:
    """Serialize events; returns the number written."""
    own = isinstance(dest, (str, os.PathLike))
    f = open_maybe_gzip(dest, "wt") if own else dest
    n = 0
    try:
        if header:
            f.write(CANONICAL_HEADER + "\n")
        for e in events:
            f.write(",".join(event_to_row(e, cfg)) + "\n")
            n += 1
    finally:
        if own:
            f.close()
    return n


def write_canonical_jsonl(events: Iterable[Event], dest, cfg: AreaConfig) -> int:
    own = isinstance(dest, (str, os.PathLike))
    f = open_maybe_gzip(dest, "wt") if own else dest
    n = 0
    try:
        for e in events:
            ts, oid, action, side, kind, price, size = event_to_row(e, cfg)
            obj = {"ts": ts, "order_id": oid, "action": action, "side": side,
                   "kind": kind, "price": price or None, "size": size}
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")
            n += 1
    finally:
        if own:
            f.close()
    return n


# ---------------------------------------------------------------------------
# exchange-feed adapter (full-channel style JSONL)
# ---------------------------------------------------------------------------

def _need(obj: dict, key: str, lineno: int) -> str:
    v = obj.get(key)
    if v is None:
        raise ParseError(f"missing field {key!r}", line=lineno, column=key)
    return v


def parse_exchange_feed(source, cfg: AreaConfig,
                        stats: ParseStats | None = None) -> Iterator[Event]:
    """Adapt a full-channel JSONL feed to canonical events.

    ``open`` becomes a limit submission (at its remaining size), a
    ``done`` with reason ``canceled`` becomes a cancel, and ``match``
    becomes a match row carrying the maker order's id and side.  A
    ``done`` with reason ``filled`` is a no-op (the matches already told
    the story), and ``received``/``change``/anything unknown is counted
    and skipped.  Structurally broken records are fatal.
    """
    stats = stats if stats is not None else ParseStats()
    pdec, sdec = cfg.price_decimals, cfg.size_decimals
    for lineno, line in enumerate(_lines(source), start=1):
        line = line.strip()
        if not line:
            continue
        stats.total_records += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=lineno) from exc
        mtype = obj.get("type")
        if mtype == "open":
            row = (_need(obj, "time", lineno), _need(obj, "order_id", lineno),
                   "open", _need(obj, "side", lineno), "limit",
                   _num_text(_need(obj, "price", lineno)),
                   _num_text(_need(obj, "remaining_size", lineno)))
        elif mtype == "done":
            reason = obj.get("reason")
            if reason == "filled":
                stats.skip("done_filled")
                continue
            if reason != "canceled":
                stats.skip(f"done_{reason}")
                continue
            price = obj.get("price")
            remaining = obj.get("remaining_size")
            if price is None:
                stats.skip("done_unpriced")       # e.g. canceled market order
                continue
            if remaining is None or _is_zero(remaining):
                stats.skip("done_empty")
                continue
            row = (_need(obj, "time", lineno), _need(obj, "order_id", lineno),
                   "cancel", _need(obj, "side", lineno), "limit",
                   _num_text(price), _num_text(remaining))
        elif mtype == "match":
            row = (_need(obj, "time", lineno),
                   _need(obj, "maker_order_id", lineno),
                   "match", _need(obj, "side", lineno), "limit",
                   _num_text(_need(obj, "price", lineno)),
                   _num_text(_need(obj, "size", lineno)))
        else:
            stats.skip(str(mtype))
            continue
        yield _parse_csv_row(list(row), cfg, lineno, pdec, sdec)


def _is_zero(value) -> bool:
    try:
        return float(value) == 0.0
    except (TypeError, ValueError):
        return False


# ---------------------------------------------------------------------------
# format dispatch
# ---------------------------------------------------------------------------

def sniff_format(path: str | os.PathLike) -> str:
    """Best-effort format detection: ``csv``, ``jsonl`` or ``exchange``."""
    with open_maybe_gzip(path) as f:
        first = f.readline().strip()
    if not first or not first.startswith("{"):
        return "csv"
    try:
        obj = json.loads(first)
    except json.JSONDecodeError:
        return "csv"
    return "exchange" if "type" in obj else "jsonl"


def parse_stream(path: str | os.PathLike, cfg: AreaConfig, fmt: str = "auto",
                 stats: ParseStats | None = None) -> Iterator[Event]:
    if fmt == "auto":
        fmt = sniff_format(path)
    if fmt == "csv":
        return parse_canonical_csv(path, cfg, stats)
    if fmt == "jsonl":
        return parse_canonical_jsonl(path, cfg, stats)
    if fmt == "exchange":
        return parse_exchange_feed(path, cfg, stats)
    raise ValueError(f"unknown stream format {fmt!r}")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class StreamReport:
    """Counts describing one ingest pass.

    Invariant: ``total_records == parsed + parse_errors + sum(skipped_by_type)``.
    """

    total_records: int
    parsed: int
    parse_errors: int
    skipped_by_type: dict[str, int]
    action_histogram: dict[str, int]
    non_monotone_ts: int
    dangling_cancels: int
    replay_counters: dict[str, int]
    first_ts: int | None
    last_ts: int | None

    def to_json(self) -> dict:
        return {
            "total_records": self.total_records,
            "parsed": self.parsed,
            "parse_errors": self.parse_errors,
            "skipped_by_type": dict(sorted(self.skipped_by_type.items())),
            "action_histogram": dict(sorted(self.action_histogram.items())),
            "non_monotone_ts": self.non_monotone_ts,
            "dangling_cancels": self.dangling_cancels,
            "replay_counters": dict(sorted(self.replay_counters.items())),
            "first_ts": None if self.first_ts is None else format_ts(self.first_ts),
            "last_ts": None if self.last_ts is None else format_ts(self.last_ts),
        }


def validate_stream(events: Iterable[Event],
                    stats: ParseStats | None = None) -> StreamReport:
    """Consume a (possibly lazily parsed) event stream and summarize it.

    Pass the same ``stats`` object given to the parser so record-level
    accounting lands in the report.
    """
    from .book import BookState  # local import to keep module deps one-way

    book = BookState()
    actions: dict[str, int] = {}
    non_monotone = 0
    first_ts = last_ts = None
    prev_ts: int | None = None
    n = 0
    for e in events:
        n += 1
        actions[e.action.value] = actions.get(e.action.value, 0) + 1
        if prev_ts is not None and e.ts < prev_ts:
            non_monotone += 1
        prev_ts = e.ts
        if first_ts is None:
            first_ts = e.ts
        last_ts = e.ts
        book.apply_event(e)
    stats = stats if stats is not None else ParseStats()
    return StreamReport(
        total_records=max(stats.total_records, n),
        parsed=n,
        parse_errors=stats.parse_errors,
        skipped_by_type=dict(stats.skipped_by_type),
        action_histogram=actions,
        non_monotone_ts=non_monotone,
        dangling_cancels=book.counters.get("dangling_cancel", 0),
        replay_counters=dict(book.counters),
        first_ts=first_ts,
        last_ts=last_ts,
    )
