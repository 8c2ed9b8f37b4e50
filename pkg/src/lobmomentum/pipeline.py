"""End-to-end array pipeline: file -> batch -> ref quotes -> momentum.

This is what the CLI runs.  Canonical CSV goes through a vectorized
pandas/numpy fast path that preserves integer exactness for any value
within float64's ~15 significant digits (a residue check rejects
off-grid values deviating by more than 1e-4 tick/size-unit; the
line-by-line parser in :mod:`lobmomentum.ingest` is the fully exact
reference and is what ``validate`` uses).  JSONL and exchange feeds use
the object-tier parsers and are converted.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np
import pandas as pd

from .arrays import PRICE_NONE, EventBatch
from .book import bucket_end
from .errors import ContractError, ParseError, PrecisionError
from .events import AreaConfig, Quotes, format_ts, parse_ts
from .ingest import (CANONICAL_HEADER, ParseStats, open_maybe_gzip,
                     parse_stream, sniff_format)
from .kernels import COUNTER_NAMES, USE_NUMBA, accumulate_momentum, replay_quotes
from .momentum import Area, MomentumSample, Split, momentum_rate

# column layout of the per-bucket momentum table
AREA_SPLIT_COLS = {
    (Area.ACTIVE, Split.LIMIT): 0,
    (Area.ACTIVE, Split.MARKET): 1,
    (Area.PASSIVE, Split.LIMIT): 2,
    (Area.PASSIVE, Split.MARKET): 3,
}

_MAX_BUCKETS = 50_000_000


# ---------------------------------------------------------------------------
# bulk loading
# ---------------------------------------------------------------------------

def load_batch(path: str | os.PathLike, cfg: AreaConfig, fmt: str = "auto",
               stats: ParseStats | None = None) -> EventBatch:
    if fmt == "auto":
        fmt = sniff_format(path)
    if fmt == "csv":
        return _load_csv_fast(path, cfg, stats)
    events = parse_stream(path, cfg, fmt, stats)
    return EventBatch.from_events(events)


def _empty_batch() -> EventBatch:
    z = np.zeros(0, dtype=np.int64)
    b = np.zeros(0, dtype=np.int8)
    return EventBatch(ts=z, action=b, side=b.copy(), kind=b.copy(),
                      price=z.copy(), size=z.copy(), oid_index=z.copy(),
                      order_ids=[], n_orders=0)


def _load_csv_fast(path, cfg: AreaConfig, stats: ParseStats | None) -> EventBatch:
    with open_maybe_gzip(path) as f:
        first = f.readline().rstrip("\r\n")
    if not first:
        return _empty_batch()
    has_header = first == CANONICAL_HEADER
    offset = 1 if has_header else 0
    try:
        df = pd.read_csv(
            path, header=None, skiprows=offset,
            names=["ts", "order_id", "action", "side", "kind", "price", "size"],
            dtype={"ts": str, "order_id": str, "action": str, "side": str,
                   "kind": str, "price": np.float64, "size": np.float64},
            na_values={"price": ["", "none"]}, keep_default_na=False,
            engine="c",
        )
    except pd.errors.EmptyDataError:
        return _empty_batch()
    except ValueError as exc:
        raise ParseError(f"bulk parse failed: {exc}") from exc
    n = len(df)
    if stats is not None:
        stats.total_records += n

    ts = _ts_column(df["ts"].to_numpy(dtype=object), offset)
    action = _code_column(df["action"], {"open": 0, "cancel": 1, "match": 2},
                          "action", offset)
    side = _code_column(df["side"], {"buy": 0, "sell": 1}, "side", offset)
    kind = _code_column(df["kind"], {"limit": 0, "market": 1}, "kind", offset)

    price_f = df["price"].to_numpy(dtype=np.float64)
    has_price = ~np.isnan(price_f)
    pdec = cfg.price_decimals
    sdec = cfg.size_decimals
    if pdec is None or sdec is None:
        raise ContractError("bulk CSV path requires power-of-ten tick/size units")
    price = np.full(n, PRICE_NONE, dtype=np.int64)
    price[has_price] = _grid_column(price_f[has_price], pdec, "price", offset,
                                    np.flatnonzero(has_price))
    bad = has_price & (price <= 0)
    if bad.any():
        i = int(np.argmax(bad))
        raise ParseError("price must be positive", line=i + 1 + offset, column="price")
    unpriced = ~has_price & ~((action == 0) & (kind == 1))
    if unpriced.any():
        i = int(np.argmax(unpriced))
        raise ParseError("only market submissions may omit a price",
                         line=i + 1 + offset, column="price")

    size_f = df["size"].to_numpy(dtype=np.float64)
    if np.isnan(size_f).any():
        i = int(np.argmax(np.isnan(size_f)))
        raise ParseError("missing size", line=i + 1 + offset, column="size")
    size = _grid_column(size_f, sdec, "size", offset, None)
    if (size <= 0).any():
        i = int(np.argmax(size <= 0))
        raise ParseError("size must be positive", line=i + 1 + offset, column="size")

    codes, uniques = pd.factorize(df["order_id"])
    if (df["order_id"].to_numpy(dtype=object) == "").any():
        raise ParseError("empty order_id", column="order_id")
    return EventBatch(ts=ts, action=action, side=side, kind=kind, price=price,
                      size=size, oid_index=codes.astype(np.int64),
                      order_ids=list(uniques), n_orders=len(uniques))


def _ts_column(arr: np.ndarray, offset: int) -> np.ndarray:
    u = np.asarray(arr, dtype="U")
    width = u.dtype.itemsize // 4
    if width == 15 and len(u):
        v = u.view(np.uint32).reshape(len(u), 15).astype(np.int64)
        d = v - 48
        ok = (v[:, 2] == 58) & (v[:, 5] == 58) & (v[:, 8] == 46)
        for col in (0, 1, 3, 4, 6, 7, 9, 10, 11, 12, 13, 14):
            ok &= (d[:, col] >= 0) & (d[:, col] <= 9)
        hh = d[:, 0] * 10 + d[:, 1]
        mm = d[:, 3] * 10 + d[:, 4]
        ss = d[:, 6] * 10 + d[:, 7]
        ok &= (hh < 24) & (mm < 60) & (ss < 60)
        if ok.all():
            frac = ((((d[:, 9] * 10 + d[:, 10]) * 10 + d[:, 11]) * 10
                     + d[:, 12]) * 10 + d[:, 13]) * 10 + d[:, 14]
            return (hh * 3600 + mm * 60 + ss) * 1_000_000 + frac
    out = np.empty(len(arr), dtype=np.int64)
    for i, text in enumerate(arr):
        try:
            out[i] = parse_ts(text)
        except ValueError as exc:
            raise ParseError(str(exc), line=i + 1 + offset, column="ts") from exc
    return out


def _code_column(col: pd.Series, mapping: dict[str, int], name: str,
                 offset: int) -> np.ndarray:
    u = col.to_numpy(dtype="U8")
    code = np.full(len(u), -1, dtype=np.int8)
    for text, c in mapping.items():
        code[u == text] = c
    if (code < 0).any():
        i = int(np.argmax(code < 0))
        raise ParseError(f"unknown {name} {str(col.iloc[i])!r}",
                         line=i + 1 + offset, column=name)
    return code


def _grid_column(values: np.ndarray, ndec: int, name: str, offset: int,
                 rows: np.ndarray | None) -> np.ndarray:
    scaled = values * (10.0 ** ndec)
    r = np.rint(scaled)
    resid = np.abs(scaled - r)
    bad = resid > 1e-4
    if bad.any():
        i = int(np.argmax(bad))
        line = int(rows[i]) + 1 + offset if rows is not None else i + 1 + offset
        raise PrecisionError(
            f"{values[i]!r} is finer than the 1e-{ndec} grid", line=line, column=name)
    if len(r) and np.abs(r).max() > 1e14:
        raise ParseError(
            f"{name} magnitude exceeds the bulk parser's exact range; "
            "use the line parser (validate) or coarser units", column=name)
    return r.astype(np.int64)


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------

@dataclass
class AnalysisResult:
    cfg: AreaConfig
    bucket_ends: np.ndarray        # int64 µs, one per bucket
    ref_bid: np.ndarray            # int64, -1 when unclassifiable
    ref_ask: np.ndarray
    ref_valid: np.ndarray          # bool
    m: np.ndarray                  # int64 (nb, 4): AL, AM, PL, PM numerators
    area_counts: np.ndarray        # int64: active, passive, outside, unclassified
    counters: dict[str, int]
    stats: ParseStats
    n_events: int
    match_both: bool

    @property
    def n_buckets(self) -> int:
        return len(self.bucket_ends)

    def totals(self, area: Area) -> np.ndarray:
        base = 0 if area is Area.ACTIVE else 2
        return self.m[:, base] + self.m[:, base + 1]

    def samples(self, area: Area) -> list[MomentumSample]:
        """Object-tier view of one area's series (unclassifiable buckets
        excluded, per the series contract)."""
        base = 0 if area is Area.ACTIVE else 2
        out = []
        for j in np.flatnonzero(self.ref_valid):
            ml = int(self.m[j, base])
            mm = int(self.m[j, base + 1])
            out.append(MomentumSample(int(self.bucket_ends[j]), area, ml, mm, ml + mm))
        return out


def bucket_indices(ts: np.ndarray, dt: int) -> tuple[np.ndarray, int, int]:
    """Per-event bucket index, first bucket's grid index, and bucket count."""
    if len(ts) == 0:
        return np.zeros(0, dtype=np.int64), 0, 0
    if np.any(np.diff(ts) < 0):
        i = int(np.argmax(np.diff(ts) < 0))
        raise ContractError(f"stream not sorted by ts at record {i + 2}")
    k = (ts + (dt - 1)) // dt
    k0 = int(k[0])
    nb = int(k[-1]) - k0 + 1
    if nb > _MAX_BUCKETS:
        raise ContractError(f"stream spans {nb} buckets; increase dt")
    return k - k0, k0, nb


def build_refs(nb: int, end_bid: np.ndarray, end_ask: np.ndarray,
               cap_bucket: int, cap_bid: int, cap_ask: int,
               initial: Quotes | None):
    """Per-bucket frozen reference quotes from boundary snapshots.

    Bucket j's reference is the boundary state after bucket j-1; invalid
    boundaries (one-sided/crossed book) carry the last valid reference
    forward and are counted.  The first bucket uses the supplied initial
    quotes, falling back to the first crossing pair ever observed (in the
    bucket where it occurred).
    """
    ref_bid = np.full(nb, -1, dtype=np.int64)
    ref_ask = np.full(nb, -1, dtype=np.int64)
    carried = 0
    cur_b, cur_a = (initial.bid, initial.ask) if initial is not None else (-1, -1)
    for j in range(nb):
        if j > 0:
            eb = end_bid[j - 1]
            if eb >= 0:
                cur_b, cur_a = eb, end_ask[j - 1]
            elif cur_b >= 0:
                carried += 1
        rb, ra = cur_b, cur_a
        if rb < 0 and cap_bucket == j:
            rb, ra = cap_bid, cap_ask
            cur_b, cur_a = rb, ra
        if rb >= 0:
            ref_bid[j] = rb
            ref_ask[j] = ra
    return ref_bid, ref_ask, ref_bid >= 0, carried


def analyze_batch(batch: EventBatch, cfg: AreaConfig, *,
                  initial_quotes: Quotes | None = None,
                  match_both: bool = False,
                  stats: ParseStats | None = None,
                  use_numba: bool | None = None) -> AnalysisResult:
    stats = stats if stats is not None else ParseStats()
    bi, k0, nb = bucket_indices(batch.ts, cfg.dt)
    if nb == 0:
        return AnalysisResult(cfg, np.zeros(0, dtype=np.int64),
                              np.zeros(0, dtype=np.int64),
                              np.zeros(0, dtype=np.int64),
                              np.zeros(0, dtype=bool),
                              np.zeros((0, 4), dtype=np.int64),
                              np.zeros(4, dtype=np.int64), {}, stats, 0, match_both)
    end_bid, end_ask, cap_bucket, cap_bid, cap_ask, counter_arr = replay_quotes(
        bi, batch.action, batch.side, batch.kind, batch.price, batch.size,
        batch.oid_index, batch.n_orders, nb, use_numba=use_numba)
    ref_bid, ref_ask, ref_valid, carried = build_refs(
        nb, end_bid, end_ask, int(cap_bucket), int(cap_bid), int(cap_ask),
        initial_quotes)
    m, area_counts = accumulate_momentum(
        bi, batch.action, batch.side, batch.kind, batch.price, batch.size,
        ref_bid, ref_ask, ref_valid, cfg.alpha,
        match_both=match_both, use_numba=use_numba)
    counters = {name: int(c) for name, c in zip(COUNTER_NAMES, counter_arr) if c}
    if carried:
        counters["invalid_boundary_quotes"] = carried
    bucket_ends = (np.arange(nb, dtype=np.int64) + k0) * cfg.dt
    return AnalysisResult(cfg, bucket_ends, ref_bid, ref_ask, ref_valid, m,
                          area_counts, counters, stats, len(batch), match_both)


def analyze_file(path: str | os.PathLike, cfg: AreaConfig, *, fmt: str = "auto",
                 initial_quotes: Quotes | None = None, match_both: bool = False,
                 use_numba: bool | None = None) -> AnalysisResult:
    stats = ParseStats()
    batch = load_batch(path, cfg, fmt, stats)
    return analyze_batch(batch, cfg, initial_quotes=initial_quotes,
                         match_both=match_both, stats=stats,
                         use_numba=use_numba)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

MOMENTUM_HEADER = ("bucket_end,area,m_limit,m_market,m_total,"
                   "cum_limit,cum_market,cum_total")


def write_momentum_csv(result: AnalysisResult, dest) -> None:
    """Both areas' per-bucket and cumulative momentum, as decimal rates."""
    own = isinstance(dest, (str, os.PathLike))
    f = open_maybe_gzip(dest, "wt") if own else dest
    cfg = result.cfg
    try:
        f.write(MOMENTUM_HEADER + "\n")
        for area in (Area.ACTIVE, Area.PASSIVE):
            base = 0 if area is Area.ACTIVE else 2
            cl = cm = 0
            for j in np.flatnonzero(result.ref_valid):
                ml = int(result.m[j, base])
                mm = int(result.m[j, base + 1])
                cl += ml
                cm += mm
                f.write("%s,%s,%s,%s,%s,%s,%s,%s\n" % (
                    format_ts(int(result.bucket_ends[j])), area.value,
                    momentum_rate(ml, cfg), momentum_rate(mm, cfg),
                    momentum_rate(ml + mm, cfg), momentum_rate(cl, cfg),
                    momentum_rate(cm, cfg), momentum_rate(cl + cm, cfg)))
    finally:
        if own:
            f.close()


def summary_dict(result: AnalysisResult, backend: str | None = None) -> dict:
    cfg = result.cfg
    valid = int(np.count_nonzero(result.ref_valid))
    return {
        "config": {
            "alpha_ticks": cfg.alpha,
            "dt_us": cfg.dt,
            "tick_size": str(cfg.tick_size),
            "size_unit": str(cfg.size_unit),
            "match_both_sides": result.match_both,
        },
        "events": {
            "total_records": result.stats.total_records,
            "analyzed": result.n_events,
            "skipped_by_type": dict(sorted(result.stats.skipped_by_type.items())),
            "area_counts": {
                "active": int(result.area_counts[0]),
                "passive": int(result.area_counts[1]),
                "outside": int(result.area_counts[2]),
                "unclassified": int(result.area_counts[3]),
            },
        },
        "buckets": {
            "total": result.n_buckets,
            "classified": valid,
            "unclassifiable": result.n_buckets - valid,
            "first_end": (format_ts(int(result.bucket_ends[0]))
                          if result.n_buckets else None),
            "last_end": (format_ts(int(result.bucket_ends[-1]))
                         if result.n_buckets else None),
        },
        "replay_counters": dict(sorted(result.counters.items())),
        "backend": backend if backend is not None else
                   ("numba" if USE_NUMBA else "fallback"),
    }


def write_summary_json(result: AnalysisResult, dest, backend: str | None = None) -> None:
    own = isinstance(dest, (str, os.PathLike))
    f = open(dest, "w", encoding="utf-8") if own else dest
    try:
        json.dump(summary_dict(result, backend), f, indent=2, sort_keys=False)
        f.write("\n")
    finally:
        if own:
            f.close()
