"""Anomaly detection on momentum series, plus a size-only baseline.

The momentum detector standardizes a per-bucket net-momentum series
(population standard deviation over the whole window, or a trailing
rolling window), ranks buckets by |deviation|, and for each anomalous
bucket traces the individual area events ordered by how much momentum
they carried.  Traced events are then clustered by exact size equality:
a cluster whose submit/cancel pairs span two or more price levels is a
layered-spoofing candidate, a single paired level is the traditional
pattern.

The baseline (:func:`zscore_baseline`) standardizes raw submission sizes
and knows nothing about placement or cancellation — it exists to show
what a size filter alone can and cannot see.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .arrays import EventBatch
from .book import Bucket
from .events import Action, AreaConfig, Event, Quotes, format_ts
from .momentum import (Area, MomentumSample, event_contributions,
                       momentum_rate)

log = logging.getLogger(__name__)

LABEL_LAYERED = "layered spoofing candidate"
LABEL_TRADITIONAL = "traditional spoofing candidate"
LABEL_UNPAIRED = "unpaired"


@dataclass(frozen=True)
class DeviationScore:
    bucket_end: int
    net_momentum: int          # numerator units (size-units x ticks)
    deviation: float


@dataclass(frozen=True)
class TracedEvent:
    event: Event
    contribution: int          # numerator units, this event's share


@dataclass(frozen=True)
class ZScoreRecord:
    event: Event
    z: float


@dataclass
class LayeringCluster:
    size: int
    price_levels: tuple[int, ...]
    events: list[TracedEvent]
    paired_levels: int
    label: str


@dataclass
class AnomalyReport:
    area: Area
    k: int
    threshold: float
    signed: bool
    window: int | None
    scores: list[DeviationScore]             # full series, time-ordered
    anomalies: list[DeviationScore]          # ranked
    traces: dict[int, list[TracedEvent]]     # bucket_end -> events
    clusters: list[LayeringCluster]
    warnings: list[str]

    def to_json(self, cfg: AreaConfig) -> dict:
        def score_obj(s: DeviationScore) -> dict:
            return {"bucket_end": format_ts(s.bucket_end),
                    "bucket_end_us": s.bucket_end,
                    "net_momentum": str(momentum_rate(s.net_momentum, cfg)),
                    "net_momentum_units": s.net_momentum,
                    "deviation": round(s.deviation, 6)}

        def traced_obj(t: TracedEvent) -> dict:
            e = t.event
            return {"ts": format_ts(e.ts), "ts_us": e.ts,
                    "order_id": e.order_id, "action": e.action.value,
                    "side": e.side.value, "kind": e.kind.value,
                    "price_ticks": e.price, "size_units": e.size,
                    "contribution": str(momentum_rate(t.contribution, cfg)),
                    "contribution_units": t.contribution}

        return {
            "detector": "momentum-deviation",
            "area": self.area.value,
            "k": self.k,
            "threshold": self.threshold,
            "signed": self.signed,
            "window": self.window,
            "n_buckets_scored": len(self.scores),
            "anomalies": [score_obj(s) for s in self.anomalies],
            "traces": {str(end): [traced_obj(t) for t in traced]
                       for end, traced in sorted(self.traces.items())},
            "clusters": [{
                "size_units": c.size,
                "price_levels_ticks": list(c.price_levels),
                "n_events": len(c.events),
                "paired_levels": c.paired_levels,
                "label": c.label,
                "order_ids": sorted({t.event.order_id for t in c.events}),
            } for c in self.clusters],
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# scoring and ranking
# ---------------------------------------------------------------------------

def deviation_scores(samples: Sequence[MomentumSample],
                     window: int | None = None,
                     warnings: list[str] | None = None) -> list[DeviationScore]:
    """Standardized net momentum per bucket.

    ``window=None`` standardizes against the whole series; ``window=n``
    against a trailing window of up to ``n`` samples ending at each
    bucket (inclusive).  A zero-variance window yields deviation 0.0 and
    a warning rather than an error.
    """
    if window is not None and window < 2:
        raise ValueError("rolling window must cover at least 2 samples")
    n = len(samples)
    if n == 0:
        return []
    x = np.array([s.m_total for s in samples], dtype=np.float64)
    if window is None:
        sigma = float(x.std())
        if sigma == 0.0:
            _warn(warnings, "zero variance over the whole window; "
                            "all deviations reported as 0")
            dev = np.zeros(n)
        else:
            dev = (x - x.mean()) / sigma
    else:
        c1 = np.cumsum(x)
        c2 = np.cumsum(x * x)
        idx = np.arange(n)
        start = np.maximum(0, idx - window + 1)
        cnt = idx - start + 1
        s1 = c1[idx] - np.where(start > 0, c1[start - 1], 0.0)
        s2 = c2[idx] - np.where(start > 0, c2[start - 1], 0.0)
        mean = s1 / cnt
        var = np.maximum(s2 / cnt - mean * mean, 0.0)
        sigma = np.sqrt(var)
        flat = sigma == 0.0
        if flat.any():
            _warn(warnings, f"{int(flat.sum())} rolling windows had zero "
                            "variance; those deviations reported as 0")
        with np.errstate(invalid="ignore", divide="ignore"):
            dev = np.where(flat, 0.0, (x - mean) / np.where(flat, 1.0, sigma))
    return [DeviationScore(s.bucket_end, s.m_total, float(d))
            for s, d in zip(samples, dev)]


def _warn(sink: list[str] | None, message: str) -> None:
    log.warning(message)
    if sink is not None:
        sink.append(message)


def top_k(scores: Iterable[DeviationScore], k: int = 10,
          threshold: float = 5.0, signed: bool = False) -> list[DeviationScore]:
    """The k most anomalous buckets.

    Default ranking is by |deviation| descending (ties broken by earlier
    bucket); ``signed=True`` ranks by the signed value instead, so
    positive spikes lead.  ``threshold`` floors |deviation| either way.
    """
    passing = [s for s in scores if abs(s.deviation) >= threshold]
    if signed:
        passing.sort(key=lambda s: (-s.deviation, s.bucket_end))
    else:
        passing.sort(key=lambda s: (-abs(s.deviation), s.bucket_end))
    return passing[:k]


# ---------------------------------------------------------------------------
# tracing and clustering
# ---------------------------------------------------------------------------

def trace_orders(anomalies: Sequence[DeviationScore], buckets: Iterable[Bucket],
                 cfg: AreaConfig, area: Area = Area.PASSIVE, *,
                 match_both_sides: bool = False) -> dict[int, list[TracedEvent]]:
    """Per anomalous bucket: the area's events, biggest momentum first.

    ``buckets`` must come from the same stream the scores were computed
    on; only buckets named by ``anomalies`` are examined.
    """
    wanted = {s.bucket_end for s in anomalies}
    traces: dict[int, list[TracedEvent]] = {}
    for b in buckets:
        if b.end_ts not in wanted or b.ref_quotes is None:
            continue
        rows: list[TracedEvent] = []
        for e in b.events:
            contrib = sum(m for a, _, m in event_contributions(
                e, b.ref_quotes, cfg.alpha, match_both_sides=match_both_sides)
                if a is area)
            if contrib:
                rows.append(TracedEvent(e, contrib))
        rows.sort(key=lambda t: (-abs(t.contribution), t.event.ts, t.event.order_id))
        traces[b.end_ts] = rows
    return traces


def cluster_layering(traced: Iterable[TracedEvent]) -> list[LayeringCluster]:
    """Group traced events by exact size; price-level spread names the pattern.

    Submit/cancel pairing prefers order ids and falls back to (price, size)
    equality.  Two or more paired price levels -> layered candidate; one
    -> traditional; none -> unpaired.
    """
    by_size: dict[int, list[TracedEvent]] = {}
    for t in traced:
        by_size.setdefault(t.event.size, []).append(t)

    clusters: list[LayeringCluster] = []
    for size, rows in by_size.items():
        rows.sort(key=lambda t: (t.event.ts, t.event.order_id))
        submits: dict[str, Event] = {}
        cancels: dict[str, Event] = {}
        for t in rows:
            if t.event.action is Action.SUBMIT:
                submits.setdefault(t.event.order_id, t.event)
            elif t.event.action is Action.CANCEL:
                cancels.setdefault(t.event.order_id, t.event)
        paired_prices: set[int] = set()
        used_cancels: set[str] = set()
        for oid, sub in submits.items():
            if oid in cancels:
                used_cancels.add(oid)
                if sub.price is not None:
                    paired_prices.add(sub.price)
        leftover_cancel_prices = [c.price for oid, c in cancels.items()
                                  if oid not in used_cancels]
        for oid, sub in submits.items():
            if oid not in cancels and sub.price in leftover_cancel_prices:
                leftover_cancel_prices.remove(sub.price)
                paired_prices.add(sub.price)
        levels = tuple(sorted({t.event.price for t in rows
                               if t.event.price is not None}, reverse=True))
        if len(paired_prices) >= 2:
            label = LABEL_LAYERED
        elif len(paired_prices) == 1:
            label = LABEL_TRADITIONAL
        else:
            label = LABEL_UNPAIRED
        clusters.append(LayeringCluster(size, levels, rows,
                                        len(paired_prices), label))
    clusters.sort(key=lambda c: (-sum(abs(t.contribution) for t in c.events),
                                 c.size))
    return clusters


# ---------------------------------------------------------------------------
# size-only baseline
# ---------------------------------------------------------------------------

def zscore_baseline(events: Iterable[Event], k: int = 10,
                    warnings: list[str] | None = None) -> list[ZScoreRecord]:
    """Top-k submissions by Z-score of raw order size.

    Population statistics over every submission in the window; ranking is
    by Z descending, ties broken by earlier timestamp.  Zero variance
    yields an empty ranking and a warning.
    """
    submits = [e for e in events if e.action is Action.SUBMIT]
    if not submits:
        return []
    sizes = np.array([e.size for e in submits], dtype=np.float64)
    sigma = float(sizes.std())
    if sigma == 0.0:
        _warn(warnings, "zero variance of submission sizes; "
                        "Z-score ranking is empty")
        return []
    mu = float(sizes.mean())
    scored = [ZScoreRecord(e, (e.size - mu) / sigma) for e in submits]
    scored.sort(key=lambda r: (-r.z, r.event.ts, r.event.order_id))
    return scored[:k]


# ---------------------------------------------------------------------------
# array-tier glue
# ---------------------------------------------------------------------------

def buckets_from_batch(batch: EventBatch, result, ends: Iterable[int]) -> list[Bucket]:
    """Materialize just the named buckets (events + frozen refs) from a
    batch and its analysis result — the trace path for large streams."""
    dt = result.cfg.dt
    k0 = int(result.bucket_ends[0]) // dt if result.n_buckets else 0
    out = []
    for end in sorted(set(ends)):
        j = end // dt - k0
        if j < 0 or j >= result.n_buckets:
            continue
        ref = None
        if result.ref_valid[j]:
            ref = Quotes(int(result.ref_bid[j]), int(result.ref_ask[j]))
        idx = np.flatnonzero(
            ((batch.ts + (dt - 1)) // dt) * dt == end)
        out.append(Bucket(end, tuple(batch.events_at(idx)), ref))
    return out


def detect_from_result(result, batch: EventBatch, *, area: Area = Area.PASSIVE,
                       k: int = 10, threshold: float = 5.0,
                       signed: bool = False, window: int | None = None) -> AnomalyReport:
    """Run the full momentum detector against an analysis result."""
    warnings: list[str] = []
    samples = result.samples(area)
    scores = deviation_scores(samples, window, warnings)
    anomalies = top_k(scores, k, threshold, signed)
    buckets = buckets_from_batch(batch, result, (s.bucket_end for s in anomalies))
    traces = trace_orders(anomalies, buckets, result.cfg, area,
                          match_both_sides=result.match_both)
    clusters = cluster_layering(t for rows in traces.values() for t in rows)
    return AnomalyReport(area=area, k=k, threshold=threshold, signed=signed,
                         window=window, scores=scores, anomalies=anomalies,
                         traces=traces, clusters=clusters, warnings=warnings)
