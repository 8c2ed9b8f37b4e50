"""Batch momentum analytics for level-3 limit-order-book event streams.

Events are treated as signed mass moving toward or away from the touch:
each submission, cancel, or match contributes ``size x velocity``, where
velocity measures the price's pull relative to the band around the best
quotes.  Per-bucket sums of these contributions, split by book area
(active vs passive) and order type (limit vs market), form the series
the anomaly detector scans for spoofing- and layering-shaped behavior.

Typical library use::

    from lobmomentum import AreaConfig, analyze_file, detect_from_result

    cfg = AreaConfig()                       # 0.01 ticks, 0.1 s buckets
    result = analyze_file("stream.csv", cfg)
    # result.samples(Area.PASSIVE) -> per-bucket MomentumSample list

Internal prices are integer ticks and sizes integer units; momentum
numerators stay exact integers until formatted for output.
"""

from .book import BookState, Bucket, bucket_end, bucketize, bucketize_with_book
from .detect import (AnomalyReport, DeviationScore, LayeringCluster,
                     TracedEvent, ZScoreRecord, cluster_layering,
                     detect_from_result, deviation_scores, top_k,
                     trace_orders, zscore_baseline)
from .errors import (ConfigError, ContractError, ParseError, PrecisionError,
                     StreamError)
from .events import (Action, AreaConfig, Event, OrderKind, Quotes, Side, flip,
                     format_ts, midprice, midprice_velocity, parse_ts,
                     scaled_to_text, text_to_scaled)
from .ingest import (CANONICAL_HEADER, ParseStats, StreamReport,
                     parse_canonical_csv, parse_canonical_jsonl,
                     parse_exchange_feed, parse_stream, sniff_format,
                     validate_stream, write_canonical_csv,
                     write_canonical_jsonl)
from .momentum import (Area, MomentumSample, Split, active_band,
                       bucket_net_momentum, classify_area, cumulative_series,
                       event_contributions, event_momentum, event_velocity,
                       momentum_rate, momentum_series)
from .pipeline import (AnalysisResult, analyze_batch, analyze_file,
                       load_batch, summary_dict, write_momentum_csv,
                       write_summary_json)
from .synth import (BackgroundParams, SizeModel, SpoofSpec, gen_background,
                    inject_spoof, plan_spoof, spoof_spec_from_json)

__version__ = "0.1.0"

__all__ = [
    "Action", "AnalysisResult", "AnomalyReport", "Area", "AreaConfig",
    "BackgroundParams", "BookState", "Bucket", "CANONICAL_HEADER",
    "ConfigError", "ContractError", "DeviationScore", "Event",
    "LayeringCluster", "MomentumSample", "OrderKind", "ParseError",
    "ParseStats", "PrecisionError", "Quotes", "Side", "SizeModel",
    "SpoofSpec", "Split", "StreamError", "StreamReport", "TracedEvent",
    "ZScoreRecord", "active_band", "analyze_batch", "analyze_file",
    "bucket_end", "bucket_net_momentum", "bucketize", "bucketize_with_book",
    "classify_area", "cluster_layering", "cumulative_series",
    "detect_from_result", "deviation_scores", "event_contributions",
    "event_momentum", "event_velocity", "flip", "format_ts", "gen_background",
    "inject_spoof", "load_batch", "midprice", "midprice_velocity",
    "momentum_rate", "momentum_series", "parse_canonical_csv",
    "parse_canonical_jsonl", "parse_exchange_feed", "parse_stream",
    "parse_ts", "plan_spoof", "scaled_to_text", "sniff_format",
    "spoof_spec_from_json", "summary_dict", "text_to_scaled", "top_k",
    "trace_orders", "validate_stream", "write_canonical_csv",
    "write_canonical_jsonl", "write_momentum_csv", "write_summary_json",
    "zscore_baseline",
]
