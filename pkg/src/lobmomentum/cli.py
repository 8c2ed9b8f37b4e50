"""Command-line interface.

Exit codes: 0 success, 1 configuration/usage problems, 2 malformed
input streams, 3 contract violations detected while processing (unsorted
data, impossible book states under --strict semantics, spans too large).

A JSON config file (``--config``) supplies per-subcommand defaults,
e.g. ``{"analyze": {"alpha": "0.5"}}``; explicit flags win over the
file, the file wins over built-ins.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from decimal import Decimal

import click

from .detect import detect_from_result, zscore_baseline
from .errors import ConfigError, ContractError, ParseError
from .events import (AreaConfig, Quotes, format_ts, parse_ts, scaled_to_text,
                     text_to_scaled)
from .ingest import (ParseStats, parse_stream, validate_stream,
                     write_canonical_csv, write_canonical_jsonl)
from .momentum import Action, Area
from .pipeline import (analyze_batch, load_batch, write_momentum_csv,
                       write_summary_json)
from .synth import (BackgroundParams, SizeModel, gen_background, inject_spoof,
                    spoof_spec_from_json)

_MICRO = Decimal("0.000001")

TRACED_HEADER = "timestamp,price,order_type,side,size"
DEVIATIONS_HEADER = "rank,bucket_end,net_momentum,deviation"
ZSCORE_HEADER = "rank,timestamp,order_id,side,price,size,z"


def _decimal_scaled(text: str, unit: Decimal, what: str) -> int:
    try:
        v = text_to_scaled(str(text), unit)
    except (ValueError, ParseError) as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from exc
    if v <= 0:
        raise ConfigError(f"{what} must be positive, got {text!r}")
    return v


def _build_cfg(alpha: str, dt: str, tick_size: str, size_unit: str) -> AreaConfig:
    try:
        tick = Decimal(tick_size)
        unit = Decimal(size_unit)
    except ArithmeticError as exc:
        raise ConfigError(f"bad tick/size unit: {exc}") from exc
    cfg = AreaConfig(
        alpha=_decimal_scaled(alpha, tick, "alpha"),
        dt=_decimal_scaled(dt, _MICRO, "dt"),
        tick_size=tick,
        size_unit=unit,
    )
    return cfg


def _parse_quotes(text: str | None, cfg: AreaConfig) -> Quotes | None:
    if text is None:
        return None
    bid_t, sep, ask_t = text.partition(":")
    if not sep:
        raise ConfigError(f"quotes must look like bid:ask, got {text!r}")
    q = Quotes(_decimal_scaled(bid_t, cfg.tick_size, "bid"),
               _decimal_scaled(ask_t, cfg.tick_size, "ask"))
    return q


def _opt_group(*options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


cfg_options = _opt_group(
    click.option("--alpha", default="0.5", show_default=True,
                 help="Active-area half-width beyond the touch, quote currency."),
    click.option("--dt", default="0.1", show_default=True,
                 help="Bucket width in seconds."),
    click.option("--tick-size", default="0.01", show_default=True,
                 help="Price grid step."),
    click.option("--size-unit", default="0.001", show_default=True,
                 help="Size grid step."),
)

input_options = _opt_group(
    click.option("--format", "fmt",
                 type=click.Choice(["auto", "csv", "jsonl", "exchange"]),
                 default="auto", show_default=True,
                 help="Input stream format."),
    click.option("--initial-quotes", default=None, metavar="BID:ASK",
                 help="Reference quotes for the first bucket when the "
                      "stream starts without a two-sided book."),
    click.option("--match-both-sides", is_flag=True,
                 help="Count a resting-side leg for every match as well."),
)

outdir_option = click.option(
    "-o", "--outdir", envvar="LOBMOMENTUM_OUT", default=".",
    show_default=True, type=click.Path(file_okay=False),
    help="Output directory (env: LOBMOMENTUM_OUT).")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file of per-subcommand defaults.")
@click.option("-v", "--verbose", is_flag=True, help="Log at INFO level.")
@click.pass_context
def cli(ctx: click.Context, config: str | None, verbose: bool) -> None:
    """Order-flow momentum analytics over level-3 book event streams."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if config:
        try:
            with open(config, encoding="utf-8") as f:
                defaults = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config!r}: {exc}") from exc
        if not isinstance(defaults, dict):
            raise ConfigError("config file must hold a JSON object")
        ctx.default_map = defaults


def _out(outdir: str, name: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    return os.path.join(outdir, name)


def _analysis(stream, cfg, fmt, initial_quotes, match_both_sides):
    stats = ParseStats()
    batch = load_batch(stream, cfg, fmt, stats)
    result = analyze_batch(batch, cfg,
                           initial_quotes=_parse_quotes(initial_quotes, cfg),
                           match_both=match_both_sides, stats=stats)
    return batch, result


@cli.command()
@click.argument("stream", type=click.Path(exists=True, dir_okay=False))
@cfg_options
@input_options
@click.option("--plot", is_flag=True, help="Also write SVG momentum plots.")
@outdir_option
def analyze(stream, alpha, dt, tick_size, size_unit, fmt, initial_quotes,
            match_both_sides, plot, outdir):
    """Per-bucket momentum series -> momentum.csv + summary.json."""
    cfg = _build_cfg(alpha, dt, tick_size, size_unit)
    _, result = _analysis(stream, cfg, fmt, initial_quotes, match_both_sides)
    mom_path = _out(outdir, "momentum.csv")
    write_momentum_csv(result, mom_path)
    sum_path = _out(outdir, "summary.json")
    write_summary_json(result, sum_path)
    click.echo(f"analyzed {result.n_events} events into "
               f"{result.n_buckets} buckets")
    click.echo(f"wrote {mom_path}")
    click.echo(f"wrote {sum_path}")
    if plot:
        from .plotting import momentum_svg
        for area in (Area.ACTIVE, Area.PASSIVE):
            path = _out(outdir, f"momentum_{area.value}.svg")
            with open(path, "w", encoding="utf-8") as f:
                f.write(momentum_svg(result, area, cfg))
            click.echo(f"wrote {path}")


detect_options = _opt_group(
    click.option("--area", type=click.Choice(["passive", "active"]),
                 default="passive", show_default=True,
                 help="Which area's momentum to scan."),
    click.option("-k", "--k", default=10, show_default=True,
                 help="Report at most this many anomalous buckets."),
    click.option("--threshold", default=5.0, show_default=True,
                 help="Minimum |deviation| to flag."),
    click.option("--window", default=None, type=int,
                 help="Trailing rolling window (buckets) for the "
                      "deviation statistics; whole series by default."),
    click.option("--signed", is_flag=True,
                 help="Rank by signed deviation instead of magnitude."),
)


def _write_detect_outputs(report, cfg, outdir):
    paths = []
    rep_path = _out(outdir, "report.json")
    with open(rep_path, "w", encoding="utf-8") as f:
        json.dump(report.to_json(cfg), f, indent=2)
        f.write("\n")
    paths.append(rep_path)

    dev_path = _out(outdir, "deviations.csv")
    with open(dev_path, "w", encoding="utf-8") as f:
        f.write(DEVIATIONS_HEADER + "\n")
        from .momentum import momentum_rate
        for rank, s in enumerate(report.anomalies, start=1):
            f.write(f"{rank},{format_ts(s.bucket_end)},"
                    f"{momentum_rate(s.net_momentum, cfg)},"
                    f"{s.deviation:.6f}\n")
    paths.append(dev_path)

    traced_path = _out(outdir, "traced.csv")
    with open(traced_path, "w", encoding="utf-8") as f:
        f.write(TRACED_HEADER + "\n")
        for s in report.anomalies:
            for t in report.traces.get(s.bucket_end, []):
                e = t.event
                order_type = (e.kind.value if e.action is Action.SUBMIT
                              else e.action.value)
                price = ("" if e.price is None else
                         scaled_to_text(e.price, cfg.tick_size,
                                        cfg.price_decimals))
                f.write(f"{format_ts(e.ts)},{price},{order_type},"
                        f"{e.side.value},"
                        f"{scaled_to_text(e.size, cfg.size_unit, cfg.size_decimals)}\n")
    paths.append(traced_path)
    return paths


@cli.command()
@click.argument("stream", type=click.Path(exists=True, dir_okay=False))
@cfg_options
@input_options
@detect_options
@outdir_option
def detect(stream, alpha, dt, tick_size, size_unit, fmt, initial_quotes,
           match_both_sides, area, k, threshold, window, signed, outdir):
    """Flag momentum anomalies -> report.json, deviations.csv, traced.csv."""
    cfg = _build_cfg(alpha, dt, tick_size, size_unit)
    batch, result = _analysis(stream, cfg, fmt, initial_quotes,
                              match_both_sides)
    report = detect_from_result(result, batch, area=Area(area), k=k,
                                threshold=threshold, signed=signed,
                                window=window)
    paths = _write_detect_outputs(report, cfg, outdir)
    click.echo(f"{len(report.anomalies)} anomalous buckets "
               f"(|deviation| >= {threshold:g}) out of {len(report.scores)}")
    for c in report.clusters:
        if c.label != "unpaired":
            levels = ", ".join(
                scaled_to_text(p, cfg.tick_size, cfg.price_decimals)
                for p in c.price_levels)
            click.echo(f"  {c.label}: size "
                       f"{scaled_to_text(c.size, cfg.size_unit, cfg.size_decimals)}"
                       f" at {levels}")
    for p in paths:
        click.echo(f"wrote {p}")


@cli.command()
@click.argument("stream", type=click.Path(exists=True, dir_okay=False))
@cfg_options
@input_options
@detect_options
@outdir_option
def compare(stream, alpha, dt, tick_size, size_unit, fmt, initial_quotes,
            match_both_sides, area, k, threshold, window, signed, outdir):
    """Momentum detector vs size-only Z-score baseline, side by side."""
    cfg = _build_cfg(alpha, dt, tick_size, size_unit)
    batch, result = _analysis(stream, cfg, fmt, initial_quotes,
                              match_both_sides)
    report = detect_from_result(result, batch, area=Area(area), k=k,
                                threshold=threshold, signed=signed,
                                window=window)
    warnings: list[str] = []
    zranked = zscore_baseline((batch.event_at(i) for i in range(len(batch))),
                              k=k, warnings=warnings)
    paths = _write_detect_outputs(report, cfg, outdir)

    z_path = _out(outdir, "zscore.csv")
    with open(z_path, "w", encoding="utf-8") as f:
        f.write(ZSCORE_HEADER + "\n")
        for rank, r in enumerate(zranked, start=1):
            e = r.event
            price = ("" if e.price is None else
                     scaled_to_text(e.price, cfg.tick_size, cfg.price_decimals))
            f.write(f"{rank},{format_ts(e.ts)},{e.order_id},{e.side.value},"
                    f"{price},"
                    f"{scaled_to_text(e.size, cfg.size_unit, cfg.size_decimals)},"
                    f"{r.z:.6f}\n")
    paths.append(z_path)

    momentum_ids = [
        {"bucket_end": format_ts(s.bucket_end),
         "deviation": round(s.deviation, 6),
         "top_order_ids": [t.event.order_id
                           for t in report.traces.get(s.bucket_end, [])[:5]]}
        for s in report.anomalies]
    z_ids = [{"rank": i + 1, "order_id": r.event.order_id,
              "z": round(r.z, 6)} for i, r in enumerate(zranked)]
    m_set = {oid for a in momentum_ids for oid in a["top_order_ids"]}
    overlap = sorted(m_set & {r.event.order_id for r in zranked})
    cmp_path = _out(outdir, "compare.json")
    with open(cmp_path, "w", encoding="utf-8") as f:
        json.dump({"momentum_anomalies": momentum_ids,
                   "zscore_top": z_ids,
                   "overlap_order_ids": overlap,
                   "warnings": report.warnings + warnings}, f, indent=2)
        f.write("\n")
    paths.append(cmp_path)

    click.echo(f"momentum: {len(report.anomalies)} anomalies; "
               f"zscore: top {len(zranked)}; overlap: {len(overlap)} ids")
    for p in paths:
        click.echo(f"wrote {p}")


@cli.command()
@click.argument("stream", type=click.Path(exists=True, dir_okay=False))
@cfg_options
@click.option("--format", "fmt",
              type=click.Choice(["auto", "csv", "jsonl", "exchange"]),
              default="auto", show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Re-emit the stream in canonical form here "
                   "(.jsonl for JSONL, else CSV).")
@click.option("--report", "report_path", default=None,
              type=click.Path(dir_okay=False),
              help="Write the report JSON here instead of stdout.")
def validate(stream, alpha, dt, tick_size, size_unit, fmt, out, report_path):
    """Strict single-pass validation through the exact line parser."""
    cfg = _build_cfg(alpha, dt, tick_size, size_unit)
    stats = ParseStats()
    events = list(parse_stream(stream, cfg, fmt, stats))
    report = validate_stream(events, stats)
    if out:
        if out.endswith(".jsonl") or out.endswith(".jsonl.gz"):
            write_canonical_jsonl(events, out, cfg)
        else:
            write_canonical_csv(events, out, cfg)
        click.echo(f"wrote {out}", err=True)
    text = json.dumps(report.to_json(), indent=2)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        click.echo(f"wrote {report_path}", err=True)
    else:
        click.echo(text)


@cli.command()
@cfg_options
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--duration", default="60", show_default=True,
              help="Stream length in seconds.")
@click.option("--rate", default=50.0, show_default=True,
              help="Approximate events per second.")
@click.option("--base-quotes", default="1.74:1.75", show_default=True,
              metavar="BID:ASK")
@click.option("--active-fraction", default=0.97, show_default=True)
@click.option("--cancel-fraction", default=0.986, show_default=True)
@click.option("--outside-share", default=0.25, show_default=True,
              help="Share of non-active placements landing outside "
                   "both areas.")
@click.option("--lifetime", default=2.0, show_default=True,
              help="Mean order resting time, seconds.")
@click.option("--move-rate", default=0.2, show_default=True,
              help="Quote random-walk steps per second.")
@click.option("--size-median", default="2", show_default=True,
              help="Median order size, natural units.")
@click.option("--size-sigma", default=1.0, show_default=True)
@click.option("--size-clip", default="150", show_default=True,
              help="Maximum order size, natural units.")
@click.option("--start", default="10:00:00", show_default=True,
              help="Timestamp of the first event.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def generate(alpha, dt, tick_size, size_unit, seed, duration, rate,
             base_quotes, active_fraction, cancel_fraction, outside_share,
             lifetime, move_rate, size_median, size_sigma, size_clip, start,
             out):
    """Seeded clean background stream -> canonical CSV/JSONL."""
    cfg = _build_cfg(alpha, dt, tick_size, size_unit)
    quotes = _parse_quotes(base_quotes, cfg)
    try:
        start_us = parse_ts(start)
    except ValueError as exc:
        raise ConfigError(f"bad --start: {exc}") from exc
    try:
        params = BackgroundParams(
            seed=seed,
            duration_us=_decimal_scaled(duration, _MICRO, "duration"),
            event_rate=rate,
            base_quotes=quotes,
            alpha=cfg.alpha,
            active_fraction=active_fraction,
            cancel_fraction=cancel_fraction,
            outside_share=outside_share,
            mean_lifetime_us=round(lifetime * 1_000_000),
            quote_move_rate=move_rate,
            size_model=SizeModel(
                median_units=_decimal_scaled(size_median, cfg.size_unit,
                                             "size-median"),
                sigma=size_sigma,
                clip_units=_decimal_scaled(size_clip, cfg.size_unit,
                                           "size-clip")),
            start_us=start_us,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    stream = gen_background(params)
    if out.endswith(".jsonl") or out.endswith(".jsonl.gz"):
        n = write_canonical_jsonl(stream, out, cfg)
    else:
        n = write_canonical_csv(stream, out, cfg)
    click.echo(f"wrote {n} events to {out}")


@cli.command()
@click.argument("stream", type=click.Path(exists=True, dir_okay=False))
@cfg_options
@click.option("--format", "fmt",
              type=click.Choice(["auto", "csv", "jsonl", "exchange"]),
              default="auto", show_default=True)
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON spoof description (see docs).")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--labels", "labels_path", default=None,
              type=click.Path(dir_okay=False),
              help="Ground-truth label JSON (default: <out>.labels.json).")
def inject(stream, alpha, dt, tick_size, size_unit, fmt, spec_path, out,
           labels_path):
    """Splice a synthetic spoof into a stream, with ground-truth labels."""
    cfg = _build_cfg(alpha, dt, tick_size, size_unit)
    try:
        with open(spec_path, encoding="utf-8") as f:
            spec_obj = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad spoof spec: {exc}") from exc
    spec = spoof_spec_from_json(spec_obj, cfg)
    events = list(parse_stream(stream, cfg, fmt))
    merged, labels = inject_spoof(events, spec, cfg)
    if out.endswith(".jsonl") or out.endswith(".jsonl.gz"):
        write_canonical_jsonl(merged, out, cfg)
    else:
        write_canonical_csv(merged, out, cfg)
    labels_path = labels_path or out + ".labels.json"
    with open(labels_path, "w", encoding="utf-8") as f:
        json.dump(labels, f, indent=2)
        f.write("\n")
    for w in labels["warnings"]:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"injected {len(labels['order_ids'])} orders "
               f"({len(merged) - len(events)} events) into {out}")
    click.echo(f"wrote {labels_path}")


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, standalone_mode=False)
        return 0 if rv is None else int(rv)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        return 2
    except ContractError as exc:
        click.echo(f"contract violation: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
