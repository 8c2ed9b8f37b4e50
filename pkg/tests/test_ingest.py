"""Ingest: canonical CSV/JSONL, the exchange adapter, validation reports."""

import gzip
import io
import pathlib
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CFG
from lobmomentum.errors import ParseError, PrecisionError
from lobmomentum.events import Action, Event, OrderKind, Side
from lobmomentum.ingest import (CANONICAL_HEADER, ParseStats, StreamReport,
                                event_to_row, parse_canonical_csv,
                                parse_canonical_jsonl, parse_exchange_feed,
                                parse_stream, sniff_format, validate_stream,
                                write_canonical_csv, write_canonical_jsonl)

DATA = pathlib.Path(__file__).parent / "data"

TS0 = (9 * 3600 + 30 * 60) * 1_000_000          # 09:30:00


def E(us, oid, action, side, price, size, kind=OrderKind.LIMIT):
    return Event(TS0 + us, oid, action, side, kind, price, size)


class TestCanonicalCsv:
    ROWS = [
        "09:30:00.000010,o1,open,buy,limit,1.74,2.500",
        "09:30:00.000020,o2,open,sell,limit,1.75,0.001",
        "09:30:00.000030,o3,open,buy,market,,5.000",
        "09:30:00.000040,o1,cancel,buy,limit,1.74,2.500",
        "09:30:00.000050,o2,match,sell,limit,1.75,0.001",
    ]
    EXPECT = [
        E(10, "o1", Action.SUBMIT, Side.BUY, 174, 2500),
        E(20, "o2", Action.SUBMIT, Side.SELL, 175, 1),
        E(30, "o3", Action.SUBMIT, Side.BUY, None, 5000, OrderKind.MARKET),
        E(40, "o1", Action.CANCEL, Side.BUY, 174, 2500),
        E(50, "o2", Action.MATCH, Side.SELL, 175, 1),
    ]

    def test_parse_with_header(self):
        stats = ParseStats()
        got = list(parse_canonical_csv([CANONICAL_HEADER] + self.ROWS, CFG, stats))
        assert got == self.EXPECT
        assert stats.total_records == 5

    def test_parse_without_header(self):
        assert list(parse_canonical_csv(self.ROWS, CFG)) == self.EXPECT

    def test_blank_lines_skipped(self):
        src = [self.ROWS[0], "", "   \n"[:0], self.ROWS[1], ""]
        assert len(list(parse_canonical_csv(src, CFG))) == 2

    def test_none_spelled_out(self):
        row = "09:30:00.000030,o3,open,buy,market,none,5.000"
        [e] = parse_canonical_csv([row], CFG)
        assert e.price is None

    @pytest.mark.parametrize("row,line,column", [
        ("09:30:00,o1,open,buy,limit,1.74", 1, None),             # 6 fields
        ("nonsense,o1,open,buy,limit,1.74,1", 1, "ts"),
        ("09:30:00,,open,buy,limit,1.74,1", 1, "order_id"),
        ("09:30:00,o1,add,buy,limit,1.74,1", 1, "action"),
        ("09:30:00,o1,open,bid,limit,1.74,1", 1, "side"),
        ("09:30:00,o1,open,buy,stop,1.74,1", 1, "kind"),
        ("09:30:00,o1,open,buy,limit,abc,1", 1, "price"),
        ("09:30:00,o1,open,buy,limit,1.74,zz", 1, "size"),
        ("09:30:00,o1,open,buy,limit,1.74,0", 1, None),           # size > 0
        ("09:30:00,o1,cancel,buy,limit,,1", 1, None),             # price required
    ])
    def test_error_location(self, row, line, column):
        with pytest.raises(ParseError) as err:
            list(parse_canonical_csv([row], CFG))
        assert err.value.line == line
        assert err.value.column == column

    def test_error_line_counts_header(self):
        with pytest.raises(ParseError) as err:
            list(parse_canonical_csv([CANONICAL_HEADER, self.ROWS[0], "junk"], CFG))
        assert err.value.line == 3

    def test_off_grid_price_is_precision_error(self):
        with pytest.raises(PrecisionError) as err:
            list(parse_canonical_csv(["09:30:00,o1,open,buy,limit,1.741,1"], CFG))
        assert err.value.column == "price"
        assert "grid" in str(err.value)

    def test_off_grid_size_is_precision_error(self):
        with pytest.raises(PrecisionError):
            list(parse_canonical_csv(["09:30:00,o1,open,buy,limit,1.74,0.0005"], CFG))


class TestCanonicalJsonl:
    def test_numbers_and_strings_both_accepted(self):
        rows = [
            '{"ts":"09:30:00.000010","order_id":"o1","action":"open",'
            '"side":"buy","kind":"limit","price":"1.74","size":"2.5"}',
            '{"ts":"09:30:00.000020","order_id":"o2","action":"open",'
            '"side":"sell","kind":"limit","price":1.75,"size":3}',
            '{"ts":"09:30:00.000030","order_id":"o3","action":"open",'
            '"side":"buy","kind":"market","price":null,"size":"5"}',
        ]
        got = list(parse_canonical_jsonl(rows, CFG))
        assert got == [
            E(10, "o1", Action.SUBMIT, Side.BUY, 174, 2500),
            E(20, "o2", Action.SUBMIT, Side.SELL, 175, 3000),
            E(30, "o3", Action.SUBMIT, Side.BUY, None, 5000, OrderKind.MARKET),
        ]

    def test_missing_price_means_none(self):
        row = ('{"ts":"09:30:00","order_id":"o1","action":"open",'
               '"side":"buy","kind":"market","size":"1"}')
        [e] = parse_canonical_jsonl([row], CFG)
        assert e.price is None

    def test_missing_field_raises(self):
        row = '{"ts":"09:30:00","order_id":"o1","action":"open","side":"buy","size":"1"}'
        with pytest.raises(ParseError) as err:
            list(parse_canonical_jsonl([row], CFG))
        assert err.value.column == "kind"

    def test_bad_json_raises(self):
        with pytest.raises(ParseError, match="bad JSON"):
            list(parse_canonical_jsonl(["{not json"], CFG))

    def test_non_object_raises(self):
        with pytest.raises(ParseError, match="not a JSON object"):
            list(parse_canonical_jsonl(["[1,2,3]"], CFG))

    def test_float_off_grid_rejected(self):
        row = ('{"ts":"09:30:00","order_id":"o1","action":"open",'
               '"side":"buy","kind":"limit","price":1.7412,"size":1}')
        with pytest.raises(PrecisionError):
            list(parse_canonical_jsonl([row], CFG))


class TestExchangeAdapter:
    def test_golden_fixture(self):
        stats = ParseStats()
        got = list(parse_exchange_feed(DATA / "exchange_sample.jsonl", CFG, stats))
        assert got == [
            E(100_000, "a1", Action.SUBMIT, Side.BUY, 174, 2500),
            E(200_000, "a2", Action.SUBMIT, Side.SELL, 175, 3000),
            E(300_000, "a2", Action.MATCH, Side.SELL, 175, 1000),
            E(500_000, "a1", Action.CANCEL, Side.BUY, 174, 2500),
        ]
        assert stats.total_records == 10
        assert stats.skipped_by_type == {
            "received": 1, "done_filled": 1, "done_unpriced": 1,
            "done_empty": 1, "change": 1, "done_expired": 1,
        }

    def test_golden_serialization(self):
        events = list(parse_exchange_feed(DATA / "exchange_sample.jsonl", CFG))
        buf = io.StringIO()
        write_canonical_csv(events, buf, CFG)
        assert buf.getvalue() == (
            CANONICAL_HEADER + "\n"
            "09:30:00.100000,a1,open,buy,limit,1.74,2.500\n"
            "09:30:00.200000,a2,open,sell,limit,1.75,3.000\n"
            "09:30:00.300000,a2,match,sell,limit,1.75,1.000\n"
            "09:30:00.500000,a1,cancel,buy,limit,1.74,2.500\n")

    def test_missing_required_field_fatal(self):
        row = '{"type":"open","time":"09:30:00","order_id":"x","side":"buy","remaining_size":"1"}'
        with pytest.raises(ParseError) as err:
            list(parse_exchange_feed([row], CFG))
        assert err.value.column == "price"

    def test_report_carries_skips(self):
        stats = ParseStats()
        events = parse_exchange_feed(DATA / "exchange_sample.jsonl", CFG, stats)
        report = validate_stream(events, stats)
        assert report.total_records == 10
        assert report.parsed == 4
        assert sum(report.skipped_by_type.values()) == 6
        assert report.total_records == (report.parsed + report.parse_errors
                                        + sum(report.skipped_by_type.values()))
        assert report.action_histogram == {"open": 2, "match": 1, "cancel": 1}
        assert report.non_monotone_ts == 0
        assert report.replay_counters == {}
        assert report.to_json()["first_ts"] == "09:30:00.100000"
        assert report.to_json()["last_ts"] == "09:30:00.500000"


class TestFiles:
    def test_sniff_and_parse_stream(self, tmp_path):
        events = [E(10, "o1", Action.SUBMIT, Side.BUY, 174, 2500)]
        csv_p, jsonl_p = tmp_path / "a.csv", tmp_path / "a.jsonl"
        write_canonical_csv(events, csv_p, CFG)
        write_canonical_jsonl(events, jsonl_p, CFG)
        assert sniff_format(csv_p) == "csv"
        assert sniff_format(jsonl_p) == "jsonl"
        assert sniff_format(DATA / "exchange_sample.jsonl") == "exchange"
        assert list(parse_stream(csv_p, CFG, "auto")) == events
        assert list(parse_stream(jsonl_p, CFG, "auto")) == events
        with pytest.raises(ValueError, match="unknown stream format"):
            list(parse_stream(csv_p, CFG, "parquet"))

    def test_gzip_round_trip(self, tmp_path):
        events = [E(10, "o1", Action.SUBMIT, Side.BUY, 174, 2500),
                  E(20, "o1", Action.CANCEL, Side.BUY, 174, 2500)]
        gz = tmp_path / "a.csv.gz"
        write_canonical_csv(events, gz, CFG)
        with gzip.open(gz, "rt") as f:
            assert f.readline().strip() == CANONICAL_HEADER
        assert list(parse_stream(gz, CFG, "auto")) == events


class TestValidateStream:
    def test_non_monotone_and_counters(self):
        events = [
            E(20, "o1", Action.SUBMIT, Side.BUY, 174, 100),
            E(10, "o2", Action.SUBMIT, Side.SELL, 175, 100),   # ts goes back
            E(30, "zz", Action.CANCEL, Side.BUY, 170, 5),      # dangling
        ]
        report = validate_stream(events)
        assert report.non_monotone_ts == 1
        assert report.dangling_cancels == 1
        assert report.replay_counters == {"dangling_cancel": 1}
        assert report.parsed == report.total_records == 3

    def test_empty(self):
        report = validate_stream([])
        assert report.parsed == 0
        assert report.first_ts is None
        assert report.to_json()["last_ts"] is None


# ---------------------------------------------------------------------------
# round-trip property
# ---------------------------------------------------------------------------

_oid = st.text(alphabet="abcdefghij0123456789-", min_size=1, max_size=12)


@st.composite
def grid_events(draw):
    action = draw(st.sampled_from(list(Action)))
    side = draw(st.sampled_from(list(Side)))
    if action is Action.SUBMIT:
        kind = draw(st.sampled_from(list(OrderKind)))
    else:
        kind = OrderKind.LIMIT
    if kind is OrderKind.MARKET and draw(st.booleans()):
        price = None
    else:
        price = draw(st.integers(min_value=1, max_value=10_000_000))
    ts = draw(st.one_of(
        st.integers(min_value=0, max_value=86_399_999_999),
        st.integers(min_value=86_400_000_000, max_value=4 * 10 ** 15)))
    size = draw(st.integers(min_value=1, max_value=10 ** 9))
    return Event(ts, draw(_oid), action, side, kind, price, size)


@given(st.lists(grid_events(), max_size=30))
@settings(max_examples=120, deadline=None)
def test_serialize_parse_round_trip(events):
    buf = io.StringIO()
    write_canonical_csv(events, buf, CFG)
    buf.seek(0)
    assert list(parse_canonical_csv(buf, CFG)) == events

    buf = io.StringIO()
    write_canonical_jsonl(events, buf, CFG)
    buf.seek(0)
    assert list(parse_canonical_jsonl(buf, CFG)) == events


def test_event_to_row_formats():
    e = E(10, "o1", Action.SUBMIT, Side.BUY, 174, 2500)
    assert event_to_row(e, CFG) == (
        "09:30:00.000010", "o1", "open", "buy", "limit", "1.74", "2.500")
    m = E(20, "o2", Action.SUBMIT, Side.SELL, None, 5, OrderKind.MARKET)
    assert event_to_row(m, CFG)[5] == ""
