"""Core domain types: order-book events, quotes, and unit handling.

Everything downstream works on integers:

* prices are tick counts (`price_ticks = price / tick_size`),
* sizes are size-unit counts (`size_units = size / size_unit`),
* timestamps are integer microseconds (either since midnight, for
  time-of-day streams, or since the Unix epoch for full ISO timestamps).

Conversion from decimal text is exact; values that do not land on the
configured grid are precision errors, never silently rounded.
"""

from __future__ import annotations

import datetime as _dt
import enum
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction

from .errors import ParseError, PrecisionError

US_PER_SECOND = 1_000_000
US_PER_DAY = 86_400 * US_PER_SECOND


class Action(enum.Enum):
    """What an event does to the book."""

    SUBMIT = "open"
    CANCEL = "cancel"
    MATCH = "match"


class Side(enum.Enum):
    BUY = "buy"
    SELL = "sell"


class OrderKind(enum.Enum):
    LIMIT = "limit"
    MARKET = "market"


def flip(side: Side) -> Side:
    return Side.SELL if side is Side.BUY else Side.BUY


@dataclass(frozen=True, slots=True)
class Event:
    """One Level-3 record: an order entering, leaving, or trading.

    For ``MATCH`` rows, ``order_id`` and ``side`` refer to the *resting*
    (maker) order — the aggressor side is the flip of ``side``.  ``price``
    is ``None`` only for market-kind submissions, which carry no quote.
    """

    ts: int
    order_id: str
    action: Action
    side: Side
    kind: OrderKind
    price: int | None
    size: int

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValueError(f"event size must be positive, got {self.size}")
        if self.ts < 0:
            raise ValueError(f"event ts must be non-negative, got {self.ts}")
        if self.price is None:
            if not (self.action is Action.SUBMIT and self.kind is OrderKind.MARKET):
                raise ValueError("only market submissions may omit a price")
        elif self.price <= 0:
            raise ValueError(f"event price must be positive, got {self.price}")


@dataclass(frozen=True, slots=True)
class Quotes:
    """Best bid / best ask, in ticks.  A valid pair is strictly uncrossed."""

    bid: int
    ask: int

    def __post_init__(self) -> None:
        if self.bid >= self.ask:
            raise ValueError(f"crossed quotes: bid {self.bid} >= ask {self.ask}")


def midprice(q: Quotes) -> Fraction:
    """Exact mid between the best quotes, in ticks (may be half-integer)."""
    return Fraction(q.bid + q.ask, 2)


def midprice_velocity(q0: Quotes, q1: Quotes, dt_us: int) -> Fraction:
    """Mid drift between two quote snapshots, in ticks per second."""
    if dt_us <= 0:
        raise ValueError(f"dt_us must be positive, got {dt_us}")
    return (midprice(q1) - midprice(q0)) * US_PER_SECOND / dt_us


@dataclass(frozen=True)
class AreaConfig:
    """Knobs shared by the whole pipeline.

    ``alpha`` is the active-area half-width beyond the touch, in ticks;
    the passive shell extends a further ``alpha`` beyond that.  ``dt`` is
    the sampling-bucket width in microseconds.
    """

    alpha: int = 50
    dt: int = 100_000
    tick_size: Decimal = Decimal("0.01")
    size_unit: Decimal = Decimal("0.001")

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive ticks, got {self.alpha}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive microseconds, got {self.dt}")
        for name in ("tick_size", "size_unit"):
            unit = getattr(self, name)
            if not isinstance(unit, Decimal) or unit <= 0:
                raise ValueError(f"{name} must be a positive Decimal, got {unit!r}")

    @property
    def price_decimals(self) -> int | None:
        return grid_decimals(self.tick_size)

    @property
    def size_decimals(self) -> int | None:
        return grid_decimals(self.size_unit)


# ---------------------------------------------------------------------------
# decimal-text <-> integer grid conversion
# ---------------------------------------------------------------------------

def grid_decimals(unit: Decimal) -> int | None:
    """Number of decimal places for a power-of-ten unit, else None.

    ``Decimal("0.01") -> 2``; non-power-of-ten units (e.g. 0.25) return
    None and take the slower exact-division path.
    """
    sign, digits, exp = unit.normalize().as_tuple()
    if sign == 0 and digits == (1,) and isinstance(exp, int) and exp <= 0:
        return -exp
    return None


def text_to_scaled(text: str, unit: Decimal, ndec: int | None = None) -> int:
    """Parse decimal text into integer grid units, exactly.

    Raises ValueError for unparseable text and PrecisionError for values
    off the grid.  ``ndec`` is the precomputed ``grid_decimals(unit)``.
    """
    text = text.strip()
    if not text:
        raise ParseError("empty numeric field")
    if ndec is None:
        ndec = grid_decimals(unit)
    if ndec is not None:
        neg = text.startswith("-")
        body = text[1:] if neg or text.startswith("+") else text
        whole, dot, frac = body.partition(".")
        if not (whole or frac) or not (whole or "0").isdigit() or not (frac or "0").isdigit():
            raise ParseError(f"not a decimal number: {text!r}")
        if len(frac) > ndec and frac[ndec:].strip("0"):
            raise PrecisionError(f"{text!r} is finer than the {unit} grid")
        frac = frac[:ndec].ljust(ndec, "0")
        value = int((whole or "0") + frac) if ndec else int(whole or "0")
        return -value if neg else value
    try:
        d = Decimal(text)
    except InvalidOperation as exc:
        raise ParseError(f"not a decimal number: {text!r}") from exc
    if not d.is_finite():
        raise ParseError(f"not a decimal number: {text!r}")
    q = d / unit
    if q != q.to_integral_value():
        raise PrecisionError(f"{text!r} is not a multiple of {unit}")
    return int(q)


def scaled_to_text(value: int, unit: Decimal, ndec: int | None = None) -> str:
    """Format integer grid units back to canonical decimal text."""
    if ndec is None:
        ndec = grid_decimals(unit)
    if ndec is None:
        return str((Decimal(value) * unit).normalize())
    if ndec == 0:
        return str(value)
    neg = value < 0
    digits = str(-value if neg else value).rjust(ndec + 1, "0")
    out = f"{digits[:-ndec]}.{digits[-ndec:]}"
    return f"-{out}" if neg else out


# ---------------------------------------------------------------------------
# timestamps
# ---------------------------------------------------------------------------

_EPOCH = _dt.datetime(1970, 1, 1, tzinfo=_dt.timezone.utc)


def parse_ts(text: str) -> int:
    """Parse a timestamp into integer microseconds.

    Two spellings are accepted: bare time-of-day ``HH:MM:SS[.ffffff]``
    (microseconds since midnight) and ISO-8601 datetimes (microseconds
    since the Unix epoch, naive values read as UTC).  Short fractional
    parts are right-padded, so ``18:36:13.59`` means ``.590000``.
    """
    text = text.strip()
    if len(text) >= 8 and text[2] == ":" and text[5] == ":" and text[:2].isdigit():
        hh, mm, rest = text[:2], text[3:5], text[6:]
        ss, dot, frac = rest.partition(".")
        if (len(ss) == 2 and ss.isdigit() and mm.isdigit()
                and (not dot or (frac.isdigit() and len(frac) <= 6))):
            h, m, s = int(hh), int(mm), int(ss)
            if h < 24 and m < 60 and s < 60:
                us = int(frac.ljust(6, "0")) if frac else 0
                return ((h * 3600 + m * 60 + s) * US_PER_SECOND) + us
        raise ValueError(f"bad time-of-day timestamp: {text!r}")
    iso = text.replace("Z", "+00:00") if text.endswith("Z") else text
    iso = _pad_iso_fraction(iso)
    try:
        stamp = _dt.datetime.fromisoformat(iso)
    except ValueError as exc:
        raise ValueError(f"bad ISO-8601 timestamp: {text!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=_dt.timezone.utc)
    delta = stamp - _EPOCH
    return delta.days * US_PER_DAY + delta.seconds * US_PER_SECOND + delta.microseconds


def _pad_iso_fraction(iso: str) -> str:
    # Python 3.10's fromisoformat insists on 3 or 6 fractional digits;
    # normalize anything shorter (e.g. ".59") to 6.
    dot = iso.rfind(".")
    if dot == -1:
        return iso
    end = dot + 1
    while end < len(iso) and iso[end].isdigit():
        end += 1
    ndigits = end - dot - 1
    if 0 < ndigits < 6:
        return iso[:end] + "0" * (6 - ndigits) + iso[end:]
    return iso


def format_ts(us: int) -> str:
    """Inverse of :func:`parse_ts`, choosing the spelling by magnitude."""
    if 0 <= us < US_PER_DAY:
        s, frac = divmod(us, US_PER_SECOND)
        h, rem = divmod(s, 3600)
        m, s = divmod(rem, 60)
        return f"{h:02d}:{m:02d}:{s:02d}.{frac:06d}"
    stamp = _EPOCH + _dt.timedelta(microseconds=us)
    return stamp.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
