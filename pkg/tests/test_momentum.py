"""Momentum semantics: areas, clamping, velocity signs, aggregation.

The frozen numbers come from a worked example at quotes 1.74/1.75 with
alpha = 0.50 and 0.1 s buckets: the active area spans 1.24–2.25, and a
100,000-lot buy placed at 1.14 (passive shell) moves at +4.00 quote
currency per second, carrying +400,000 momentum.
"""

import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CFG, can, ev, mat, sub
from lobmomentum.book import Bucket, bucketize
from lobmomentum.events import AreaConfig, OrderKind, Quotes, Side
from lobmomentum.momentum import (Area, Split, active_band,
                                  bucket_net_momentum, classify_area,
                                  cumulative_series, effective_price,
                                  event_contributions, event_momentum,
                                  event_velocity, momentum_rate,
                                  momentum_series, velocity_bound)

Q = Quotes(174, 175)          # 1.74 / 1.75 in ticks


class TestClassifyArea:
    def test_active_band_endpoints(self):
        assert active_band(Q, 50) == (124, 225)       # 1.24 .. 2.25

    @pytest.mark.parametrize("price,area", [
        (124, Area.ACTIVE), (225, Area.ACTIVE), (174, Area.ACTIVE),
        (175, Area.ACTIVE), (150, Area.ACTIVE),
        (123, Area.PASSIVE), (74, Area.PASSIVE),      # lower shell [74, 124)
        (226, Area.PASSIVE), (275, Area.PASSIVE),     # upper shell (225, 275]
        (114, Area.PASSIVE),
        (73, Area.OUTSIDE), (276, Area.OUTSIDE), (1, Area.OUTSIDE),
        (10_000, Area.OUTSIDE),
    ])
    def test_boundaries_exact(self, price, area):
        assert classify_area(price, Q, 50) is area

    @given(st.integers(min_value=1, max_value=1000),
           st.integers(min_value=1, max_value=100))
    @settings(max_examples=300)
    def test_partition_property(self, price, alpha):
        q = Quotes(500, 505)
        area = classify_area(price, q, alpha)
        in_active = q.bid - alpha <= price <= q.ask + alpha
        in_passive = (q.bid - 2 * alpha <= price < q.bid - alpha
                      or q.ask + alpha < price <= q.ask + 2 * alpha)
        assert in_active + in_passive <= 1
        if in_active:
            assert area is Area.ACTIVE
        elif in_passive:
            assert area is Area.PASSIVE
        else:
            assert area is Area.OUTSIDE


class TestEffectivePrice:
    def test_resting_prices_unclamped(self):
        assert effective_price(sub(0, "a", "buy", 114, 1), Q) == 114
        assert effective_price(sub(0, "a", "sell", 230, 1), Q) == 230

    def test_crossing_limit_clamps_to_touch(self):
        assert effective_price(sub(0, "a", "buy", 200, 1), Q) == 175
        assert effective_price(sub(0, "a", "sell", 150, 1), Q) == 174

    def test_market_kind_acts_at_touch(self):
        e = ev(0, "a", "open", "buy", None, 1, OrderKind.MARKET)
        assert effective_price(e, Q) == 175
        e = ev(0, "a", "open", "sell", 300, 1, OrderKind.MARKET)
        assert effective_price(e, Q) == 174

    def test_match_acts_at_aggressor_touch(self):
        # resting sell matched -> buy aggressor at the ask
        assert effective_price(mat(0, "a", "sell", 175, 1), Q) == 175
        # resting buy matched -> sell aggressor at the bid
        assert effective_price(mat(0, "a", "buy", 174, 1), Q) == 174

    def test_cancel_clamps_too(self):
        assert effective_price(can(0, "a", "buy", 500, 1), Q) == 175


class TestWorkedExample:
    """Buy 100,000 lots at 1.14 under quotes 1.74/1.75."""

    SPOOF = sub(0, "spoof", "buy", 114, 100_000_000)   # 100k lots in units

    def test_classified_passive(self):
        assert classify_area(114, Q, CFG.alpha) is Area.PASSIVE

    def test_velocity_is_4_dollars_per_second(self):
        bound = velocity_bound(Side.BUY, Q, 2 * CFG.alpha)
        assert bound == 74                              # 0.74
        v = event_velocity(self.SPOOF, Q, bound, CFG.dt)
        assert v == Fraction(400)                       # ticks/s, exact
        assert float(v) * float(CFG.tick_size) == pytest.approx(4.00)

    def test_momentum_is_400k(self):
        m = event_momentum(self.SPOOF, Q, CFG, Area.PASSIVE)
        assert m == Fraction(40_000_000_000)            # units*ticks/s
        [(area, split, num)] = event_contributions(self.SPOOF, Q, CFG.alpha)
        assert (area, split) == (Area.PASSIVE, Split.LIMIT)
        assert num == 100_000_000 * 40
        assert momentum_rate(num, CFG) == Decimal("400000")

    def test_cancel_mirrors_exactly(self):
        cancel = can(1, "spoof", "buy", 114, 100_000_000)
        [(area, split, num)] = event_contributions(cancel, Q, CFG.alpha)
        assert (area, split) == (Area.PASSIVE, Split.LIMIT)
        assert num == -100_000_000 * 40
        assert momentum_rate(num, CFG) == Decimal("-400000")


class TestSigns:
    def test_buy_submit_positive_sell_negative(self):
        # unclamped active prices: buys measured up from the lower edge
        for price in (130, 174, 175):
            [(_, _, nb)] = event_contributions(sub(0, "b", "buy", price, 10),
                                               Q, 50)
            assert nb == 10 * (price - 124)
        # sells measured down from the upper edge
        for price in (174, 200, 220):
            [(_, _, ns)] = event_contributions(sub(0, "s", "sell", price, 10),
                                               Q, 50)
            assert ns == 10 * (price - 225)

    def test_submit_cancel_antisymmetry(self):
        rng = random.Random(5)
        for _ in range(200):
            side = "buy" if rng.getrandbits(1) else "sell"
            price = rng.randint(60, 290)
            size = rng.randint(1, 10 ** 6)
            s = event_contributions(sub(0, "x", side, price, size), Q, 50)
            c = event_contributions(can(1, "x", side, price, size), Q, 50)
            assert len(s) == len(c)
            for (a1, sp1, m1), (a2, sp2, m2) in zip(s, c):
                assert a1 is a2
                assert m1 + m2 == 0

    def test_outside_contributes_nothing(self):
        assert event_contributions(sub(0, "x", "buy", 73, 10), Q, 50) == []
        assert event_contributions(can(0, "x", "sell", 276, 10), Q, 50) == []


class TestSplits:
    def test_resting_submit_is_limit(self):
        [(_, split, _)] = event_contributions(sub(0, "x", "buy", 170, 1), Q, 50)
        assert split is Split.LIMIT

    def test_crossing_limit_is_market(self):
        [(_, split, num)] = event_contributions(sub(0, "x", "buy", 200, 1), Q, 50)
        assert split is Split.MARKET
        assert num == 175 - 124                     # clamped to the ask

    def test_market_kind_is_market(self):
        e = ev(0, "x", "open", "sell", None, 2, OrderKind.MARKET)
        [(area, split, num)] = event_contributions(e, Q, 50)
        assert split is Split.MARKET
        assert area is Area.ACTIVE
        assert num == 2 * (174 - 225)

    def test_cancel_is_limit_split(self):
        [(_, split, _)] = event_contributions(can(0, "x", "buy", 170, 1), Q, 50)
        assert split is Split.LIMIT


class TestMatches:
    def test_aggressor_buy_pushes_up(self):
        # resting sell hit by a buy: executes at the ask, market split
        [(area, split, num)] = event_contributions(mat(0, "m", "sell", 175, 7),
                                                   Q, 50)
        assert (area, split) == (Area.ACTIVE, Split.MARKET)
        assert num == 7 * (175 - 124)

    def test_aggressor_sell_pushes_down(self):
        [(area, split, num)] = event_contributions(mat(0, "m", "buy", 174, 7),
                                                   Q, 50)
        assert (area, split) == (Area.ACTIVE, Split.MARKET)
        assert num == 7 * (174 - 225)

    def test_match_both_sides_adds_resting_leg(self):
        legs = event_contributions(mat(0, "m", "sell", 175, 7), Q, 50,
                                   match_both_sides=True)
        assert len(legs) == 2
        (a1, s1, m1), (a2, s2, m2) = legs
        assert (a1, s1, m1) == (Area.ACTIVE, Split.MARKET, 7 * (175 - 124))
        # resting sell annihilated: cancel-style, limit split
        assert (a2, s2) == (Area.ACTIVE, Split.LIMIT)
        assert m2 == 7 * (225 - 175)

    def test_far_resting_leg_clamped(self):
        # resting sell below the bid (stale price) clamps to the bid
        legs = event_contributions(mat(0, "m", "sell", 100, 3), Q, 50,
                                   match_both_sides=True)
        assert legs[1][2] == 3 * (225 - 174)


class TestAggregation:
    def _bucket(self, events, end=100_000, ref=Q):
        return Bucket(end, tuple(events), ref)

    def test_decomposition_and_totals(self):
        b = self._bucket([
            sub(10, "a", "buy", 170, 5),                        # AL +230
            ev(20, "b", "open", "buy", None, 2, OrderKind.MARKET),  # AM +102
            sub(30, "c", "buy", 114, 4),                        # PL +160
            can(40, "a", "buy", 170, 5),                        # AL -230
        ])
        act = bucket_net_momentum(b, CFG, Area.ACTIVE)
        assert (act.m_limit, act.m_market) == (0, 2 * (175 - 124))
        assert act.m_total == act.m_limit + act.m_market
        pas = bucket_net_momentum(b, CFG, Area.PASSIVE)
        assert (pas.m_limit, pas.m_market, pas.m_total) == (160, 0, 160)

    def test_refless_bucket_raises(self):
        b = self._bucket([sub(10, "a", "buy", 170, 5)], ref=None)
        with pytest.raises(ValueError):
            bucket_net_momentum(b, CFG, Area.ACTIVE)

    def test_series_skips_refless(self):
        buckets = [
            self._bucket([sub(10, "a", "buy", 170, 5)], end=100_000, ref=None),
            self._bucket([sub(150_000, "b", "buy", 170, 5)], end=200_000),
        ]
        series = momentum_series(buckets, CFG, Area.ACTIVE)
        assert [s.bucket_end for s in series] == [200_000]

    def test_cumulative(self):
        buckets = bucketize([
            sub(10, "b1", "buy", 174, 1),
            sub(20, "s1", "sell", 175, 1),
            sub(150_000, "x", "buy", 170, 10),
            can(250_000, "x", "buy", 170, 10),
        ], CFG)
        series = momentum_series(buckets, CFG, Area.ACTIVE)
        cum = cumulative_series(series)
        assert [c.m_total for c in cum][-1] == cum[0].m_total  # round trip nets out
        assert cum[1].m_total == cum[0].m_total + series[1].m_total

    def test_momentum_rate_scaling(self):
        # units x ticks -> quote ccy x size/s: x0.01 x0.001 x(1s / 0.1s)
        assert momentum_rate(10_000, CFG) == Decimal("1")
        assert momentum_rate(-1, CFG) == Decimal("-0.0001")
        assert momentum_rate(10_000, AreaConfig(dt=1_000_000)) == Decimal("0.1")
