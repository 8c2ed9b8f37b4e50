"""Hot kernels: reference-quote replay and momentum accumulation.

Both kernels exist twice with identical semantics:

* a numba ``@njit`` implementation (sequential loops, manual heaps), and
* a fallback — vectorized numpy for momentum, plain Python + ``heapq``
  for the inherently sequential replay.

The backend is chosen once at import from ``LOBMOMENTUM_NUMBA``:

* ``auto`` (default) — numba when importable, fallback otherwise
* ``off`` / ``0`` / ``numpy`` — force the fallback
* ``require`` / ``1`` — fail loudly if numba is unavailable

``benchmarks/bench_kernels.py`` times one against the other; the test
suite asserts they agree bit-for-bit on random streams.

Data layout is the integer coding of :mod:`lobmomentum.arrays`; bucket
indices ``bi`` are precomputed by the caller.  Replay output per bucket
``j`` is the book's best pair *after the last event at or before that
bucket's end* (``-1`` when one-sided or crossed), plus the first crossing
pair ever observed (for warm-up reference derivation) and lenient-replay
counters in the order: duplicate_submit, dangling_cancel, oversize_cancel,
cancel_mismatch, dangling_match, oversize_match.
"""

from __future__ import annotations

import heapq
import os

import numpy as np

_EMPTY = np.int64(2**62)

_flag = os.environ.get("LOBMOMENTUM_NUMBA", "auto").strip().lower()
if _flag in ("0", "off", "numpy", "false"):
    HAVE_NUMBA = False
    USE_NUMBA = False
else:
    try:
        from numba import njit, types
        from numba.typed import Dict as _NumbaDict
        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False
    if _flag in ("1", "require", "jit"):
        if not HAVE_NUMBA:
            raise ImportError("LOBMOMENTUM_NUMBA=require but numba is not importable")
        USE_NUMBA = True
    else:
        USE_NUMBA = HAVE_NUMBA

COUNTER_NAMES = ("duplicate_submit", "dangling_cancel", "oversize_cancel",
                 "cancel_mismatch", "dangling_match", "oversize_match")


# ---------------------------------------------------------------------------
# replay: fallback (python + heapq)
# ---------------------------------------------------------------------------

def _replay_py(bi, action, side, kind, price, size, oid, n_orders, nb):
    n = len(bi)
    end_bid = np.full(nb, -1, dtype=np.int64)
    end_ask = np.full(nb, -1, dtype=np.int64)
    rest_price = np.zeros(n_orders, dtype=np.int64)
    rest_side = np.zeros(n_orders, dtype=np.int8)
    rest_rem = np.zeros(n_orders, dtype=np.int64)
    heaps = ([], [])                    # encoded: buy stores -price, sell +price
    counts = ({}, {})                   # encoded price -> open orders at level
    counters = np.zeros(6, dtype=np.int64)
    cap_bucket = cap_bid = cap_ask = -1
    captured = False

    def best(s):
        heap, count = heaps[s], counts[s]
        while heap and count.get(heap[0], 0) <= 0:
            heapq.heappop(heap)
        return heap[0] if heap else _EMPTY

    def record(j):
        bb, aa = best(0), best(1)
        if bb != _EMPTY and aa != _EMPTY and -bb < aa:
            end_bid[j] = -bb
            end_ask[j] = aa

    def drop(o):
        s = rest_side[o]
        key = -rest_price[o] if s == 0 else rest_price[o]
        counts[s][key] -= 1
        rest_rem[o] = 0

    cur = 0
    for i in range(n):
        b = bi[i]
        while cur < b:
            record(cur)
            cur += 1
        act = action[i]
        o = oid[i]
        if act == 0:
            if kind[i] != 1 and price[i] >= 0:
                if rest_rem[o] > 0:
                    counters[0] += 1
                else:
                    s = side[i]
                    rest_price[o] = price[i]
                    rest_side[o] = s
                    rest_rem[o] = size[i]
                    key = -price[i] if s == 0 else price[i]
                    heapq.heappush(heaps[s], key)
                    counts[s][key] = counts[s].get(key, 0) + 1
        elif act == 1:
            if rest_rem[o] <= 0:
                counters[1] += 1
            else:
                if price[i] >= 0 and (price[i] != rest_price[o] or side[i] != rest_side[o]):
                    counters[3] += 1
                if size[i] >= rest_rem[o]:
                    if size[i] > rest_rem[o]:
                        counters[2] += 1
                    drop(o)
                else:
                    rest_rem[o] -= size[i]
        else:
            if rest_rem[o] <= 0:
                counters[4] += 1
            else:
                if size[i] >= rest_rem[o]:
                    if size[i] > rest_rem[o]:
                        counters[5] += 1
                    drop(o)
                else:
                    rest_rem[o] -= size[i]
        if not captured:
            bb, aa = best(0), best(1)
            if bb != _EMPTY and aa != _EMPTY and -bb < aa:
                captured = True
                cap_bucket, cap_bid, cap_ask = b, -bb, aa
    while cur < nb:
        record(cur)
        cur += 1
    return end_bid, end_ask, np.int64(cap_bucket), np.int64(cap_bid), \
        np.int64(cap_ask), counters


# ---------------------------------------------------------------------------
# momentum: fallback (vectorized numpy)
# ---------------------------------------------------------------------------

def _momentum_np(bi, action, side, kind, price, size,
                 ref_bid, ref_ask, ref_valid, alpha, match_both):
    nb = len(ref_bid)
    m = np.zeros((nb, 4), dtype=np.int64)
    area_counts = np.zeros(4, dtype=np.int64)
    if len(bi) == 0:
        return m, area_counts
    alpha = np.int64(alpha)
    a2 = np.int64(2) * alpha
    valid = ref_valid[bi]
    rb = ref_bid[bi]
    ra = ref_ask[bi]
    act = action.astype(np.int64)
    s = side.astype(np.int64)
    is_match = act == 2
    es = np.where(is_match, 1 - s, s)      # side whose particle acts
    forced = is_match | (kind == 1) | (price < 0)
    to_ask = (es == 0) & (forced | (price > ra))
    to_bid = (es == 1) & (forced | (price < rb))
    p_star = np.where(to_ask, ra, np.where(to_bid, rb, price))

    active = (p_star >= rb - alpha) & (p_star <= ra + alpha)
    passive = ~active & (
        ((p_star >= rb - a2) & (p_star < rb - alpha))
        | ((p_star > ra + alpha) & (p_star <= ra + a2)))
    outside = ~(active | passive)
    area_counts[0] = np.count_nonzero(active & valid)
    area_counts[1] = np.count_nonzero(passive & valid)
    area_counts[2] = np.count_nonzero(outside & valid)
    area_counts[3] = np.count_nonzero(~valid)

    a_eff = np.where(active, alpha, a2)
    bound = np.where(es == 0, rb - a_eff, ra + a_eff)
    sign = np.where(act == 1, np.int64(-1), np.int64(1))
    contrib = size * sign * (p_star - bound)
    market_split = is_match | (kind == 1) | ((act == 0) & (p_star != price))
    col = np.where(active, 0, 2) + market_split
    use = valid & ~outside
    np.add.at(m, (bi[use], col[use]), contrib[use])

    if match_both:
        p_rest = np.where((s == 0) & (price > ra), ra,
                          np.where((s == 1) & (price < rb), rb, price))
        active_r = (p_rest >= rb - alpha) & (p_rest <= ra + alpha)
        passive_r = ~active_r & (
            ((p_rest >= rb - a2) & (p_rest < rb - alpha))
            | ((p_rest > ra + alpha) & (p_rest <= ra + a2)))
        a_eff_r = np.where(active_r, alpha, a2)
        bound_r = np.where(s == 0, rb - a_eff_r, ra + a_eff_r)
        contrib_r = size * (bound_r - p_rest)
        col_r = np.where(active_r, 0, 2)
        use_r = valid & is_match & (price >= 0) & (active_r | passive_r)
        np.add.at(m, (bi[use_r], col_r[use_r]), contrib_r[use_r])
    return m, area_counts


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _heap_push(heap, n, v):
        heap[n] = v
        i = n
        while i > 0:
            parent = (i - 1) >> 1
            if heap[parent] <= heap[i]:
                break
            heap[parent], heap[i] = heap[i], heap[parent]
            i = parent
        return n + 1

    @njit(cache=True)
    def _heap_pop(heap, n):
        n -= 1
        heap[0] = heap[n]
        i = 0
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            child = left
            right = left + 1
            if right < n and heap[right] < heap[left]:
                child = right
            if heap[i] <= heap[child]:
                break
            heap[i], heap[child] = heap[child], heap[i]
            i = child
        return n

    @njit(cache=True)
    def _best_jit(heap, n, count):
        while n > 0:
            v = heap[0]
            if v in count and count[v] > 0:
                return v, n
            n = _heap_pop(heap, n)
        return _EMPTY, n

    @njit(cache=True)
    def _replay_jit(bi, action, side, kind, price, size, oid, n_orders, nb):
        n = bi.shape[0]
        end_bid = np.full(nb, -1, dtype=np.int64)
        end_ask = np.full(nb, -1, dtype=np.int64)
        rest_price = np.zeros(n_orders, dtype=np.int64)
        rest_side = np.zeros(n_orders, dtype=np.int8)
        rest_rem = np.zeros(n_orders, dtype=np.int64)
        bid_heap = np.empty(n + 1, dtype=np.int64)
        ask_heap = np.empty(n + 1, dtype=np.int64)
        bid_n = 0
        ask_n = 0
        bid_count = _NumbaDict.empty(types.int64, types.int64)
        ask_count = _NumbaDict.empty(types.int64, types.int64)
        counters = np.zeros(6, dtype=np.int64)
        cap_bucket = np.int64(-1)
        cap_bid = np.int64(-1)
        cap_ask = np.int64(-1)
        captured = False
        cur = 0
        for i in range(n):
            b = bi[i]
            while cur < b:
                bb, bid_n = _best_jit(bid_heap, bid_n, bid_count)
                aa, ask_n = _best_jit(ask_heap, ask_n, ask_count)
                if bb != _EMPTY and aa != _EMPTY and -bb < aa:
                    end_bid[cur] = -bb
                    end_ask[cur] = aa
                cur += 1
            act = action[i]
            o = oid[i]
            if act == 0:
                if kind[i] != 1 and price[i] >= 0:
                    if rest_rem[o] > 0:
                        counters[0] += 1
                    else:
                        rest_price[o] = price[i]
                        rest_side[o] = side[i]
                        rest_rem[o] = size[i]
                        if side[i] == 0:
                            key = -price[i]
                            bid_n = _heap_push(bid_heap, bid_n, key)
                            if key in bid_count:
                                bid_count[key] += 1
                            else:
                                bid_count[key] = 1
                        else:
                            key = price[i]
                            ask_n = _heap_push(ask_heap, ask_n, key)
                            if key in ask_count:
                                ask_count[key] += 1
                            else:
                                ask_count[key] = 1
            elif act == 1:
                if rest_rem[o] <= 0:
                    counters[1] += 1
                else:
                    if price[i] >= 0 and (price[i] != rest_price[o]
                                          or side[i] != rest_side[o]):
                        counters[3] += 1
                    if size[i] >= rest_rem[o]:
                        if size[i] > rest_rem[o]:
                            counters[2] += 1
                        if rest_side[o] == 0:
                            bid_count[-rest_price[o]] -= 1
                        else:
                            ask_count[rest_price[o]] -= 1
                        rest_rem[o] = 0
                    else:
                        rest_rem[o] -= size[i]
            else:
                if rest_rem[o] <= 0:
                    counters[4] += 1
                else:
                    if size[i] >= rest_rem[o]:
                        if size[i] > rest_rem[o]:
                            counters[5] += 1
                        if rest_side[o] == 0:
                            bid_count[-rest_price[o]] -= 1
                        else:
                            ask_count[rest_price[o]] -= 1
                        rest_rem[o] = 0
                    else:
                        rest_rem[o] -= size[i]
            if not captured:
                bb, bid_n = _best_jit(bid_heap, bid_n, bid_count)
                aa, ask_n = _best_jit(ask_heap, ask_n, ask_count)
                if bb != _EMPTY and aa != _EMPTY and -bb < aa:
                    captured = True
                    cap_bucket = b
                    cap_bid = -bb
                    cap_ask = aa
        while cur < nb:
            bb, bid_n = _best_jit(bid_heap, bid_n, bid_count)
            aa, ask_n = _best_jit(ask_heap, ask_n, ask_count)
            if bb != _EMPTY and aa != _EMPTY and -bb < aa:
                end_bid[cur] = -bb
                end_ask[cur] = aa
            cur += 1
        return end_bid, end_ask, cap_bucket, cap_bid, cap_ask, counters

    @njit(cache=True)
    def _momentum_jit(bi, action, side, kind, price, size,
                      ref_bid, ref_ask, ref_valid, alpha, match_both):
        nb = ref_bid.shape[0]
        m = np.zeros((nb, 4), dtype=np.int64)
        area_counts = np.zeros(4, dtype=np.int64)
        a2 = 2 * alpha
        for i in range(bi.shape[0]):
            b = bi[i]
            if not ref_valid[b]:
                area_counts[3] += 1
                continue
            rb = ref_bid[b]
            ra = ref_ask[b]
            act = action[i]
            s = side[i]
            p = price[i]
            sz = size[i]
            if act == 2:
                area_counts[0] += 1          # aggressor acts at the touch
                if s == 0:
                    m[b, 1] += sz * (rb - (ra + alpha))
                else:
                    m[b, 1] += sz * (ra - (rb - alpha))
                if match_both and p >= 0:
                    p_rest = p
                    if s == 0 and p_rest > ra:
                        p_rest = ra
                    elif s == 1 and p_rest < rb:
                        p_rest = rb
                    if rb - alpha <= p_rest <= ra + alpha:
                        bound = rb - alpha if s == 0 else ra + alpha
                        m[b, 0] += sz * (bound - p_rest)
                    elif rb - a2 <= p_rest < rb - alpha or ra + alpha < p_rest <= ra + a2:
                        bound = rb - a2 if s == 0 else ra + a2
                        m[b, 2] += sz * (bound - p_rest)
                continue
            forced = kind[i] == 1 or p < 0
            if s == 0:
                p_star = ra if (forced or p > ra) else p
            else:
                p_star = rb if (forced or p < rb) else p
            if rb - alpha <= p_star <= ra + alpha:
                area_counts[0] += 1
                base = 0
                a_eff = alpha
            elif rb - a2 <= p_star < rb - alpha or ra + alpha < p_star <= ra + a2:
                area_counts[1] += 1
                base = 2
                a_eff = a2
            else:
                area_counts[2] += 1
                continue
            bound = rb - a_eff if s == 0 else ra + a_eff
            num = (bound - p_star) if act == 1 else (p_star - bound)
            col = base + (1 if (kind[i] == 1 or (act == 0 and p_star != p)) else 0)
            m[b, col] += sz * num
        return m, area_counts


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def replay_quotes(bi, action, side, kind, price, size, oid, n_orders, nb, *,
                  use_numba: bool | None = None):
    impl = _replay_jit if (USE_NUMBA if use_numba is None else use_numba) else _replay_py
    return impl(np.ascontiguousarray(bi), action, side, kind, price, size,
                np.ascontiguousarray(oid), n_orders, nb)


def accumulate_momentum(bi, action, side, kind, price, size,
                        ref_bid, ref_ask, ref_valid, alpha, *,
                        match_both: bool = False,
                        use_numba: bool | None = None):
    impl = _momentum_jit if (USE_NUMBA if use_numba is None else use_numba) else _momentum_np
    return impl(bi, action, side, kind, price, size,
                ref_bid, ref_ask, ref_valid, np.int64(alpha), match_both)
