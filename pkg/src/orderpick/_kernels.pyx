# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled twin of ``_pykernels``: same algorithms, same iteration order."""

from libc.stdint cimport uint64_t
from libcpp.vector cimport vector

import numpy as np

from ._pykernels import BudgetExceeded

cdef double EPS = 1e-9
cdef double INF = float("inf")

cdef extern from *:
    """
    #include <unordered_map>
    #include <cstdint>
    struct OPKey {
        int last; int m; uint64_t bm; uint64_t pm;
        bool operator==(const OPKey& o) const {
            return last == o.last && m == o.m && bm == o.bm && pm == o.pm;
        }
    };
    struct OPKeyHash {
        size_t operator()(const OPKey& k) const {
            uint64_t h = k.bm * 0x9E3779B97F4A7C15ULL;
            h ^= k.pm + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
            h ^= ((uint64_t)k.last << 8 | (uint64_t)k.m) * 0xC2B2AE3D27D4EB4FULL;
            return (size_t)(h ^ (h >> 31));
        }
    };
    typedef std::unordered_map<OPKey, int, OPKeyHash> OPMap;
    static inline int op_popcount(uint64_t x) { return __builtin_popcountll(x); }
    static inline int op_ctz(uint64_t x) { return __builtin_ctzll(x); }
    static inline int op_map_get(OPMap& m, const OPKey& k) {
        OPMap::iterator it = m.find(k);
        return it == m.end() ? -1 : it->second;
    }
    """
    cdef cppclass OPKey:
        int last
        int m
        uint64_t bm
        uint64_t pm
    cdef cppclass OPMap:
        OPMap()
        void clear()
        void reserve(size_t)
        int& operator[](const OPKey&)
    int op_popcount(uint64_t x)
    int op_ctz(uint64_t x)
    int op_map_get(OPMap& m, const OPKey& k)


def held_karp(T, int start, int end, nodes, release, double tp, double clock):
    cdef int m = len(nodes)
    cdef double[:, ::1] D = np.ascontiguousarray(T, dtype=np.float64)
    if m == 0:
        if end >= 0:
            return clock + D[start, end], []
        return clock, []
    if m > 24:
        raise ValueError("too many nodes for subset DP")
    cdef int full = (1 << m) - 1
    cdef vector[int] nd
    cdef vector[double] rel
    for r in nodes:
        nd.push_back(r)
    for r in release:
        rel.push_back(r)
    cdef vector[double] best = vector[double]((full + 1) * m, INF)
    cdef vector[int] prev = vector[int]((full + 1) * m, -1)
    cdef int j, k, mask, nm, last
    cdef double t, cur, fin
    for j in range(m):
        t = clock + D[start, nd[j]]
        if t < rel[j]:
            t = rel[j]
        best[(1 << j) * m + j] = t + tp
    for mask in range(1, full + 1):
        for j in range(m):
            cur = best[mask * m + j]
            if cur == INF:
                continue
            for k in range(m):
                if mask & (1 << k):
                    continue
                t = cur + D[nd[j], nd[k]]
                if t < rel[k]:
                    t = rel[k]
                t += tp
                nm = mask | (1 << k)
                if t < best[nm * m + k] - EPS:
                    best[nm * m + k] = t
                    prev[nm * m + k] = j
    fin = INF
    last = -1
    for j in range(m):
        t = best[full * m + j]
        if end >= 0:
            t += D[nd[j], end]
        if t < fin - EPS:
            fin = t
            last = j
    order = []
    mask = full
    cdef int p
    while last >= 0:
        order.append(nd[last])
        p = prev[mask * m + last]
        mask ^= 1 << last
        last = p
    order.reverse()
    return fin, order


cdef struct Succ:
    int s
    int m
    uint64_t bm
    uint64_t pm
    bint closes


cdef inline void push(vector[Succ]& out, int s, int m, uint64_t bm, uint64_t pm, bint closes):
    cdef Succ x
    x.s = s
    x.m = m
    x.bm = bm
    x.pm = pm
    x.closes = closes
    out.push_back(x)


cdef void expand_c(vector[Succ]& out, int m, uint64_t bm, uint64_t pm, double clock,
                   bint at_depot, int cap, const vector[uint64_t]& order_items,
                   const vector[double]& order_release, const vector[int]& order_size,
                   double tp, bint dominance, bint fifo, double lw,
                   const vector[double]& d3):
    out.clear()
    cdef int nb = op_popcount(bm)
    cdef uint64_t b, low, rest, p, q, lb, left, rest_p, oi
    cdef int s, j, jmin
    cdef bint single
    cdef double thr = 0.0
    if nb:
        b = bm
        while b:
            low = b & (~b + 1)
            s = op_ctz(b)
            b ^= low
            rest = bm ^ low
            if nb > 1:
                push(out, s, m, rest, pm, False)
            elif m < cap:
                if pm:
                    push(out, s, m, 0, pm, False)
                push(out, s, 0, 0, pm, True)
            else:
                push(out, s, 0, 0, pm, True)
    if m >= cap or not pm:
        return
    jmin = op_ctz(pm)
    if dominance:
        if m == 0:
            thr = (order_release[jmin] if order_release[jmin] > clock else clock) + d3[jmin]
        elif nb:
            thr = clock + 2 * lw + tp
        else:
            thr = clock + 2 * lw
    p = pm
    while p:
        low = p & (~p + 1)
        j = op_ctz(p)
        p ^= low
        if j != jmin:
            if fifo:
                break
            if dominance and order_release[j] >= thr and (m > 0 or at_depot):
                break
        rest_p = pm ^ low
        single = order_size[j] == 1
        oi = order_items[j]
        q = oi
        while q:
            lb = q & (~q + 1)
            s = op_ctz(q)
            q ^= lb
            left = oi ^ lb
            if m == 0:
                if not single or rest_p:
                    push(out, s, 1, left, rest_p, False)
                if single:
                    push(out, s, 0, 0, rest_p, True)
            elif nb == 0:
                if m < cap - 1:
                    if not single or rest_p:
                        push(out, s, m + 1, left, rest_p, False)
                    if single:
                        push(out, s, 0, 0, rest_p, True)
                else:
                    if not single:
                        push(out, s, m + 1, left, rest_p, False)
                    else:
                        push(out, s, 0, 0, rest_p, True)
            else:
                push(out, s, m + 1, bm | left, rest_p, False)


def dp_solve(T, item_release, order_items, order_release, order_size, double tp, int cap,
             int objective, bint dominance, bint fifo, double lw, d3, int start_last,
             int start_m, start_bm, start_pm, double start_clock, bint start_at_depot,
             long long budget, bint record):
    cdef int n = len(item_release)
    cdef int no = len(order_items)
    if n > 64 or no > 64:
        raise ValueError("compiled kernel supports at most 64 items and 64 orders")
    cdef double[:, ::1] D = np.ascontiguousarray(T, dtype=np.float64)
    cdef vector[double] rel, orel, vd3
    cdef vector[uint64_t] oitems
    cdef vector[int] osize
    for r in item_release:
        rel.push_back(r)
    for r in order_release:
        orel.push_back(r)
    for r in d3:
        vd3.push_back(r)
    for r in order_items:
        oitems.push_back(<uint64_t>r)
    for r in order_size:
        osize.push_back(r)
    cdef int depot = n
    cdef int start = n + 1
    cdef vector[int] k_last, k_m, parent
    cdef vector[uint64_t] k_bm, k_pm
    cdef vector[double] val, clk
    cdef long long expanded = 0, transitions = 0
    cdef long long peak = 1
    cdef uint64_t sbm = start_bm, spm = start_pm
    k_last.push_back(start_last)
    k_m.push_back(start_m)
    k_bm.push_back(sbm)
    k_pm.push_back(spm)
    cdef int mult0 = start_m + op_popcount(spm)
    val.push_back(start_clock * mult0 if objective == 1 else start_clock)
    clk.push_back(start_clock)
    parent.push_back(-1)
    cdef vector[int] stage, nxt
    stage.push_back(0)
    cdef int remaining = op_popcount(sbm)
    cdef int jj
    for jj in range(no):
        if (spm >> jj) & 1:
            remaining += op_popcount(oitems[jj])
    cdef OPMap index
    cdef OPKey key
    cdef vector[Succ] succ
    cdef int step, si, last, m, pos, idx, mult, t, nsz
    cdef uint64_t bm, pm
    cdef double clock, g, wait, nclock, nval, old
    cdef bint at_depot
    cdef Succ x
    for step in range(remaining):
        index.clear()
        nxt.clear()
        for t in range(<int>stage.size()):
            si = stage[t]
            last = k_last[si]
            m = k_m[si]
            bm = k_bm[si]
            pm = k_pm[si]
            clock = clk[si]
            if last == start:
                pos = start
                at_depot = start_at_depot
            elif m == 0:
                pos = depot
                at_depot = True
            else:
                pos = last
                at_depot = False
            expanded += 1
            mult = m + op_popcount(pm)
            expand_c(succ, m, bm, pm, clock, at_depot, cap, oitems, orel, osize, tp,
                     dominance, fifo, lw, vd3)
            for x in succ:
                transitions += 1
                g = D[pos, x.s]
                wait = rel[x.s] - clock
                if wait > g:
                    g = wait
                g += tp
                if x.closes:
                    g += D[x.s, depot]
                nclock = clock + g
                if objective == 1:
                    nval = val[si] + g * mult
                else:
                    nval = nclock
                key.last = x.s
                key.m = x.m
                key.bm = x.bm
                key.pm = x.pm
                idx = op_map_get(index, key)
                if idx < 0:
                    idx = <int>k_last.size()
                    if idx >= budget:
                        raise BudgetExceeded(step + 1, idx)
                    index[key] = idx
                    nxt.push_back(idx)
                    k_last.push_back(x.s)
                    k_m.push_back(x.m)
                    k_bm.push_back(x.bm)
                    k_pm.push_back(x.pm)
                    val.push_back(nval)
                    clk.push_back(nclock)
                    parent.push_back(si)
                else:
                    old = val[idx]
                    if nval < old - EPS or (objective == 1 and nval <= old + EPS
                                            and nclock < clk[idx] - EPS):
                        val[idx] = nval
                        clk[idx] = nclock
                        parent[idx] = si
        stage.swap(nxt)
        nsz = <int>stage.size()
        if nsz > peak:
            peak = nsz
        if nsz == 0:
            break
    cdef int best = -1
    for t in range(<int>stage.size()):
        si = stage[t]
        if k_m[si] == 0 and k_bm[si] == 0 and k_pm[si] == 0:
            if best < 0:
                best = si
            elif val[si] < val[best] - EPS or (objective == 1 and val[si] <= val[best] + EPS
                                                and clk[si] < clk[best] - EPS):
                best = si
    result = {
        "feasible": best >= 0,
        "value": val[best] if best >= 0 else INF,
        "clock": clk[best] if best >= 0 else INF,
        "path": [],
        "states_expanded": expanded,
        "transitions": transitions,
        "peak_states": peak,
        "stored_states": <long long>k_last.size(),
    }
    if remaining == 0:
        result.update(feasible=start_m == 0, value=val[0], clock=clk[0])
        best = 0 if start_m == 0 else -1
    path = []
    cdef int i = best
    while i > 0:
        path.append((k_last[i], k_m[i] == 0))
        i = parent[i]
    path.reverse()
    result["path"] = path
    if record:
        result["arena"] = ([v for v in k_last], [v for v in k_m], [int(v) for v in k_bm],
                           [int(v) for v in k_pm], [v for v in val], [v for v in clk],
                           [v for v in parent])
    return result
