"""Pure-Python hot loops: subset TSP with release times and the batching DP.

The compiled module ``_kernels`` implements the same functions with the same
iteration order, so both return identical results.
"""

EPS = 1e-9
MAKESPAN = 0
TURNOVER = 1


class BudgetExceeded(Exception):
    def __init__(self, stage, count):
        super().__init__(f"state budget exceeded at stage {stage} with {count} stored states")
        self.stage = stage
        self.count = count


def held_karp(T, start, end, nodes, release, tp, clock):
    """Earliest finishing visit order over ``nodes``.

    Leaves ``start`` at ``clock``, picks every node (waiting for its release,
    ``tp`` per pick) and walks to ``end`` (``-1`` = stop at the last pick).
    Returns ``(finish_time, order)``.
    """
    m = len(nodes)
    if m == 0:
        if end >= 0:
            return clock + T[start][end], []
        return clock, []
    full = (1 << m) - 1
    INF = float("inf")
    best = [[INF] * m for _ in range(1 << m)]
    prev = [[-1] * m for _ in range(1 << m)]
    for j in range(m):
        t = clock + T[start][nodes[j]]
        if t < release[j]:
            t = release[j]
        best[1 << j][j] = t + tp
    for mask in range(1, full + 1):
        row = best[mask]
        for j in range(m):
            cur = row[j]
            if cur == INF:
                continue
            nj = nodes[j]
            Tj = T[nj]
            for k in range(m):
                bit = 1 << k
                if mask & bit:
                    continue
                t = cur + Tj[nodes[k]]
                if t < release[k]:
                    t = release[k]
                t += tp
                nm = mask | bit
                if t < best[nm][k] - EPS:
                    best[nm][k] = t
                    prev[nm][k] = j
    fin = INF
    last = -1
    for j in range(m):
        t = best[full][j]
        if end >= 0:
            t += T[nodes[j]][end]
        if t < fin - EPS:
            fin = t
            last = j
    order = []
    mask = full
    while last >= 0:
        order.append(nodes[last])
        p = prev[mask][last]
        mask ^= 1 << last
        last = p
    order.reverse()
    return fin, order


def _popcount(x):
    return bin(x).count("1")


def expand_state(last, m, bm, pm, clock, pos, at_depot, n, cap, T, item_release,
                 order_items, order_release, order_size, tp, dominance, fifo,
                 lw, d3):
    """Successor list ``[(item, new_m, new_bm, new_pm, closes), ...]`` of one state.

    ``pos`` is the picker's node, ``at_depot`` tells whether the picker stands
    at the depot with an empty cart (the release-time rule for opening a batch
    only applies there).
    """
    out = []
    nb = _popcount(bm)
    # items of commenced orders first
    if nb:
        b = bm
        while b:
            low = b & -b
            s = low.bit_length() - 1
            b ^= low
            rest = bm ^ low
            if nb > 1:
                out.append((s, m, rest, pm, False))
            elif m < cap:
                if pm:
                    out.append((s, m, 0, pm, False))
                out.append((s, 0, 0, pm, True))
            else:
                out.append((s, 0, 0, pm, True))
    if m >= cap or not pm:
        return out
    jmin = (pm & -pm).bit_length() - 1
    if dominance:
        if m == 0:
            thr = max(order_release[jmin], clock) + d3[jmin]
        elif nb:
            thr = clock + 2 * lw + tp
        else:
            thr = clock + 2 * lw
    p = pm
    while p:
        low = p & -p
        j = low.bit_length() - 1
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
            lb = q & -q
            s = lb.bit_length() - 1
            q ^= lb
            left = oi ^ lb
            if m == 0:
                if not single or rest_p:
                    out.append((s, 1, left, rest_p, False))
                if single:
                    out.append((s, 0, 0, rest_p, True))
            elif nb == 0:
                if m < cap - 1:
                    if not single or rest_p:
                        out.append((s, m + 1, left, rest_p, False))
                    if single:
                        out.append((s, 0, 0, rest_p, True))
                else:
                    if not single:
                        out.append((s, m + 1, left, rest_p, False))
                    else:
                        out.append((s, 0, 0, rest_p, True))
            else:
                out.append((s, m + 1, bm | left, rest_p, False))
    return out


def dp_solve(T, item_release, order_items, order_release, order_size, tp, cap,
             objective, dominance, fifo, lw, d3, start_last, start_m, start_bm,
             start_pm, start_clock, start_at_depot, budget, record):
    """Forward stage-by-stage DP.

    Node ``n`` of ``T`` is the depot and node ``n + 1`` the start position
    (used while ``last == n + 1``). Returns a dict with the terminal value,
    clock, the decoded pick path ``[(item, closes)]``, statistics and, when
    ``record`` is set, the full state arena.
    """
    n = len(item_release)
    depot = n
    start = n + 1
    k_last = []
    k_m = []
    k_bm = []
    k_pm = []
    val = []
    clk = []
    parent = []
    expanded = 0
    transitions = 0
    peak = 1

    k_last.append(start_last)
    k_m.append(start_m)
    k_bm.append(start_bm)
    k_pm.append(start_pm)
    mult0 = start_m + _popcount(start_pm)
    val.append(start_clock * mult0 if objective == TURNOVER else start_clock)
    clk.append(start_clock)
    parent.append(-1)
    stage = [0]
    remaining = _popcount(start_bm) + sum(_popcount(order_items[j]) for j in range(len(order_items))
                                          if start_pm >> j & 1)
    for step in range(remaining):
        index = {}
        nxt = []
        for si in stage:
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
            mult = m + _popcount(pm)
            succ = expand_state(last, m, bm, pm, clock, pos, at_depot, n, cap, T,
                                item_release, order_items, order_release, order_size,
                                tp, dominance, fifo, lw, d3)
            Tp = T[pos]
            for s, nm, nbm, npm, closes in succ:
                transitions += 1
                g = Tp[s]
                wait = item_release[s] - clock
                if wait > g:
                    g = wait
                g += tp
                if closes:
                    g += T[s][depot]
                nclock = clock + g
                if objective == TURNOVER:
                    nval = val[si] + g * mult
                else:
                    nval = nclock
                key = (s, nm, nbm, npm)
                idx = index.get(key)
                if idx is None:
                    idx = len(k_last)
                    if idx >= budget:
                        raise BudgetExceeded(step + 1, idx)
                    index[key] = idx
                    nxt.append(idx)
                    k_last.append(s)
                    k_m.append(nm)
                    k_bm.append(nbm)
                    k_pm.append(npm)
                    val.append(nval)
                    clk.append(nclock)
                    parent.append(si)
                else:
                    old = val[idx]
                    if nval < old - EPS or (objective == TURNOVER and nval <= old + EPS
                                            and nclock < clk[idx] - EPS):
                        val[idx] = nval
                        clk[idx] = nclock
                        parent[idx] = si
        stage = nxt
        if len(stage) > peak:
            peak = len(stage)
        if not stage:
            break
    best = -1
    for si in stage:
        if k_m[si] == 0 and k_bm[si] == 0 and k_pm[si] == 0:
            if best < 0:
                best = si
            else:
                if val[si] < val[best] - EPS or (objective == TURNOVER and val[si] <= val[best] + EPS
                                                 and clk[si] < clk[best] - EPS):
                    best = si
    result = {
        "feasible": best >= 0,
        "value": val[best] if best >= 0 else float("inf"),
        "clock": clk[best] if best >= 0 else float("inf"),
        "path": [],
        "states_expanded": expanded,
        "transitions": transitions,
        "peak_states": peak,
        "stored_states": len(k_last),
    }
    if remaining == 0:
        result.update(feasible=start_m == 0, value=val[0], clock=clk[0])
        best = 0 if start_m == 0 else -1
    path = []
    i = best
    while i > 0:
        path.append((k_last[i], k_m[i] == 0))
        i = parent[i]
    path.reverse()
    result["path"] = path
    if record:
        result["arena"] = (k_last, k_m, k_bm, k_pm, val, clk, parent)
    return result
