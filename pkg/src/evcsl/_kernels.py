"""Compiled inner loops.

Everything here works on plain arrays so it can run under numba. Candidate
distance rows are read from ``dcT`` (candidates x clients, C-contiguous) so that
scanning one candidate touches contiguous memory.

Conventions shared by all kernels:

* open sets are sorted ascending ``int64`` arrays;
* a client's nearest / second-nearest station is the lexicographically
  smallest ``(distance, index)`` pair, which gives lowest-index tie-breaking;
* objectives are accumulated client by client in index order, so every path
  that produces the same nearest distances produces bit-identical sums.
"""

import numba as nb
import numpy as np

jit = nb.njit(cache=True)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


@jit
def top2(dcT, open_idx):
    n_clients = dcT.shape[1]
    n1 = np.full(n_clients, -1, np.int64)
    n2 = np.full(n_clients, -1, np.int64)
    d1 = np.full(n_clients, np.inf)
    d2 = np.full(n_clients, np.inf)
    for s in open_idx:
        row = dcT[s]
        for c in range(n_clients):
            d = row[c]
            if d < d1[c]:
                n2[c] = n1[c]
                d2[c] = d1[c]
                n1[c] = s
                d1[c] = d
            elif d < d2[c]:
                n2[c] = s
                d2[c] = d
    return n1, d1, n2, d2


@jit
def weighted_sum(w, d):
    total = 0.0
    for c in range(w.size):
        total += w[c] * d[c]
    return total


@jit
def count_above(d, limit):
    n = 0
    for c in range(d.size):
        if d[c] > limit:
            n += 1
    return n


@jit
def nearest_dist(dcT, open_idx, out):
    out[:] = np.inf
    for s in open_idx:
        row = dcT[s]
        for c in range(out.size):
            if row[c] < out[c]:
                out[c] = row[c]


@jit
def match_stations(open_idx, compat, cap, assign):
    """Capacitated bipartite matching by BFS augmenting paths.

    ``assign`` (one slot per open station) is overwritten; unmatched stations
    keep -1. Returns the matching size.
    """
    n_sub = cap.size
    ms = open_idx.size
    assign[:] = -1
    load = np.zeros(n_sub, np.int64)
    parent = np.empty(n_sub, np.int64)
    seen = np.empty(n_sub, np.bool_)
    queue = np.empty(ms + 1, np.int64)
    matched = 0
    for s0 in range(ms):
        seen[:] = False
        head = 0
        tail = 1
        queue[0] = s0
        found = -1
        while head < tail and found < 0:
            p = queue[head]
            head += 1
            cand = open_idx[p]
            for e in range(n_sub):
                if not compat[cand, e] or seen[e]:
                    continue
                seen[e] = True
                parent[e] = p
                if load[e] < cap[e]:
                    found = e
                    break
                for q in range(ms):
                    if assign[q] == e:
                        queue[tail] = q
                        tail += 1
        if found < 0:
            continue
        e = found
        load[e] += 1
        while True:
            p = parent[e]
            prev = assign[p]
            assign[p] = e
            if p == s0:
                break
            e = prev
        matched += 1
    return matched


@jit
def is_feasible(open_idx, compat, cap, always_feasible, assign):
    if always_feasible:
        return True
    return match_stations(open_idx, compat, cap, assign) == open_idx.size


@jit
def score(dcT, w, dmax, compat, cap, always_feasible, open_idx, dbuf, abuf):
    """(total violations, objective) of an open set, without assignment detail."""
    nearest_dist(dcT, open_idx, dbuf)
    obj = weighted_sum(w, dbuf)
    v = count_above(dbuf, dmax)
    if not is_feasible(open_idx, compat, cap, always_feasible, abuf):
        v += 1
    return v, obj


# --------------------------------------------------------------------------
# sampling helpers
# --------------------------------------------------------------------------


@jit
def nth_closed(open_idx, r):
    """The r-th (0-based) candidate index not in the sorted open set."""
    idx = r
    for s in open_idx:
        if s <= idx:
            idx += 1
        else:
            break
    return idx


@jit
def insert_sorted(arr, p, value):
    """Overwrite arr[p] with value and restore ascending order in place."""
    arr[p] = value
    while p > 0 and arr[p - 1] > arr[p]:
        arr[p - 1], arr[p] = arr[p], arr[p - 1]
        p -= 1
    while p < arr.size - 1 and arr[p + 1] < arr[p]:
        arr[p + 1], arr[p] = arr[p], arr[p + 1]
        p += 1
    return p


@jit
def random_subset(perm, k, rng, out):
    # partial Fisher-Yates; perm is any arrangement of 0..M-1 and stays one
    m = perm.size
    for t in range(k):
        r = rng.integers(t, m)
        perm[t], perm[r] = perm[r], perm[t]
        out[t] = perm[t]
    out[:k].sort()


@jit
def shuffle(a, rng):
    for t in range(a.size - 1, 0, -1):
        r = rng.integers(0, t + 1)
        a[t], a[r] = a[r], a[t]


# --------------------------------------------------------------------------
# GA operators
# --------------------------------------------------------------------------


@jit
def key_less(va, oa, vb, ob):
    return va < vb or (va == vb and oa < ob)


@jit
def select_pair(pop_v, pop_o, better, rng):
    mu = pop_v.size
    res = np.empty(2, np.int64)
    for t in range(2):
        i = rng.integers(0, mu)
        j = rng.integers(0, mu)
        j_wins = key_less(pop_v[j], pop_o[j], pop_v[i], pop_o[i])
        if better:
            res[t] = j if j_wins else i
        else:
            res[t] = i if j_wins else j
    return res[0], res[1]


@jit
def cupcap(p1, p2, rng, child):
    """Keep the parents' common sites, fill from their symmetric difference."""
    ms = p1.size
    inter = np.empty(ms, np.int64)
    sym = np.empty(2 * ms, np.int64)
    ni = 0
    ns = 0
    a = 0
    b = 0
    while a < ms or b < ms:
        if b >= ms or (a < ms and p1[a] < p2[b]):
            sym[ns] = p1[a]
            ns += 1
            a += 1
        elif a >= ms or p2[b] < p1[a]:
            sym[ns] = p2[b]
            ns += 1
            b += 1
        else:
            inter[ni] = p1[a]
            ni += 1
            a += 1
            b += 1
    need = ms - ni
    for t in range(need):
        r = rng.integers(t, ns)
        sym[t], sym[r] = sym[r], sym[t]
    child[:ni] = inter[:ni]
    child[ni:] = sym[:need]
    child.sort()


@jit
def mutate_swap(x, prob, n_cand, rng):
    u = rng.random()
    ms = x.size
    if u < prob and n_cand > ms:
        p = rng.integers(0, ms)
        r = rng.integers(0, n_cand - ms)
        insert_sorted(x, p, nth_closed(x, r))


@jit
def rank_order(v, o):
    """Indices sorted by (v, o), ties kept in insertion order."""
    idx = np.argsort(o, kind="mergesort")
    idx = idx[np.argsort(v[idx], kind="mergesort")]
    return idx


@jit
def replacement(pop, pop_v, pop_o, off, off_v, off_o, plus):
    mu = pop_v.size
    lam = off_v.size
    new = np.empty_like(pop)
    new_v = np.empty_like(pop_v)
    new_o = np.empty_like(pop_o)
    if plus:
        allv = np.concatenate((pop_v, off_v))
        allo = np.concatenate((pop_o, off_o))
        order = rank_order(allv, allo)
        for t in range(mu):
            q = order[t]
            if q < mu:
                new[t] = pop[q]
            else:
                new[t] = off[q - mu]
            new_v[t] = allv[q]
            new_o[t] = allo[q]
    else:
        order = rank_order(off_v, off_o)
        n_off = min(mu, lam)
        for t in range(n_off):
            q = order[t]
            new[t] = off[q]
            new_v[t] = off_v[q]
            new_o[t] = off_o[q]
        if n_off < mu:
            porder = rank_order(pop_v, pop_o)
            for t in range(mu - n_off):
                q = porder[t]
                new[n_off + t] = pop[q]
                new_v[n_off + t] = pop_v[q]
                new_o[n_off + t] = pop_o[q]
    pop[:] = new
    pop_v[:] = new_v
    pop_o[:] = new_o


@jit
def ga_init(dcT, w, dmax, compat, cap, always_feasible, pop, pop_v, pop_o, perm, rng):
    ms = pop.shape[1]
    dbuf = np.empty(dcT.shape[1])
    abuf = np.empty(ms, np.int64)
    for t in range(pop.shape[0]):
        random_subset(perm, ms, rng, pop[t])
        v, o = score(dcT, w, dmax, compat, cap, always_feasible, pop[t], dbuf, abuf)
        pop_v[t] = v
        pop_o[t] = o


@jit
def ga_generations(dcT, w, dmax, compat, cap, always_feasible,
                   pop, pop_v, pop_o, best, best_key, lam, better, crossover,
                   mut_prob, plus, rng, evals, max_evals, max_gens,
                   traj_e, traj_v, traj_o):
    """Run up to ``max_gens`` generations or until ``evals >= max_evals``.

    ``best`` / ``best_key`` (float array [v, o]) hold the best-ever individual
    and are updated in place. One trajectory row is written per generation.
    Returns (evals, generations run).
    """
    n_cand = dcT.shape[0]
    ms = pop.shape[1]
    off = np.empty((lam, ms), np.int64)
    off_v = np.empty(lam, np.int64)
    off_o = np.empty(lam)
    dbuf = np.empty(dcT.shape[1])
    abuf = np.empty(ms, np.int64)
    g = 0
    while g < max_gens and evals < max_evals:
        # the last generation is cut short so the budget is never exceeded
        n_off = min(lam, max_evals - evals)
        for t in range(n_off):
            i, j = select_pair(pop_v, pop_o, better, rng)
            if crossover:
                cupcap(pop[i], pop[j], rng, off[t])
            else:
                off[t] = pop[i]
            mutate_swap(off[t], mut_prob, n_cand, rng)
            v, o = score(dcT, w, dmax, compat, cap, always_feasible, off[t], dbuf, abuf)
            off_v[t] = v
            off_o[t] = o
            evals += 1
            if key_less(v, o, int(best_key[0]), best_key[1]):
                best[:] = off[t]
                best_key[0] = v
                best_key[1] = o
        replacement(pop, pop_v, pop_o, off[:n_off], off_v[:n_off], off_o[:n_off], plus)
        traj_e[g] = evals
        traj_v[g] = int(best_key[0])
        traj_o[g] = best_key[1]
        g += 1
    return evals, g


# --------------------------------------------------------------------------
# swap bookkeeping (fast interchange)
# --------------------------------------------------------------------------


@jit
def swap_row(dcT, w, dmax, a, pos, n1, d1, d2, gain, loss, vgain, vloss):
    """Deltas of opening candidate ``a`` against every open station.

    delta(a, out at position p) = gain[0] + loss[p] for the objective and
    vgain[0] + vloss[p] for the Dc violation count.
    """
    row = dcT[a]
    g = 0.0
    gv = 0
    loss[:] = 0.0
    vloss[:] = 0
    for c in range(row.size):
        da = row[c]
        dd1 = d1[c]
        if da < dd1:
            g += w[c] * (da - dd1)
            gv += (1 if da > dmax else 0) - (1 if dd1 > dmax else 0)
        else:
            nd = da if da < d2[c] else d2[c]
            if nd != dd1:
                p = pos[n1[c]]
                loss[p] += w[c] * (nd - dd1)
                vloss[p] += (1 if nd > dmax else 0) - (1 if dd1 > dmax else 0)
    gain[0] = g
    vgain[0] = gv


@jit
def apply_swap_state(dcT, open_idx, pos, n1, d1, n2, d2, p, a):
    """Replace the station at position p by candidate a; update top-2 in place."""
    out = open_idx[p]
    pos[out] = -1
    insert_sorted(open_idx, p, a)
    for t in range(open_idx.size):
        pos[open_idx[t]] = t
    row = dcT[a]
    for c in range(row.size):
        if n1[c] == out or n2[c] == out:
            b1 = -1
            b2 = -1
            e1 = np.inf
            e2 = np.inf
            for s in open_idx:
                d = dcT[s, c]
                if d < e1:
                    b2 = b1
                    e2 = e1
                    b1 = s
                    e1 = d
                elif d < e2:
                    b2 = s
                    e2 = d
            n1[c] = b1
            d1[c] = e1
            n2[c] = b2
            d2[c] = e2
        else:
            da = row[c]
            if da < d1[c] or (da == d1[c] and a < n1[c]):
                n2[c] = n1[c]
                d2[c] = d1[c]
                n1[c] = a
                d1[c] = da
            elif da < d2[c] or (da == d2[c] and a < n2[c]):
                n2[c] = a
                d2[c] = da


@jit
def fi_descend(dcT, w, dmax, compat, cap, always_feasible, open_idx, pos,
               n1, d1, n2, d2, assign, fstate, istate, perm_in, perm_out,
               rng, max_pairs, tol_rel):
    """First-improvement interchange until a local optimum or ``max_pairs``.

    fstate = [objective]; istate = [dc_violations, feasible, row, col, new_pass,
    swaps applied]. Scan position survives across calls so the descent can be
    resumed after a budget check. Returns (pairs examined, reached optimum).
    """
    n_cand = dcT.shape[0]
    ms = open_idx.size
    n_closed = n_cand - ms
    gain = np.empty(1)
    vgain = np.empty(1, np.int64)
    loss = np.empty(ms)
    vloss = np.empty(ms, np.int64)
    trial = np.empty(ms, np.int64)
    tassign = np.empty(ms, np.int64)
    used = 0
    if n_closed == 0:
        return used, True
    while True:
        if istate[4] == 1:
            k = 0
            for s in range(n_cand):
                if pos[s] < 0:
                    perm_in[k] = s
                    k += 1
            shuffle(perm_in, rng)
            for t in range(ms):
                perm_out[t] = t
            shuffle(perm_out, rng)
            istate[2] = 0
            istate[3] = 0
            istate[4] = 0
        row = istate[2]
        if row >= n_closed:
            istate[4] = 1
            return used, True
        a = perm_in[row]
        swap_row(dcT, w, dmax, a, pos, n1, d1, d2, gain, loss, vgain, vloss)
        obj = fstate[0]
        tol = tol_rel * max(abs(obj), 1.0)
        cur_v = istate[0] + (0 if istate[1] == 1 else 1)
        applied = False
        for col in range(istate[3], ms):
            if used >= max_pairs:
                istate[3] = col
                return used, False
            used += 1
            p = perm_out[col]
            delta = gain[0] + loss[p]
            new_dcv = istate[0] + vgain[0] + vloss[p]
            if new_dcv > cur_v:
                continue
            obj_better = delta < -tol
            if new_dcv == cur_v and not obj_better:
                continue
            if always_feasible:
                feas = True
            else:
                trial[:] = open_idx
                insert_sorted(trial, p, a)
                feas = match_stations(trial, compat, cap, tassign) == ms
            new_v = new_dcv + (0 if feas else 1)
            if new_v < cur_v or (new_v == cur_v and obj_better):
                apply_swap_state(dcT, open_idx, pos, n1, d1, n2, d2, p, a)
                fstate[0] = weighted_sum(w, d1)
                istate[0] = count_above(d1, dmax)
                istate[1] = 1 if is_feasible(open_idx, compat, cap, False, assign) else 0
                istate[4] = 1
                istate[5] += 1
                applied = True
                break
        if not applied:
            istate[2] += 1
            istate[3] = 0


# --------------------------------------------------------------------------
# VNS shake and IALT
# --------------------------------------------------------------------------


@jit
def shake_moves(x, k, ranks, width, n_cand, rng):
    """k random swap moves on the sorted open set x (in place)."""
    ms = x.size
    if ms >= n_cand:
        return
    is_open = np.zeros(n_cand, np.bool_)
    for s in x:
        is_open[s] = True
    width = min(width, ranks.shape[1])
    pool = np.empty(max(width, 1), np.int64)
    for _ in range(k):
        p = rng.integers(0, ms)
        s = x[p]
        n = 0
        for t in range(width):
            q = ranks[s, t]
            if not is_open[q]:
                pool[n] = q
                n += 1
        if n > 0:
            new = pool[rng.integers(0, n)]
        else:
            new = nth_closed(x, rng.integers(0, n_cand - ms))
        is_open[s] = False
        is_open[new] = True
        insert_sorted(x, p, new)


@jit
def ialt_relocate(dcT, w, open_idx, n1):
    """One allocation/relocation sweep. Returns new sorted open set, moved flag."""
    n_cand, n_clients = dcT.shape
    ms = open_idx.size
    taken = np.zeros(n_cand, np.bool_)
    for s in open_idx:
        taken[s] = True
    # bucket clients by their nearest station
    start = np.zeros(ms + 1, np.int64)
    where = np.empty(n_cand, np.int64)
    for t in range(ms):
        where[open_idx[t]] = t
    for c in range(n_clients):
        start[where[n1[c]] + 1] += 1
    for t in range(ms):
        start[t + 1] += start[t]
    fill = start[:ms].copy()
    members = np.empty(n_clients, np.int64)
    for c in range(n_clients):
        t = where[n1[c]]
        members[fill[t]] = c
        fill[t] += 1
    new_open = open_idx.copy()
    moved = False
    for t in range(ms):
        lo = start[t]
        hi = start[t + 1]
        if lo == hi:
            continue
        s = open_idx[t]
        best = s
        best_cost = 0.0
        for q in range(lo, hi):
            c = members[q]
            best_cost += w[c] * dcT[s, c]
        for a in range(n_cand):
            if taken[a]:
                continue
            cost = 0.0
            row = dcT[a]
            for q in range(lo, hi):
                c = members[q]
                cost += w[c] * row[c]
                if cost >= best_cost:
                    break
            if cost < best_cost:
                best = a
                best_cost = cost
        if best != s:
            taken[s] = False
            taken[best] = True
            new_open[t] = best
            moved = True
    new_open.sort()
    return new_open, moved


# --------------------------------------------------------------------------
# exhaustive enumeration
# --------------------------------------------------------------------------


@jit
def enumerate_best(dcT, w, dmax, compat, cap, always_feasible, ms):
    """Best Ms-subset in lexicographic enumeration order (first best wins)."""
    n_cand = dcT.shape[0]
    comb = np.arange(ms).astype(np.int64)
    best = comb.copy()
    best_v = np.int64(1 << 62)
    best_o = np.inf
    dbuf = np.empty(dcT.shape[1])
    abuf = np.empty(ms, np.int64)
    count = 0
    while True:
        nearest_dist(dcT, comb, dbuf)
        o = weighted_sum(w, dbuf)
        dv = count_above(dbuf, dmax)
        count += 1
        # feasibility can only add one violation; skip the matching when even
        # the optimistic key cannot win
        if key_less(dv, o, best_v, best_o):
            v = dv
            if not is_feasible(comb, compat, cap, always_feasible, abuf):
                v += 1
            if key_less(v, o, best_v, best_o):
                best[:] = comb
                best_v = v
                best_o = o
        t = ms - 1
        while t >= 0 and comb[t] == n_cand - ms + t:
            t -= 1
        if t < 0:
            break
        comb[t] += 1
        for u in range(t + 1, ms):
            comb[u] = comb[u - 1] + 1
    return best, best_v, best_o, count
