"""Pure-Python kernels.

Same signatures and bit-identical results as the compiled ``_core``
extension; selected by :mod:`decswitch.kernels` when the extension is not
built.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

INF = math.inf


# --------------------------------------------------------------------------
# Shortest paths
# --------------------------------------------------------------------------

def dijkstra(indptr, nbr, eid, weights, source, num_detectors):
    """Single-source distances and predecessor edges.

    Nodes ``>= num_detectors`` (the boundaries) are reached but never expanded,
    except the source itself.  Ties keep the first edge found, scanning
    neighbours in CSR order.  Returns ``(dist, pred_edge)`` with ``-1`` for
    the source and unreachable nodes.
    """
    n = len(indptr) - 1
    dist = [INF] * n
    pred = [-1] * n
    dist[source] = 0.0
    done = [False] * n
    heap = [(0.0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u >= num_detectors and u != source:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = nbr[k]
            e = eid[k]
            nd = du + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = e
                heapq.heappush(heap, (nd, v))
    return np.array(dist, dtype=np.float64), np.array(pred, dtype=np.int64)


def multi_dijkstra(indptr, nbr, eid, weights, sources, num_detectors):
    """Stack :func:`dijkstra` over ``sources``."""
    n = len(indptr) - 1
    dist = np.empty((len(sources), n), dtype=np.float64)
    pred = np.empty((len(sources), n), dtype=np.int64)
    for k, s in enumerate(sources):
        dist[k], pred[k] = dijkstra(indptr, nbr, eid, weights, int(s), num_detectors)
    return dist, pred


# --------------------------------------------------------------------------
# Exact maximum-weight matching (Edmonds' blossom algorithm, O(n^3), integer
# weights).  Used through :func:`min_weight_perfect_matching`.
# --------------------------------------------------------------------------

def max_weight_matching(edges, maxcardinality=False):
    if not edges:
        return []
    nedge = len(edges)
    nvertex = 0
    for i, j, _ in edges:
        nvertex = max(nvertex, i + 1, j + 1)
    maxweight = max(0, max(wt for _, _, wt in edges))
    endpoint = [edges[p // 2][p % 2] for p in range(2 * nedge)]
    neighbend = [[] for _ in range(nvertex)]
    for k, (i, j, _) in enumerate(edges):
        neighbend[i].append(2 * k + 1)
        neighbend[j].append(2 * k)
    mate = nvertex * [-1]
    label = (2 * nvertex) * [0]
    labelend = (2 * nvertex) * [-1]
    inblossom = list(range(nvertex))
    blossomparent = (2 * nvertex) * [-1]
    blossomchilds = (2 * nvertex) * [None]
    blossombase = list(range(nvertex)) + nvertex * [-1]
    blossomendps = (2 * nvertex) * [None]
    bestedge = (2 * nvertex) * [-1]
    blossombestedges = (2 * nvertex) * [None]
    unusedblossoms = list(range(nvertex, 2 * nvertex))
    dualvar = nvertex * [maxweight] + nvertex * [0]
    allowedge = nedge * [False]
    queue = []

    def slack(k):
        i, j, wt = edges[k]
        return dualvar[i] + dualvar[j] - 2 * wt

    def leaves(b):
        if b < nvertex:
            return [b]
        out, stack = [], [b]
        while stack:
            t = stack.pop()
            if t < nvertex:
                out.append(t)
            else:
                stack.extend(reversed(blossomchilds[t]))
        return out

    def assign_label(w, t, p):
        while True:
            b = inblossom[w]
            label[w] = label[b] = t
            labelend[w] = labelend[b] = p
            bestedge[w] = bestedge[b] = -1
            if t == 1:
                queue.extend(leaves(b))
                return
            base = blossombase[b]
            w, t, p = endpoint[mate[base]], 1, mate[base] ^ 1

    def scan_blossom(v, w):
        path = []
        base = -1
        while v != -1 or w != -1:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            path.append(b)
            label[b] = 5
            if labelend[b] == -1:
                v = -1
            else:
                v = endpoint[labelend[b]]
                b = inblossom[v]
                v = endpoint[labelend[b]]
            if w != -1:
                v, w = w, v
        for b in path:
            label[b] = 1
        return base

    def add_blossom(base, k):
        v, w, _ = edges[k]
        bb = inblossom[base]
        bv = inblossom[v]
        bw = inblossom[w]
        b = unusedblossoms.pop()
        blossombase[b] = base
        blossomparent[b] = -1
        blossomparent[bb] = b
        path = []
        endps = []
        while bv != bb:
            blossomparent[bv] = b
            path.append(bv)
            endps.append(labelend[bv])
            v = endpoint[labelend[bv]]
            bv = inblossom[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            blossomparent[bw] = b
            path.append(bw)
            endps.append(labelend[bw] ^ 1)
            w = endpoint[labelend[bw]]
            bw = inblossom[w]
        blossomchilds[b] = path
        blossomendps[b] = endps
        label[b] = 1
        labelend[b] = labelend[bb]
        dualvar[b] = 0
        for v in leaves(b):
            if label[inblossom[v]] == 2:
                queue.append(v)
            inblossom[v] = b
        bestedgeto = (2 * nvertex) * [-1]
        for bv in path:
            if blossombestedges[bv] is None:
                nblists = [[p // 2 for p in neighbend[v]] for v in leaves(bv)]
            else:
                nblists = [blossombestedges[bv]]
            for nblist in nblists:
                for kk in nblist:
                    i, j, _ = edges[kk]
                    if inblossom[j] == b:
                        i, j = j, i
                    bj = inblossom[j]
                    if bj != b and label[bj] == 1 and (
                        bestedgeto[bj] == -1 or slack(kk) < slack(bestedgeto[bj])
                    ):
                        bestedgeto[bj] = kk
            blossombestedges[bv] = None
            bestedge[bv] = -1
        blossombestedges[b] = [kk for kk in bestedgeto if kk != -1]
        bestedge[b] = -1
        for kk in blossombestedges[b]:
            if bestedge[b] == -1 or slack(kk) < slack(bestedge[b]):
                bestedge[b] = kk

    def expand_blossom(b, endstage):
        for s in blossomchilds[b]:
            blossomparent[s] = -1
            if s < nvertex:
                inblossom[s] = s
            elif endstage and dualvar[s] == 0:
                expand_blossom(s, endstage)
            else:
                for v in leaves(s):
                    inblossom[v] = s
        if not endstage and label[b] == 2:
            childs = blossomchilds[b]
            endps = blossomendps[b]
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = childs.index(entrychild)
            if j & 1:
                j -= len(childs)
                jstep, endptrick = 1, 0
            else:
                jstep, endptrick = -1, 1
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[endps[j - endptrick] ^ endptrick ^ 1]] = 0
                assign_label(endpoint[p ^ 1], 2, p)
                allowedge[endps[j - endptrick] // 2] = True
                j += jstep
                p = endps[j - endptrick] ^ endptrick
                allowedge[p // 2] = True
                j += jstep
            bv = childs[j]
            label[endpoint[p ^ 1]] = label[bv] = 2
            labelend[endpoint[p ^ 1]] = labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while childs[j] != entrychild:
                bv = childs[j]
                if label[bv] == 1:
                    j += jstep
                    continue
                found = -1
                for v in leaves(bv):
                    if label[v] != 0:
                        found = v
                        break
                if found >= 0:
                    label[found] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    assign_label(found, 2, labelend[found])
                j += jstep
        label[b] = labelend[b] = -1
        blossomchilds[b] = blossomendps[b] = None
        blossombase[b] = -1
        blossombestedges[b] = None
        bestedge[b] = -1
        unusedblossoms.append(b)

    def augment_blossom(b, v):
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= nvertex:
            augment_blossom(t, v)
        childs = blossomchilds[b]
        endps = blossomendps[b]
        i = j = childs.index(t)
        if i & 1:
            j -= len(childs)
            jstep, endptrick = 1, 0
        else:
            jstep, endptrick = -1, 1
        while j != 0:
            j += jstep
            t = childs[j]
            p = endps[j - endptrick] ^ endptrick
            if t >= nvertex:
                augment_blossom(t, endpoint[p])
            j += jstep
            t = childs[j]
            if t >= nvertex:
                augment_blossom(t, endpoint[p ^ 1])
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
        blossomchilds[b] = childs[i:] + childs[:i]
        blossomendps[b] = endps[i:] + endps[:i]
        blossombase[b] = blossombase[blossomchilds[b][0]]

    def augment_matching(k):
        v, w, _ = edges[k]
        for s, p in ((v, 2 * k + 1), (w, 2 * k)):
            while True:
                bs = inblossom[s]
                if bs >= nvertex:
                    augment_blossom(bs, s)
                mate[s] = p
                if labelend[bs] == -1:
                    break
                t = endpoint[labelend[bs]]
                bt = inblossom[t]
                s = endpoint[labelend[bt]]
                j = endpoint[labelend[bt] ^ 1]
                if bt >= nvertex:
                    augment_blossom(bt, j)
                mate[j] = labelend[bt]
                p = labelend[bt] ^ 1

    for _ in range(nvertex):
        label[:] = (2 * nvertex) * [0]
        bestedge[:] = (2 * nvertex) * [-1]
        blossombestedges[nvertex:] = nvertex * [None]
        allowedge[:] = nedge * [False]
        queue[:] = []
        for v in range(nvertex):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                assign_label(v, 1, -1)
        augmented = False
        while True:
            while queue and not augmented:
                v = queue.pop()
                for p in neighbend[v]:
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    kslack = 0
                    if not allowedge[k]:
                        kslack = slack(k)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            assign_label(w, 2, p ^ 1)
                        elif label[inblossom[w]] == 1:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                add_blossom(base, k)
                            else:
                                augment_matching(k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < slack(bestedge[b]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < slack(bestedge[w]):
                            bestedge[w] = k
            if augmented:
                break
            deltatype = -1
            delta = deltaedge = deltablossom = 0
            if not maxcardinality:
                deltatype = 1
                delta = min(dualvar[:nvertex])
            for v in range(nvertex):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    dd = slack(bestedge[v])
                    if deltatype == -1 or dd < delta:
                        delta, deltatype, deltaedge = dd, 2, bestedge[v]
            for b in range(2 * nvertex):
                if blossomparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    dd = slack(bestedge[b]) // 2
                    if deltatype == -1 or dd < delta:
                        delta, deltatype, deltaedge = dd, 3, bestedge[b]
            for b in range(nvertex, 2 * nvertex):
                if (
                    blossombase[b] >= 0
                    and blossomparent[b] == -1
                    and label[b] == 2
                    and (deltatype == -1 or dualvar[b] < delta)
                ):
                    delta, deltatype, deltablossom = dualvar[b], 4, b
            if deltatype == -1:
                deltatype = 1
                delta = max(0, min(dualvar[:nvertex]))
            for v in range(nvertex):
                lb = label[inblossom[v]]
                if lb == 1:
                    dualvar[v] -= delta
                elif lb == 2:
                    dualvar[v] += delta
            for b in range(nvertex, 2 * nvertex):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta
            if deltatype == 1:
                break
            if deltatype == 2:
                allowedge[deltaedge] = True
                i, j, _ = edges[deltaedge]
                if label[inblossom[i]] == 0:
                    i, j = j, i
                queue.append(i)
            elif deltatype == 3:
                allowedge[deltaedge] = True
                i, j, _ = edges[deltaedge]
                queue.append(i)
            else:
                expand_blossom(deltablossom, False)
        if not augmented:
            break
        for b in range(nvertex, 2 * nvertex):
            if blossomparent[b] == -1 and blossombase[b] >= 0 and label[b] == 1 and dualvar[b] == 0:
                expand_blossom(b, True)
    return [endpoint[m] if m >= 0 else -1 for m in mate]


def min_weight_perfect_matching(wmat):
    """Exact minimum-weight perfect matching of a complete graph.

    ``wmat`` is a symmetric ``(n, n)`` int64 matrix with ``n`` even and
    non-negative entries.  Returns ``mate`` with ``mate[i] = j``.
    """
    n = wmat.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    top = int(wmat.max()) + 1
    # Even weights keep every dual update integral.
    edges = [(i, j, 2 * (top - int(wmat[i, j]))) for i in range(n) for j in range(i + 1, n)]
    mate = max_weight_matching(edges, maxcardinality=True)
    return np.array(mate, dtype=np.int64)


# --------------------------------------------------------------------------
# Union-Find cluster growth
# --------------------------------------------------------------------------

_GROW_TOL = 1e-12


def uf_grow(indptr, nbr, eid, eu, ev, weights, defects, num_detectors):
    """Grow clusters from ``defects`` until every cluster is valid.

    Returns ``(growth, root, dual)``: accumulated growth per edge (``== weight``
    when fully grown), each node's cluster root (``-1`` if never reached) and
    the summed growth radii of all invalid clusters (a lower bound on the
    weight of any correction).
    Boundary nodes (``>= num_detectors``) validate any cluster they join.
    """
    n = len(indptr) - 1
    nedges = len(weights)
    parent = list(range(n))
    rank = [0] * n
    parity = [0] * n
    boundary = [u >= num_detectors for u in range(n)]
    members = [[u] for u in range(n)]
    active = [False] * n  # node belongs to some cluster
    growth = [0.0] * nedges
    full = [False] * nedges

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra == rb:
            return ra
        if rank[ra] < rank[rb] or (rank[ra] == rank[rb] and ra > rb):
            ra, rb = rb, ra
        parent[rb] = ra
        if rank[ra] == rank[rb]:
            rank[ra] += 1
        parity[ra] ^= parity[rb]
        boundary[ra] = boundary[ra] or boundary[rb]
        members[ra].extend(members[rb])
        members[rb] = []
        return ra

    for u in defects:
        parity[u] ^= 1
        active[u] = True
    dual = 0.0

    while True:
        roots = sorted({find(u) for u in range(n) if active[u]})
        invalid = [r for r in roots if parity[r] and not boundary[r]]
        if not invalid:
            break
        rate = {}
        for r in invalid:
            for u in members[r]:
                for k in range(indptr[u], indptr[u + 1]):
                    e = eid[k]
                    if full[e]:
                        continue
                    v = nbr[k]
                    if active[v] and find(v) == r:
                        continue
                    rate[e] = rate.get(e, 0) + 1
        delta = INF
        for e in sorted(rate):
            step = (weights[e] - growth[e]) / rate[e]
            if step < delta:
                delta = step
        dual += delta * len(invalid)
        newly = []
        for e in sorted(rate):
            growth[e] += delta * rate[e]
            if weights[e] - growth[e] <= _GROW_TOL * max(1.0, weights[e]):
                growth[e] = weights[e]
                full[e] = True
                newly.append(e)
        for e in newly:
            a, b = eu[e], ev[e]
            active[a] = active[b] = True
            union(a, b)

    root = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        if active[u]:
            root[u] = find(u)
    return np.array(growth, dtype=np.float64), root, dual


def uf_peel(indptr, nbr, eid, full, root, defects, num_detectors):
    """Peel a spanning forest of fully grown edges.

    Returns ``(correction_edges, pairs)`` where each pair is ``(a, b)`` with
    ``b`` a defect or a boundary node.
    """
    n = len(indptr) - 1
    visited = [False] * n
    tree_parent = [-1] * n
    tree_edge = [-1] * n
    order = []
    starts = [u for u in range(num_detectors, n) if root[u] >= 0]
    starts += [u for u in range(num_detectors) if root[u] >= 0]
    for s in starts:
        if visited[s]:
            continue
        visited[s] = True
        head = len(order)
        order.append(s)
        while head < len(order):
            u = order[head]
            head += 1
            if u >= num_detectors and u != s:
                continue
            for k in range(indptr[u], indptr[u + 1]):
                e = eid[k]
                v = nbr[k]
                if not full[e] or visited[v]:
                    continue
                if v >= num_detectors:
                    # Boundary nodes are roots of their own trees.
                    continue
                visited[v] = True
                tree_parent[v] = u
                tree_edge[v] = e
                order.append(v)
    token = [-1] * n
    for u in defects:
        token[u] = u
    correction = []
    pairs = []
    for v in reversed(order):
        if token[v] < 0 or tree_parent[v] < 0:
            continue
        p = tree_parent[v]
        correction.append(tree_edge[v])
        t = token[v]
        token[v] = -1
        if p >= num_detectors:
            pairs.append((t, p))
        elif token[p] >= 0:
            pairs.append((token[p], t))
            token[p] = -1
        else:
            token[p] = t
    for v in order:
        if token[v] >= 0:
            raise RuntimeError("peeling left an unmatched defect")
    return np.array(sorted(correction), dtype=np.int64), pairs


# --------------------------------------------------------------------------
# Belief propagation
# --------------------------------------------------------------------------

_TANH_CLIP = 1.0 - 1e-15


def bp_decode(chk_ptr, chk_var, var_ptr, var_edge, prior_llr, syndrome, max_iters, damping, tol=-1.0):
    """Flooding sum-product decoding in the log-likelihood-ratio domain.

    Edges are numbered in check-major order: edge ``e`` of check ``c`` lies in
    ``chk_ptr[c] .. chk_ptr[c + 1]`` and joins variable ``chk_var[e]``.
    ``var_edge[var_ptr[v] .. var_ptr[v + 1]]`` lists the edges of variable
    ``v``.  Check-to-variable messages are damped from the second iteration
    on.  Stops after ``max_iters`` or once the hard decision has stayed the
    same for two consecutive iterations; a non-negative ``tol`` additionally
    requires the largest posterior change of the last iteration to be at
    most ``tol``.

    Returns ``(posterior_llr, iterations, converged)``.
    """
    nchk = len(chk_ptr) - 1
    nvar = len(var_ptr) - 1
    nedge = len(chk_var)
    prior = [float(x) for x in prior_llr]
    v2c = [prior[chk_var[e]] for e in range(nedge)]
    c2v = [0.0] * nedge
    post = list(prior)
    hard = [x < 0.0 for x in post]
    stable = 0
    it = 0
    converged = False
    while it < max_iters:
        it += 1
        for c in range(nchk):
            lo, hi = chk_ptr[c], chk_ptr[c + 1]
            deg = hi - lo
            t = [math.tanh(0.5 * v2c[e]) for e in range(lo, hi)]
            prefix = [1.0] * (deg + 1)
            for k in range(deg):
                prefix[k + 1] = prefix[k] * t[k]
            suffix = 1.0
            sign = -1.0 if syndrome[c] else 1.0
            for k in range(deg - 1, -1, -1):
                x = sign * prefix[k] * suffix
                if x > _TANH_CLIP:
                    x = _TANH_CLIP
                elif x < -_TANH_CLIP:
                    x = -_TANH_CLIP
                msg = 2.0 * math.atanh(x)
                e = lo + k
                if it > 1:
                    msg = damping * c2v[e] + (1.0 - damping) * msg
                c2v[e] = msg
                suffix *= t[k]
        changed = False
        delta = 0.0
        for v in range(nvar):
            total = prior[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                total += c2v[var_edge[k]]
            delta = max(delta, abs(total - post[v]))
            post[v] = total
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[k]
                v2c[e] = total - c2v[e]
            h = total < 0.0
            if h != hard[v]:
                changed = True
                hard[v] = h
        stable = 0 if changed else stable + 1
        if stable >= 2 and (tol < 0.0 or delta <= tol):
            converged = True
            break
    return np.array(post, dtype=np.float64), it, converged


# --------------------------------------------------------------------------
# Backlog simulators.  Time is measured in syndrome rounds (units of the
# round time).  Each trajectory draws from its own Philox stream; every
# random decision consumes exactly one draw, in the same order as the
# compiled kernels.
# --------------------------------------------------------------------------


def trajectory_rng(seed, traj):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=seed | (int(traj) << 64)))


def _finish(record, rs, switches, diverged, steps, total):
    r = np.array(rs, dtype=np.float64) if record else np.zeros(0)
    sw = np.array(switches, dtype=np.int64) if record else np.zeros(0, dtype=np.int64)
    return r, sw, diverged, steps, total


def naive_run(f_w, f_s, tc_w, tc_s, r_op, d, gamma, r0, n_gate, cap, seed, traj, record, force=0):
    """Interval-by-interval decoding: interval ``i`` decodes the ``r_{i-1}`` rounds
    gathered during the previous one.  Returns
    ``(r, switch_steps, diverged, steps, sum_r)``."""
    rng = trajectory_rng(seed, traj)
    r = float(r0)
    rs = [r] if record else None
    switches = []
    total = 0.0
    for i in range(1, n_gate + 1):
        u = rng.random()
        p = gamma * r / d
        if p > 1.0:
            p = 1.0
        if i <= force or u < p:
            r = tc_s + f_s * r + r_op
            if record:
                switches.append(i)
        else:
            r = tc_w + f_w * r + r_op
        if record:
            rs.append(r)
        if r > cap:
            return _finish(record, rs, switches, True, i, total)
        total += r
    return _finish(record, rs, switches, False, n_gate, total)


def sliding_run(f_w, f_s, tc_w, tc_s, r_op, d, gamma, r_com, r_buf, r0, n_gate, cap, seed, traj, record, force=0):
    """Single decoder working through overlapping windows of ``r_com + r_buf`` rounds.

    A switched window is re-decoded at strong rates, stalling the queue.
    Before each logical measurement the remaining ``R`` uncommitted rounds
    are decoded as one final segment."""
    rng = trajectory_rng(seed, traj)
    win = r_com + r_buf
    q_win = gamma * r_com / d
    if q_win > 1.0:
        q_win = 1.0
    r = float(r0)
    rs = [r] if record else None
    switches = []
    total = 0.0
    t_free = 0.0
    pos = 0.0
    meas = 0.0
    nwin = 0
    for i in range(1, n_gate + 1):
        meas += r
        while pos + win <= meas:
            start = pos + win + tc_w
            if t_free > start:
                start = t_free
            dur = f_w * win
            u = rng.random()
            nwin += 1
            if nwin <= force or u < q_win:
                dur += tc_s + f_s * win
                if record:
                    switches.append(i)
            t_free = start + dur
            pos += r_com
        seg = meas - pos
        start = meas + tc_w
        if t_free > start:
            start = t_free
        dur = f_w * seg
        p = gamma * seg / d
        if p > 1.0:
            p = 1.0
        u = rng.random()
        if u < p:
            dur += tc_s + f_s * seg
            if record:
                switches.append(i)
        t_free = start + dur
        pos = meas
        r = (t_free - meas) + r_op
        if record:
            rs.append(r)
        if r > cap:
            return _finish(record, rs, switches, True, i, total)
        total += r
    return _finish(record, rs, switches, False, n_gate, total)


def double_run(tc_w, tc_s, f_s, r_op, d, gamma, r_com, r_buf, alpha, r0, n_gate, cap, seed, traj, record, force=0):
    """Weak decoder keeps pace, committing a window every ``r_com`` rounds; a
    switched window queues ``f_s * (r_com + alpha * r_buf)`` of strong work,
    served first-in first-out at unit rate.  Switch windows are drawn as
    geometric gaps."""
    rng = trajectory_rng(seed, traj)
    q = gamma * r_com / d
    if q > 1.0:
        q = 1.0
    job = f_s * (r_com + alpha * r_buf)
    base = r_op + r_com + r_buf + tc_w
    r = float(r0)
    rs = [r] if record else None
    switches = []
    total = 0.0
    now = 0.0
    work = 0.0
    t_last = 0.0
    if force > 0:
        next_k = 1
    elif q > 0.0:
        next_k = int(rng.geometric(q))
    else:
        next_k = -1
    issued = 0
    for i in range(1, n_gate + 1):
        now += r
        while next_k > 0 and next_k * r_com <= now:
            t = next_k * r_com
            work -= t - t_last
            if work < 0.0:
                work = 0.0
            work += job
            t_last = t
            issued += 1
            if record:
                switches.append(i)
            if issued < force:
                next_k += 1
            elif q > 0.0:
                next_k += int(rng.geometric(q))
            else:
                next_k = -1
        work -= now - t_last
        if work < 0.0:
            work = 0.0
        t_last = now
        r = base + (tc_s + work if work > 0.0 else 0.0)
        if record:
            rs.append(r)
        if r > cap:
            return _finish(record, rs, switches, True, i, total)
        total += r
    return _finish(record, rs, switches, False, n_gate, total)
