# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled kernels.

Line-for-line ports of :mod:`decswitch._fallback`: same arguments, same
floating-point operation order and the same random streams, so both
backends return identical results.
"""

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport INFINITY, atanh, fabs, tanh
from libc.stdint cimport int64_t
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.vector cimport vector
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_geometric

ctypedef int64_t i64


cdef inline const i64[::1] _i64(x):
    return np.ascontiguousarray(x, dtype=np.int64)


cdef inline const double[::1] _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


# --------------------------------------------------------------------------
# Shortest paths
# --------------------------------------------------------------------------

cdef void _dijkstra(const i64[::1] indptr, const i64[::1] nbr, const i64[::1] eid,
                    const double[::1] w, i64 source, i64 nd,
                    double[::1] dist, i64[::1] pred) noexcept nogil:
    cdef i64 n = indptr.shape[0] - 1
    cdef vector[char] done = vector[char](n, 0)
    # Max-heap of (-dist, -node) pops like a min-heap of (dist, node).
    cdef priority_queue[pair[double, i64]] heap
    cdef pair[double, i64] top
    cdef i64 i, u, v, e, k
    cdef double du, nd_
    for i in range(n):
        dist[i] = INFINITY
        pred[i] = -1
    dist[source] = 0.0
    heap.push(pair[double, i64](-0.0, -source))
    while not heap.empty():
        top = heap.top()
        heap.pop()
        du = -top.first
        u = -top.second
        if done[u]:
            continue
        done[u] = 1
        if u >= nd and u != source:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = nbr[k]
            e = eid[k]
            nd_ = du + w[e]
            if nd_ < dist[v]:
                dist[v] = nd_
                pred[v] = e
                heap.push(pair[double, i64](-nd_, -v))


def dijkstra(indptr, nbr, eid, weights, source, num_detectors):
    cdef const i64[::1] ip = _i64(indptr)
    cdef i64 n = ip.shape[0] - 1
    dist = np.empty(n, dtype=np.float64)
    pred = np.empty(n, dtype=np.int64)
    _dijkstra(ip, _i64(nbr), _i64(eid), _f64(weights), source, num_detectors, dist, pred)
    return dist, pred


def multi_dijkstra(indptr, nbr, eid, weights, sources, num_detectors):
    cdef const i64[::1] ip = _i64(indptr)
    cdef const i64[::1] nb = _i64(nbr)
    cdef const i64[::1] ed = _i64(eid)
    cdef const double[::1] w = _f64(weights)
    cdef const i64[::1] src = _i64(sources)
    cdef i64 n = ip.shape[0] - 1
    cdef i64 m = src.shape[0]
    dist = np.empty((m, n), dtype=np.float64)
    pred = np.empty((m, n), dtype=np.int64)
    cdef double[:, ::1] dv = dist
    cdef i64[:, ::1] pv = pred
    cdef i64 k
    cdef i64 nd = num_detectors
    with nogil:
        for k in range(m):
            _dijkstra(ip, nb, ed, w, src[k], nd, dv[k], pv[k])
    return dist, pred


# --------------------------------------------------------------------------
# Exact maximum-weight matching (Edmonds' blossom algorithm, integer weights)
# --------------------------------------------------------------------------

cdef inline int _wrap(int j, int n) noexcept nogil:
    return j + n if j < 0 else j


cdef int _index(vector[int]& v, int x) noexcept nogil:
    cdef size_t i
    for i in range(v.size()):
        if v[i] == x:
            return <int>i
    return -1


cdef class _Matcher:
    cdef int nvertex, nedge
    cdef vector[int] ei, ej
    cdef vector[i64] ew
    cdef vector[int] endpoint
    cdef vector[vector[int]] neighbend
    cdef vector[int] mate, label, labelend, inblossom, blossomparent, blossombase, bestedge
    cdef vector[int] unused, queue
    cdef vector[vector[int]] childs, endps, bbe
    cdef vector[char] has_bbe, allowedge
    cdef vector[i64] dualvar

    cdef inline i64 slack(self, int k) noexcept:
        return self.dualvar[self.ei[k]] + self.dualvar[self.ej[k]] - 2 * self.ew[k]

    cdef void leaves(self, int b, vector[int]& out) noexcept:
        cdef vector[int] stack
        cdef int t, idx
        out.clear()
        if b < self.nvertex:
            out.push_back(b)
            return
        stack.push_back(b)
        while stack.size():
            t = stack.back()
            stack.pop_back()
            if t < self.nvertex:
                out.push_back(t)
            else:
                for idx in range(<int>self.childs[t].size() - 1, -1, -1):
                    stack.push_back(self.childs[t][idx])

    cdef void assign_label(self, int w, int t, int p) noexcept:
        cdef int b, base
        cdef vector[int] lv
        cdef size_t i
        while True:
            b = self.inblossom[w]
            self.label[w] = t
            self.label[b] = t
            self.labelend[w] = p
            self.labelend[b] = p
            self.bestedge[w] = -1
            self.bestedge[b] = -1
            if t == 1:
                self.leaves(b, lv)
                for i in range(lv.size()):
                    self.queue.push_back(lv[i])
                return
            base = self.blossombase[b]
            p = self.mate[base] ^ 1
            w = self.endpoint[self.mate[base]]
            t = 1

    cdef int scan_blossom(self, int v, int w) noexcept:
        cdef vector[int] path
        cdef int base = -1
        cdef int b, tmp
        cdef size_t i
        while v != -1 or w != -1:
            b = self.inblossom[v]
            if self.label[b] & 4:
                base = self.blossombase[b]
                break
            path.push_back(b)
            self.label[b] = 5
            if self.labelend[b] == -1:
                v = -1
            else:
                v = self.endpoint[self.labelend[b]]
                b = self.inblossom[v]
                v = self.endpoint[self.labelend[b]]
            if w != -1:
                tmp = v
                v = w
                w = tmp
        for i in range(path.size()):
            self.label[path[i]] = 1
        return base

    cdef void add_blossom(self, int base, int k) noexcept:
        cdef int v = self.ei[k]
        cdef int w = self.ej[k]
        cdef int bb = self.inblossom[base]
        cdef int bv = self.inblossom[v]
        cdef int bw = self.inblossom[w]
        cdef int b = self.unused.back()
        cdef vector[int] path, eps, lv, lv2, bestedgeto
        cdef size_t i, a, c, q
        cdef int kk, ii, jj, bj, x
        self.unused.pop_back()
        self.blossombase[b] = base
        self.blossomparent[b] = -1
        self.blossomparent[bb] = b
        while bv != bb:
            self.blossomparent[bv] = b
            path.push_back(bv)
            eps.push_back(self.labelend[bv])
            v = self.endpoint[self.labelend[bv]]
            bv = self.inblossom[v]
        path.push_back(bb)
        _reverse(path)
        _reverse(eps)
        eps.push_back(2 * k)
        while bw != bb:
            self.blossomparent[bw] = b
            path.push_back(bw)
            eps.push_back(self.labelend[bw] ^ 1)
            w = self.endpoint[self.labelend[bw]]
            bw = self.inblossom[w]
        self.childs[b] = path
        self.endps[b] = eps
        self.label[b] = 1
        self.labelend[b] = self.labelend[bb]
        self.dualvar[b] = 0
        self.leaves(b, lv)
        for i in range(lv.size()):
            x = lv[i]
            if self.label[self.inblossom[x]] == 2:
                self.queue.push_back(x)
            self.inblossom[x] = b
        bestedgeto.assign(2 * self.nvertex, -1)
        for i in range(path.size()):
            bv = path[i]
            if not self.has_bbe[bv]:
                self.leaves(bv, lv2)
                for a in range(lv2.size()):
                    x = lv2[a]
                    for c in range(self.neighbend[x].size()):
                        kk = self.neighbend[x][c] // 2
                        self._consider(kk, b, bestedgeto)
            else:
                for q in range(self.bbe[bv].size()):
                    self._consider(self.bbe[bv][q], b, bestedgeto)
            self.bbe[bv].clear()
            self.has_bbe[bv] = 0
            self.bestedge[bv] = -1
        self.bbe[b].clear()
        for i in range(bestedgeto.size()):
            if bestedgeto[i] != -1:
                self.bbe[b].push_back(bestedgeto[i])
        self.has_bbe[b] = 1
        self.bestedge[b] = -1
        for i in range(self.bbe[b].size()):
            kk = self.bbe[b][i]
            if self.bestedge[b] == -1 or self.slack(kk) < self.slack(self.bestedge[b]):
                self.bestedge[b] = kk

    cdef inline void _consider(self, int kk, int b, vector[int]& bestedgeto) noexcept:
        cdef int i = self.ei[kk]
        cdef int j = self.ej[kk]
        cdef int bj
        if self.inblossom[j] == b:
            j = i
        bj = self.inblossom[j]
        if bj != b and self.label[bj] == 1 and (
            bestedgeto[bj] == -1 or self.slack(kk) < self.slack(bestedgeto[bj])
        ):
            bestedgeto[bj] = kk

    cdef void expand_blossom(self, int b, bint endstage) noexcept:
        cdef vector[int] ch = self.childs[b]
        cdef vector[int] ep = self.endps[b]
        cdef vector[int] lv
        cdef size_t i, a
        cdef int s, n, j, jstep, endptrick, p, entrychild, bv, found, x
        for i in range(ch.size()):
            s = ch[i]
            self.blossomparent[s] = -1
            if s < self.nvertex:
                self.inblossom[s] = s
            elif endstage and self.dualvar[s] == 0:
                self.expand_blossom(s, endstage)
            else:
                self.leaves(s, lv)
                for a in range(lv.size()):
                    self.inblossom[lv[a]] = s
        if not endstage and self.label[b] == 2:
            n = <int>ch.size()
            entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]]
            j = _index(ch, entrychild)
            if j & 1:
                j -= n
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = self.labelend[b]
            while j != 0:
                self.label[self.endpoint[p ^ 1]] = 0
                self.label[self.endpoint[ep[_wrap(j - endptrick, n)] ^ endptrick ^ 1]] = 0
                self.assign_label(self.endpoint[p ^ 1], 2, p)
                self.allowedge[ep[_wrap(j - endptrick, n)] // 2] = 1
                j += jstep
                p = ep[_wrap(j - endptrick, n)] ^ endptrick
                self.allowedge[p // 2] = 1
                j += jstep
            bv = ch[_wrap(j, n)]
            self.label[self.endpoint[p ^ 1]] = 2
            self.label[bv] = 2
            self.labelend[self.endpoint[p ^ 1]] = p
            self.labelend[bv] = p
            self.bestedge[bv] = -1
            j += jstep
            while ch[_wrap(j, n)] != entrychild:
                bv = ch[_wrap(j, n)]
                if self.label[bv] == 1:
                    j += jstep
                    continue
                found = -1
                self.leaves(bv, lv)
                for a in range(lv.size()):
                    if self.label[lv[a]] != 0:
                        found = lv[a]
                        break
                if found >= 0:
                    self.label[found] = 0
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0
                    self.assign_label(found, 2, self.labelend[found])
                j += jstep
        self.label[b] = -1
        self.labelend[b] = -1
        self.childs[b].clear()
        self.endps[b].clear()
        self.blossombase[b] = -1
        self.bbe[b].clear()
        self.has_bbe[b] = 0
        self.bestedge[b] = -1
        self.unused.push_back(b)

    cdef void augment_blossom(self, int b, int v) noexcept:
        cdef int t = v
        cdef int i, j, n, jstep, endptrick, p
        cdef vector[int] rot_c, rot_e
        cdef size_t a
        while self.blossomparent[t] != b:
            t = self.blossomparent[t]
        if t >= self.nvertex:
            self.augment_blossom(t, v)
        n = <int>self.childs[b].size()
        i = _index(self.childs[b], t)
        j = i
        if i & 1:
            j -= n
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = self.childs[b][_wrap(j, n)]
            p = self.endps[b][_wrap(j - endptrick, n)] ^ endptrick
            if t >= self.nvertex:
                self.augment_blossom(t, self.endpoint[p])
            j += jstep
            t = self.childs[b][_wrap(j, n)]
            if t >= self.nvertex:
                self.augment_blossom(t, self.endpoint[p ^ 1])
            self.mate[self.endpoint[p]] = p ^ 1
            self.mate[self.endpoint[p ^ 1]] = p
        for a in range(n):
            rot_c.push_back(self.childs[b][(i + a) % n])
            rot_e.push_back(self.endps[b][(i + a) % n])
        self.childs[b] = rot_c
        self.endps[b] = rot_e
        self.blossombase[b] = self.blossombase[self.childs[b][0]]

    cdef void augment_matching(self, int k) noexcept:
        cdef int s, p, bs, t, bt, j, side
        for side in range(2):
            if side == 0:
                s = self.ei[k]
                p = 2 * k + 1
            else:
                s = self.ej[k]
                p = 2 * k
            while True:
                bs = self.inblossom[s]
                if bs >= self.nvertex:
                    self.augment_blossom(bs, s)
                self.mate[s] = p
                if self.labelend[bs] == -1:
                    break
                t = self.endpoint[self.labelend[bs]]
                bt = self.inblossom[t]
                s = self.endpoint[self.labelend[bt]]
                j = self.endpoint[self.labelend[bt] ^ 1]
                if bt >= self.nvertex:
                    self.augment_blossom(bt, j)
                self.mate[j] = self.labelend[bt]
                p = self.labelend[bt] ^ 1

    cdef list run(self, list edges, bint maxcardinality):
        cdef int n = 0
        cdef int k, i, j, v, w, p, b, base, lb, kslack_set
        cdef i64 wt, maxweight = 0, kslack, delta, dd
        cdef int deltatype, deltaedge, deltablossom, stage
        cdef bint augmented
        cdef size_t a
        self.nedge = len(edges)
        for k in range(self.nedge):
            i, j, wt = edges[k]
            self.ei.push_back(i)
            self.ej.push_back(j)
            self.ew.push_back(wt)
            n = max(n, i + 1, j + 1)
            if wt > maxweight:
                maxweight = wt
        self.nvertex = n
        for k in range(self.nedge):
            self.endpoint.push_back(self.ei[k])
            self.endpoint.push_back(self.ej[k])
        self.neighbend.resize(n)
        for k in range(self.nedge):
            self.neighbend[self.ei[k]].push_back(2 * k + 1)
            self.neighbend[self.ej[k]].push_back(2 * k)
        self.mate.assign(n, -1)
        self.label.assign(2 * n, 0)
        self.labelend.assign(2 * n, -1)
        self.inblossom.resize(n)
        for v in range(n):
            self.inblossom[v] = v
        self.blossomparent.assign(2 * n, -1)
        self.childs.resize(2 * n)
        self.endps.resize(2 * n)
        self.bbe.resize(2 * n)
        self.has_bbe.assign(2 * n, 0)
        self.blossombase.assign(2 * n, -1)
        for v in range(n):
            self.blossombase[v] = v
        self.bestedge.assign(2 * n, -1)
        for b in range(n, 2 * n):
            self.unused.push_back(b)
        self.dualvar.assign(2 * n, 0)
        for v in range(n):
            self.dualvar[v] = maxweight
        self.allowedge.assign(self.nedge, 0)

        for stage in range(n):
            self.label.assign(2 * n, 0)
            self.bestedge.assign(2 * n, -1)
            for b in range(n, 2 * n):
                self.bbe[b].clear()
                self.has_bbe[b] = 0
            self.allowedge.assign(self.nedge, 0)
            self.queue.clear()
            for v in range(n):
                if self.mate[v] == -1 and self.label[self.inblossom[v]] == 0:
                    self.assign_label(v, 1, -1)
            augmented = False
            while True:
                while self.queue.size() and not augmented:
                    v = self.queue.back()
                    self.queue.pop_back()
                    for a in range(self.neighbend[v].size()):
                        p = self.neighbend[v][a]
                        k = p // 2
                        w = self.endpoint[p]
                        if self.inblossom[v] == self.inblossom[w]:
                            continue
                        kslack = 0
                        if not self.allowedge[k]:
                            kslack = self.slack(k)
                            if kslack <= 0:
                                self.allowedge[k] = 1
                        if self.allowedge[k]:
                            if self.label[self.inblossom[w]] == 0:
                                self.assign_label(w, 2, p ^ 1)
                            elif self.label[self.inblossom[w]] == 1:
                                base = self.scan_blossom(v, w)
                                if base >= 0:
                                    self.add_blossom(base, k)
                                else:
                                    self.augment_matching(k)
                                    augmented = True
                                    break
                            elif self.label[w] == 0:
                                self.label[w] = 2
                                self.labelend[w] = p ^ 1
                        elif self.label[self.inblossom[w]] == 1:
                            b = self.inblossom[v]
                            if self.bestedge[b] == -1 or kslack < self.slack(self.bestedge[b]):
                                self.bestedge[b] = k
                        elif self.label[w] == 0:
                            if self.bestedge[w] == -1 or kslack < self.slack(self.bestedge[w]):
                                self.bestedge[w] = k
                if augmented:
                    break
                deltatype = -1
                delta = 0
                deltaedge = 0
                deltablossom = 0
                if not maxcardinality:
                    deltatype = 1
                    delta = self.dualvar[0]
                    for v in range(n):
                        if self.dualvar[v] < delta:
                            delta = self.dualvar[v]
                for v in range(n):
                    if self.label[self.inblossom[v]] == 0 and self.bestedge[v] != -1:
                        dd = self.slack(self.bestedge[v])
                        if deltatype == -1 or dd < delta:
                            delta = dd
                            deltatype = 2
                            deltaedge = self.bestedge[v]
                for b in range(2 * n):
                    if self.blossomparent[b] == -1 and self.label[b] == 1 and self.bestedge[b] != -1:
                        dd = self.slack(self.bestedge[b]) // 2
                        if deltatype == -1 or dd < delta:
                            delta = dd
                            deltatype = 3
                            deltaedge = self.bestedge[b]
                for b in range(n, 2 * n):
                    if (
                        self.blossombase[b] >= 0
                        and self.blossomparent[b] == -1
                        and self.label[b] == 2
                        and (deltatype == -1 or self.dualvar[b] < delta)
                    ):
                        delta = self.dualvar[b]
                        deltatype = 4
                        deltablossom = b
                if deltatype == -1:
                    deltatype = 1
                    delta = self.dualvar[0]
                    for v in range(n):
                        if self.dualvar[v] < delta:
                            delta = self.dualvar[v]
                    if delta < 0:
                        delta = 0
                for v in range(n):
                    lb = self.label[self.inblossom[v]]
                    if lb == 1:
                        self.dualvar[v] -= delta
                    elif lb == 2:
                        self.dualvar[v] += delta
                for b in range(n, 2 * n):
                    if self.blossombase[b] >= 0 and self.blossomparent[b] == -1:
                        if self.label[b] == 1:
                            self.dualvar[b] += delta
                        elif self.label[b] == 2:
                            self.dualvar[b] -= delta
                if deltatype == 1:
                    break
                if deltatype == 2:
                    self.allowedge[deltaedge] = 1
                    i = self.ei[deltaedge]
                    j = self.ej[deltaedge]
                    if self.label[self.inblossom[i]] == 0:
                        i = j
                    self.queue.push_back(i)
                elif deltatype == 3:
                    self.allowedge[deltaedge] = 1
                    self.queue.push_back(self.ei[deltaedge])
                else:
                    self.expand_blossom(deltablossom, False)
            if not augmented:
                break
            for b in range(n, 2 * n):
                if (
                    self.blossomparent[b] == -1
                    and self.blossombase[b] >= 0
                    and self.label[b] == 1
                    and self.dualvar[b] == 0
                ):
                    self.expand_blossom(b, True)
        return [self.endpoint[self.mate[v]] if self.mate[v] >= 0 else -1 for v in range(n)]


cdef void _reverse(vector[int]& v) noexcept:
    cdef size_t i = 0
    cdef size_t j = v.size()
    cdef int t
    while i + 1 < j:
        j -= 1
        t = v[i]
        v[i] = v[j]
        v[j] = t
        i += 1


def max_weight_matching(edges, maxcardinality=False):
    if not edges:
        return []
    return _Matcher().run(list(edges), maxcardinality)


def min_weight_perfect_matching(wmat):
    cdef const i64[:, ::1] wm = np.ascontiguousarray(wmat, dtype=np.int64)
    cdef int n = wm.shape[0]
    cdef int i, j
    cdef i64 top
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    top = int(np.max(wmat)) + 1
    edges = [(i, j, 2 * (top - wm[i, j])) for i in range(n) for j in range(i + 1, n)]
    return np.array(_Matcher().run(edges, True), dtype=np.int64)


# --------------------------------------------------------------------------
# Union-Find cluster growth
# --------------------------------------------------------------------------

cdef double _GROW_TOL = 1e-12


cdef inline i64 _find(vector[i64]& parent, i64 x) noexcept nogil:
    cdef i64 root = x
    cdef i64 nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


def uf_grow(indptr, nbr, eid, eu, ev, weights, defects, num_detectors):
    cdef const i64[::1] ip = _i64(indptr)
    cdef const i64[::1] nb = _i64(nbr)
    cdef const i64[::1] ed = _i64(eid)
    cdef const i64[::1] u_ = _i64(eu)
    cdef const i64[::1] v_ = _i64(ev)
    cdef const double[::1] w = _f64(weights)
    cdef const i64[::1] dets = _i64(defects)
    cdef i64 n = ip.shape[0] - 1
    cdef i64 nedges = w.shape[0]
    cdef i64 nd = num_detectors
    cdef vector[i64] parent = vector[i64](n)
    cdef vector[i64] rank = vector[i64](n, 0)
    cdef vector[char] parity = vector[char](n, 0)
    cdef vector[char] boundary = vector[char](n, 0)
    cdef vector[vector[i64]] members = vector[vector[i64]](n)
    cdef vector[char] active = vector[char](n, 0)
    cdef vector[char] mark = vector[char](n, 0)
    cdef vector[int] rate = vector[int](nedges, 0)
    cdef vector[char] full = vector[char](nedges, 0)
    cdef vector[i64] roots, invalid, touched, newly
    growth_arr = np.zeros(nedges, dtype=np.float64)
    cdef double[::1] growth = growth_arr
    cdef double dual = 0.0
    cdef double delta, step
    cdef i64 u, x, r, e, k, a, b, ra, rb, tmp
    cdef size_t i, m
    for u in range(n):
        parent[u] = u
        if u >= nd:
            boundary[u] = 1
        members[u].push_back(u)
    for i in range(<size_t>dets.shape[0]):
        u = dets[i]
        parity[u] ^= 1
        active[u] = 1
    with nogil:
        while True:
            roots.clear()
            for u in range(n):
                if active[u]:
                    r = _find(parent, u)
                    if not mark[r]:
                        mark[r] = 1
                        roots.push_back(r)
            sort(roots.begin(), roots.end())
            invalid.clear()
            for i in range(roots.size()):
                mark[roots[i]] = 0
                if parity[roots[i]] and not boundary[roots[i]]:
                    invalid.push_back(roots[i])
            if invalid.size() == 0:
                break
            touched.clear()
            for i in range(invalid.size()):
                r = invalid[i]
                for m in range(members[r].size()):
                    x = members[r][m]
                    for k in range(ip[x], ip[x + 1]):
                        e = ed[k]
                        if full[e]:
                            continue
                        if active[nb[k]] and _find(parent, nb[k]) == r:
                            continue
                        if rate[e] == 0:
                            touched.push_back(e)
                        rate[e] += 1
            if touched.size() == 0:
                break
            sort(touched.begin(), touched.end())
            delta = INFINITY
            for i in range(touched.size()):
                e = touched[i]
                step = (w[e] - growth[e]) / rate[e]
                if step < delta:
                    delta = step
            dual += delta * invalid.size()
            newly.clear()
            for i in range(touched.size()):
                e = touched[i]
                growth[e] += delta * rate[e]
                if w[e] - growth[e] <= _GROW_TOL * (w[e] if w[e] > 1.0 else 1.0):
                    growth[e] = w[e]
                    full[e] = 1
                    newly.push_back(e)
                rate[e] = 0
            for i in range(newly.size()):
                e = newly[i]
                a = u_[e]
                b = v_[e]
                active[a] = 1
                active[b] = 1
                ra = _find(parent, a)
                rb = _find(parent, b)
                if ra == rb:
                    continue
                if rank[ra] < rank[rb] or (rank[ra] == rank[rb] and ra > rb):
                    tmp = ra
                    ra = rb
                    rb = tmp
                parent[rb] = ra
                if rank[ra] == rank[rb]:
                    rank[ra] += 1
                parity[ra] ^= parity[rb]
                if boundary[rb]:
                    boundary[ra] = 1
                for m in range(members[rb].size()):
                    members[ra].push_back(members[rb][m])
                members[rb].clear()
    if touched.size() == 0 and invalid.size() != 0:
        raise RuntimeError("an invalid cluster cannot grow")
    root = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] rv = root
    for u in range(n):
        if active[u]:
            rv[u] = _find(parent, u)
    return growth_arr, root, dual


def uf_peel(indptr, nbr, eid, full, root, defects, num_detectors):
    cdef const i64[::1] ip = _i64(indptr)
    cdef const i64[::1] nb = _i64(nbr)
    cdef const i64[::1] ed = _i64(eid)
    cdef const unsigned char[::1] fl = np.ascontiguousarray(full, dtype=np.uint8)
    cdef const i64[::1] rt = _i64(root)
    cdef const i64[::1] dets = _i64(defects)
    cdef i64 n = ip.shape[0] - 1
    cdef i64 nd = num_detectors
    cdef vector[char] visited = vector[char](n, 0)
    cdef vector[i64] tparent = vector[i64](n, -1)
    cdef vector[i64] tedge = vector[i64](n, -1)
    cdef vector[i64] order, starts
    cdef vector[i64] token = vector[i64](n, -1)
    cdef vector[i64] correction
    cdef i64 u, s, v, e, k, p, t
    cdef size_t head, i
    for u in range(nd, n):
        if rt[u] >= 0:
            starts.push_back(u)
    for u in range(nd):
        if rt[u] >= 0:
            starts.push_back(u)
    for i in range(starts.size()):
        s = starts[i]
        if visited[s]:
            continue
        visited[s] = 1
        head = order.size()
        order.push_back(s)
        while head < order.size():
            u = order[head]
            head += 1
            if u >= nd and u != s:
                continue
            for k in range(ip[u], ip[u + 1]):
                e = ed[k]
                v = nb[k]
                if not fl[e] or visited[v]:
                    continue
                if v >= nd:
                    continue
                visited[v] = 1
                tparent[v] = u
                tedge[v] = e
                order.push_back(v)
    for i in range(<size_t>dets.shape[0]):
        token[dets[i]] = dets[i]
    pairs = []
    cdef Py_ssize_t j
    for j in range(<Py_ssize_t>order.size() - 1, -1, -1):
        v = order[j]
        if token[v] < 0 or tparent[v] < 0:
            continue
        p = tparent[v]
        correction.push_back(tedge[v])
        t = token[v]
        token[v] = -1
        if p >= nd:
            pairs.append((t, p))
        elif token[p] >= 0:
            pairs.append((token[p], t))
            token[p] = -1
        else:
            token[p] = t
    for i in range(order.size()):
        if token[order[i]] >= 0:
            raise RuntimeError("peeling left an unmatched defect")
    sort(correction.begin(), correction.end())
    return np.array([correction[i] for i in range(correction.size())], dtype=np.int64), pairs


# --------------------------------------------------------------------------
# Belief propagation
# --------------------------------------------------------------------------

cdef double _TANH_CLIP = 1.0 - 1e-15


def bp_decode(chk_ptr, chk_var, var_ptr, var_edge, prior_llr, syndrome, max_iters, damping, tol=-1.0):
    cdef const i64[::1] cp = _i64(chk_ptr)
    cdef const i64[::1] cv = _i64(chk_var)
    cdef const i64[::1] vp = _i64(var_ptr)
    cdef const i64[::1] ve = _i64(var_edge)
    cdef const double[::1] prior = _f64(prior_llr)
    cdef const unsigned char[::1] syn = np.ascontiguousarray(syndrome, dtype=np.uint8)
    cdef i64 nchk = cp.shape[0] - 1
    cdef i64 nvar = vp.shape[0] - 1
    cdef i64 nedge = cv.shape[0]
    cdef int maxit = max_iters
    cdef double damp = damping
    cdef double ctol = tol
    cdef double delta
    cdef vector[double] v2c = vector[double](nedge)
    cdef vector[double] c2v = vector[double](nedge, 0.0)
    cdef vector[double] t, prefix
    cdef vector[char] hard = vector[char](nvar)
    post_arr = np.empty(nvar, dtype=np.float64)
    cdef double[::1] post = post_arr
    cdef i64 c, lo, hi, deg, k, e, v
    cdef double suffix, sign, x, msg, total
    cdef int it = 0
    cdef int stable = 0
    cdef bint converged = False, changed
    cdef char h
    for e in range(nedge):
        v2c[e] = prior[cv[e]]
    for v in range(nvar):
        post[v] = prior[v]
        hard[v] = prior[v] < 0.0
    with nogil:
        while it < maxit:
            it += 1
            for c in range(nchk):
                lo = cp[c]
                hi = cp[c + 1]
                deg = hi - lo
                t.resize(deg)
                prefix.resize(deg + 1)
                for k in range(deg):
                    t[k] = tanh(0.5 * v2c[lo + k])
                prefix[0] = 1.0
                for k in range(deg):
                    prefix[k + 1] = prefix[k] * t[k]
                suffix = 1.0
                sign = -1.0 if syn[c] else 1.0
                for k in range(deg - 1, -1, -1):
                    x = sign * prefix[k] * suffix
                    if x > _TANH_CLIP:
                        x = _TANH_CLIP
                    elif x < -_TANH_CLIP:
                        x = -_TANH_CLIP
                    msg = 2.0 * atanh(x)
                    e = lo + k
                    if it > 1:
                        msg = damp * c2v[e] + (1.0 - damp) * msg
                    c2v[e] = msg
                    suffix *= t[k]
            changed = False
            delta = 0.0
            for v in range(nvar):
                total = prior[v]
                for k in range(vp[v], vp[v + 1]):
                    total += c2v[ve[k]]
                if fabs(total - post[v]) > delta:
                    delta = fabs(total - post[v])
                post[v] = total
                for k in range(vp[v], vp[v + 1]):
                    e = ve[k]
                    v2c[e] = total - c2v[e]
                h = total < 0.0
                if h != hard[v]:
                    changed = True
                    hard[v] = h
            stable = 0 if changed else stable + 1
            if stable >= 2 and (ctol < 0.0 or delta <= ctol):
                converged = True
                break
    return post_arr, it, converged


# --------------------------------------------------------------------------
# Backlog simulators
# --------------------------------------------------------------------------

cdef class _Stream:
    """Philox stream of one trajectory, read through numpy's C interface."""

    cdef object owner
    cdef bitgen_t* rng

    def __cinit__(self, seed, traj):
        seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.owner = np.random.Philox(key=seed | (int(traj) << 64))
        self.rng = <bitgen_t*>PyCapsule_GetPointer(self.owner.capsule, "BitGenerator")

    cdef inline double uniform(self) noexcept:
        return self.rng.next_double(self.rng.state)

    cdef inline i64 geometric(self, double p) noexcept:
        return random_geometric(self.rng, p)


cdef tuple _finish(bint record, vector[double]& rs, vector[i64]& sw, bint diverged, i64 steps, double total):
    if record:
        r = np.array([rs[i] for i in range(rs.size())], dtype=np.float64)
        s = np.array([sw[i] for i in range(sw.size())], dtype=np.int64)
    else:
        r = np.zeros(0)
        s = np.zeros(0, dtype=np.int64)
    return r, s, diverged, steps, total


def naive_run(double f_w, double f_s, double tc_w, double tc_s, double r_op, double d, double gamma,
              double r0, i64 n_gate, double cap, seed, traj, bint record, i64 force=0):
    cdef _Stream st = _Stream(seed, traj)
    cdef double r = r0
    cdef double total = 0.0
    cdef double u, p
    cdef vector[double] rs
    cdef vector[i64] sw
    cdef i64 i
    if record:
        rs.push_back(r)
    for i in range(1, n_gate + 1):
        u = st.uniform()
        p = gamma * r / d
        if p > 1.0:
            p = 1.0
        if i <= force or u < p:
            r = tc_s + f_s * r + r_op
            if record:
                sw.push_back(i)
        else:
            r = tc_w + f_w * r + r_op
        if record:
            rs.push_back(r)
        if r > cap:
            return _finish(record, rs, sw, True, i, total)
        total += r
    return _finish(record, rs, sw, False, n_gate, total)


def sliding_run(double f_w, double f_s, double tc_w, double tc_s, double r_op, double d, double gamma,
                double r_com, double r_buf, double r0, i64 n_gate, double cap, seed, traj, bint record,
                i64 force=0):
    cdef _Stream st = _Stream(seed, traj)
    cdef double win = r_com + r_buf
    cdef double q_win = gamma * r_com / d
    cdef double r = r0
    cdef double total = 0.0, t_free = 0.0, pos = 0.0, meas = 0.0
    cdef double start, dur, u, p, seg
    cdef i64 nwin = 0
    cdef vector[double] rs
    cdef vector[i64] sw
    cdef i64 i
    if q_win > 1.0:
        q_win = 1.0
    if record:
        rs.push_back(r)
    for i in range(1, n_gate + 1):
        meas += r
        while pos + win <= meas:
            start = pos + win + tc_w
            if t_free > start:
                start = t_free
            dur = f_w * win
            u = st.uniform()
            nwin += 1
            if nwin <= force or u < q_win:
                dur += tc_s + f_s * win
                if record:
                    sw.push_back(i)
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
        u = st.uniform()
        if u < p:
            dur += tc_s + f_s * seg
            if record:
                sw.push_back(i)
        t_free = start + dur
        pos = meas
        r = (t_free - meas) + r_op
        if record:
            rs.push_back(r)
        if r > cap:
            return _finish(record, rs, sw, True, i, total)
        total += r
    return _finish(record, rs, sw, False, n_gate, total)


def double_run(double tc_w, double tc_s, double f_s, double r_op, double d, double gamma, double r_com,
               double r_buf, double alpha, double r0, i64 n_gate, double cap, seed, traj, bint record,
               i64 force=0):
    cdef _Stream st = _Stream(seed, traj)
    cdef double q = gamma * r_com / d
    cdef double job, base, r, total = 0.0, now = 0.0, work = 0.0, t_last = 0.0, t
    cdef i64 next_k, issued = 0
    cdef vector[double] rs
    cdef vector[i64] sw
    cdef i64 i
    if q > 1.0:
        q = 1.0
    job = f_s * (r_com + alpha * r_buf)
    base = r_op + r_com + r_buf + tc_w
    r = r0
    if record:
        rs.push_back(r)
    if force > 0:
        next_k = 1
    elif q > 0.0:
        next_k = st.geometric(q)
    else:
        next_k = -1
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
                sw.push_back(i)
            if issued < force:
                next_k += 1
            elif q > 0.0:
                next_k += st.geometric(q)
            else:
                next_k = -1
        work -= now - t_last
        if work < 0.0:
            work = 0.0
        t_last = now
        r = base + (tc_s + work if work > 0.0 else 0.0)
        if record:
            rs.push_back(r)
        if r > cap:
            return _finish(record, rs, sw, True, i, total)
        total += r
    return _finish(record, rs, sw, False, n_gate, total)
