"""Compiled inner loops for grid neighbour search, union-find and window rescoring.

All routines work in *grid order*: points sorted by their flattened cell key,
so that a run of cells along the last axis is a contiguous slice of the
point arrays.  Callers map results back to the caller's point order.
"""

import numpy as np
from numba import njit

_NB = dict(cache=True, nogil=True)


@njit(**_NB)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(**_NB)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return
    # union by size; lower index wins ties so roots are reproducible
    if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]


@njit(**_NB)
def _next_row(row, lo, hi):
    # odometer over the leading m-1 cell axes; returns False when exhausted
    k = row.shape[0] - 1
    while k >= 0:
        if row[k] < hi[k]:
            row[k] += 1
            return True
        row[k] = lo[k]
        k -= 1
    return False


@njit(**_NB)
def _row_slice(keys, row, strides, last_lo, last_hi):
    base = 0
    for k in range(row.shape[0]):
        base += row[k] * strides[k]
    a = np.searchsorted(keys, base + last_lo, side="left")
    b = np.searchsorted(keys, base + last_hi, side="right")
    return a, b


@njit(**_NB)
def neighbor_counts(pts, keys, cells, shape, strides, r2):
    """Number of neighbours at squared distance < r2 for every point."""
    n, m = pts.shape
    counts = np.zeros(n, dtype=np.int64)
    lo = np.empty(m - 1, dtype=np.int64)
    hi = np.empty(m - 1, dtype=np.int64)
    row = np.empty(m - 1, dtype=np.int64)
    for i in range(n):
        for k in range(m - 1):
            lo[k] = max(cells[i, k] - 1, 0)
            hi[k] = min(cells[i, k] + 1, shape[k] - 1)
            row[k] = lo[k]
        last_lo = max(cells[i, m - 1] - 1, 0)
        last_hi = min(cells[i, m - 1] + 1, shape[m - 1] - 1)
        while True:
            a, b = _row_slice(keys, row, strides, last_lo, last_hi)
            for j in range(a, b):
                if j == i:
                    continue
                d2 = 0.0
                for k in range(m):
                    t = pts[i, k] - pts[j, k]
                    d2 += t * t
                if d2 < r2:
                    counts[i] += 1
            if not _next_row(row, lo, hi):
                break
    return counts


@njit(**_NB)
def neighbor_fill(pts, keys, cells, shape, strides, r2, indptr):
    """Fill CSR column indices; neighbours of each point come out ascending."""
    n, m = pts.shape
    indices = np.empty(indptr[n], dtype=np.int64)
    lo = np.empty(m - 1, dtype=np.int64)
    hi = np.empty(m - 1, dtype=np.int64)
    row = np.empty(m - 1, dtype=np.int64)
    for i in range(n):
        pos = indptr[i]
        for k in range(m - 1):
            lo[k] = max(cells[i, k] - 1, 0)
            hi[k] = min(cells[i, k] + 1, shape[k] - 1)
            row[k] = lo[k]
        last_lo = max(cells[i, m - 1] - 1, 0)
        last_hi = min(cells[i, m - 1] + 1, shape[m - 1] - 1)
        while True:
            a, b = _row_slice(keys, row, strides, last_lo, last_hi)
            for j in range(a, b):
                if j == i:
                    continue
                d2 = 0.0
                for k in range(m):
                    t = pts[i, k] - pts[j, k]
                    d2 += t * t
                if d2 < r2:
                    indices[pos] = j
                    pos += 1
            if not _next_row(row, lo, hi):
                break
        indices[indptr[i]:pos].sort()
    return indices


@njit(**_NB)
def component_roots(n, indptr, indices):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                _union(parent, size, i, j)
    roots = np.empty(n, dtype=np.int64)
    for i in range(n):
        roots[i] = _find(parent, i)
    return roots


# event codes shared with localscore.Event
AGREE, E0, E1, E2 = 0, 1, 2, 3
E3_UNCLASSIFIABLE = -1


@njit(**_NB)
def window_scores(pts, keys, shape, strides, origin, r, indptr, indices,
                  glabel, gbest, box_lo, box_hi, half_edge, targets):
    """Localized score for each point index in ``targets``.

    For target x the window is the closed cube of half-edge ``half_edge``
    around x, clipped to [box_lo, box_hi].  Returns (xi_prime, event, e3,
    local_size, local_max) per target; ``gbest`` is the global largest
    component label or -1 when the global largest is tied.
    """
    n, m = pts.shape
    t = targets.shape[0]
    xi_prime = np.zeros(t, dtype=np.int8)
    event = np.zeros(t, dtype=np.int8)
    e3 = np.full(t, E3_UNCLASSIFIABLE, dtype=np.int8)
    own = np.zeros(t, dtype=np.int64)
    best = np.zeros(t, dtype=np.int64)

    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    stamp = np.full(n, -1, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    wlo = np.empty(m)
    whi = np.empty(m)
    clo = np.empty(m, dtype=np.int64)
    chi = np.empty(m, dtype=np.int64)
    row = np.empty(m - 1, dtype=np.int64)

    for q in range(t):
        x = targets[q]
        for k in range(m):
            wlo[k] = max(pts[x, k] - half_edge, box_lo[k])
            whi[k] = min(pts[x, k] + half_edge, box_hi[k])
            clo[k] = max(np.int64(np.floor((wlo[k] - origin[k]) / r)), 0)
            chi[k] = min(np.int64(np.floor((whi[k] - origin[k]) / r)), shape[k] - 1)
        for k in range(m - 1):
            row[k] = clo[k]

        cnt = 0
        while True:
            a, b = _row_slice(keys, row, strides, clo[m - 1], chi[m - 1])
            for j in range(a, b):
                inside = True
                for k in range(m):
                    if pts[j, k] < wlo[k] or pts[j, k] > whi[k]:
                        inside = False
                        break
                if inside:
                    stamp[j] = q
                    parent[j] = j
                    size[j] = 1
                    members[cnt] = j
                    cnt += 1
            if not _next_row(row, clo[:m - 1], chi[:m - 1]):
                break

        for c in range(cnt):
            j = members[c]
            for p in range(indptr[j], indptr[j + 1]):
                k2 = indices[p]
                if k2 > j and stamp[k2] == q:
                    _union(parent, size, j, k2)

        top = 0
        ties = 0
        top_root = -1
        for c in range(cnt):
            j = members[c]
            if parent[j] == j:
                s = size[j]
                if s > top:
                    top = s
                    ties = 1
                    top_root = j
                elif s == top:
                    ties += 1
        mine = size[_find(parent, x)]
        own[q] = mine
        best[q] = top

        xi = 1 if (gbest >= 0 and glabel[x] == gbest) else 0
        if ties > 1:
            xi_prime[q] = 0
            event[q] = E0
        else:
            xp = 1 if mine == top else 0
            xi_prime[q] = xp
            if xp == xi:
                event[q] = AGREE
            elif xi == 1:
                event[q] = E1
            else:
                event[q] = E2
            if gbest >= 0:
                # a local cluster sits inside exactly one global cluster, so
                # it is disconnected from the global largest iff that global
                # cluster is a different one
                e3[q] = 1 if glabel[top_root] != gbest else 0
    return xi_prime, event, e3, own, best


@njit(**_NB)
def _undo(parent, size, log_child, log_root, log_size, nlog):
    for u in range(nlog - 1, -1, -1):
        parent[log_child[u]] = log_child[u]
        size[log_root[u]] = log_size[u]


@njit(**_NB)
def _find_nc(parent, i):
    while parent[i] != i:
        i = parent[i]
    return i


@njit(**_NB)
def _union_logged(parent, size, a, b, log_child, log_root, log_size, nlog):
    ra = _find_nc(parent, a)
    rb = _find_nc(parent, b)
    if ra == rb:
        return nlog
    if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
        ra, rb = rb, ra
    log_child[nlog] = rb
    log_root[nlog] = ra
    log_size[nlog] = size[ra]
    parent[rb] = ra
    size[ra] += size[rb]
    return nlog + 1


@njit(**_NB)
def window_scores_grouped(pts, keys, shape, strides, origin, r, indptr, indices,
                          glabel, gbest, box_lo, box_hi, half_edge, targets,
                          group_of):
    """Same contract as ``window_scores`` but shares work between targets.

    ``targets`` must be sorted so that equal ``group_of`` values are
    contiguous.  For each group the intersection of its targets' windows
    (the core) is clustered once; each target then adds only its own
    window-minus-core points on top, and the additions are rolled back.
    """
    n, m = pts.shape
    t = targets.shape[0]
    xi_prime = np.zeros(t, dtype=np.int8)
    event = np.zeros(t, dtype=np.int8)
    e3 = np.full(t, E3_UNCLASSIFIABLE, dtype=np.int8)
    own = np.zeros(t, dtype=np.int64)
    best = np.zeros(t, dtype=np.int64)

    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    core_mark = np.full(n, -1, dtype=np.int64)
    extra_mark = np.full(n, -1, dtype=np.int64)
    root_mark = np.full(n, -1, dtype=np.int64)
    core_members = np.empty(n, dtype=np.int64)
    extras = np.empty(n, dtype=np.int64)
    log_child = np.empty(n, dtype=np.int64)
    log_root = np.empty(n, dtype=np.int64)
    log_size = np.empty(n, dtype=np.int64)

    wlo = np.empty(m)
    whi = np.empty(m)
    klo = np.empty(m)
    khi = np.empty(m)
    clo = np.empty(m, dtype=np.int64)
    chi = np.empty(m, dtype=np.int64)
    ilo = np.empty(m, dtype=np.int64)
    ihi = np.empty(m, dtype=np.int64)
    row = np.empty(m - 1, dtype=np.int64)

    g0 = 0
    gid = 0
    while g0 < t:
        g1 = g0 + 1
        while g1 < t and group_of[g1] == group_of[g0]:
            g1 += 1

        # core = intersection of the group's clipped windows
        for k in range(m):
            klo[k] = -np.inf
            khi[k] = np.inf
        for q in range(g0, g1):
            x = targets[q]
            for k in range(m):
                lo_k = max(pts[x, k] - half_edge, box_lo[k])
                hi_k = min(pts[x, k] + half_edge, box_hi[k])
                klo[k] = max(klo[k], lo_k)
                khi[k] = min(khi[k], hi_k)
        core_empty = False
        for k in range(m):
            if klo[k] > khi[k]:
                core_empty = True

        ncore = 0
        if not core_empty:
            for k in range(m):
                clo[k] = max(np.int64(np.floor((klo[k] - origin[k]) / r)), 0)
                chi[k] = min(np.int64(np.floor((khi[k] - origin[k]) / r)), shape[k] - 1)
            for k in range(m - 1):
                row[k] = clo[k]
            while True:
                a, b = _row_slice(keys, row, strides, clo[m - 1], chi[m - 1])
                for j in range(a, b):
                    inside = True
                    for k in range(m):
                        if pts[j, k] < klo[k] or pts[j, k] > khi[k]:
                            inside = False
                            break
                    if inside:
                        core_mark[j] = gid
                        parent[j] = j
                        size[j] = 1
                        core_members[ncore] = j
                        ncore += 1
                if not _next_row(row, clo[:m - 1], chi[:m - 1]):
                    break
            for c in range(ncore):
                j = core_members[c]
                for p in range(indptr[j], indptr[j + 1]):
                    k2 = indices[p]
                    if k2 > j and core_mark[k2] == gid:
                        _union(parent, size, j, k2)
            for c in range(ncore):
                j = core_members[c]
                parent[j] = _find(parent, j)
            # cells strictly inside the core on every axis hold only core
            # points; the one-cell margin absorbs floor() rounding
            for k in range(m):
                ilo[k] = np.int64(np.floor((klo[k] - origin[k]) / r)) + 2
                ihi[k] = np.int64(np.floor((khi[k] - origin[k]) / r)) - 2

        # core components by size, descending; ties by root index
        ncroots = 0
        for c in range(ncore):
            j = core_members[c]
            if parent[j] == j:
                ncroots += 1
        croots = np.empty(ncroots, dtype=np.int64)
        csizes = np.empty(ncroots, dtype=np.int64)
        u = 0
        for c in range(ncore):
            j = core_members[c]
            if parent[j] == j:
                croots[u] = j
                csizes[u] = size[j]
                u += 1
        corder = np.argsort(-csizes, kind="mergesort")

        for q in range(g0, g1):
            x = targets[q]
            for k in range(m):
                wlo[k] = max(pts[x, k] - half_edge, box_lo[k])
                whi[k] = min(pts[x, k] + half_edge, box_hi[k])
                clo[k] = max(np.int64(np.floor((wlo[k] - origin[k]) / r)), 0)
                chi[k] = min(np.int64(np.floor((whi[k] - origin[k]) / r)), shape[k] - 1)
            for k in range(m - 1):
                row[k] = clo[k]

            nex = 0
            while True:
                lead_inner = not core_empty
                if lead_inner:
                    for k in range(m - 1):
                        if row[k] < ilo[k] or row[k] > ihi[k]:
                            lead_inner = False
                            break
                if lead_inner and ilo[m - 1] <= ihi[m - 1]:
                    a, b = _row_slice(keys, row, strides, clo[m - 1], ilo[m - 1] - 1)
                    a2, b2 = _row_slice(keys, row, strides, ihi[m - 1] + 1, chi[m - 1])
                else:
                    a, b = _row_slice(keys, row, strides, clo[m - 1], chi[m - 1])
                    a2, b2 = 0, 0
                for seg in range(2):
                    sa = a if seg == 0 else a2
                    sb = b if seg == 0 else b2
                    for j in range(sa, sb):
                        if core_mark[j] == gid:
                            continue
                        inside = True
                        for k in range(m):
                            if pts[j, k] < wlo[k] or pts[j, k] > whi[k]:
                                inside = False
                                break
                        if inside:
                            extra_mark[j] = q
                            parent[j] = j
                            size[j] = 1
                            extras[nex] = j
                            nex += 1
                if not _next_row(row, clo[:m - 1], chi[:m - 1]):
                    break

            nlog = 0
            for c in range(nex):
                j = extras[c]
                for p in range(indptr[j], indptr[j + 1]):
                    k2 = indices[p]
                    if core_mark[k2] == gid or (k2 > j and extra_mark[k2] == q):
                        nlog = _union_logged(parent, size, j, k2, log_child,
                                             log_root, log_size, nlog)

            # components holding an extra point
            top = 0
            ties = 0
            top_root = -1
            for c in range(nex):
                rt = _find_nc(parent, extras[c])
                if root_mark[rt] == q:
                    continue
                root_mark[rt] = q
                s = size[rt]
                if s > top:
                    top = s
                    ties = 1
                    top_root = rt
                elif s == top:
                    ties += 1
                    top_root = min(top_root, rt)
            # untouched core components: still a root, size unchanged
            for u in range(ncroots):
                cr = croots[corder[u]]
                cs = csizes[corder[u]]
                if cs < top:
                    break
                if parent[cr] != cr or size[cr] != cs:
                    continue
                if cs > top:
                    top = cs
                    ties = 1
                    top_root = cr
                else:
                    ties += 1
                    if cr < top_root:
                        top_root = cr

            mine = size[_find_nc(parent, x)]
            own[q] = mine
            best[q] = top
            xi = 1 if (gbest >= 0 and glabel[x] == gbest) else 0
            if ties > 1:
                xi_prime[q] = 0
                event[q] = E0
            else:
                xp = 1 if mine == top else 0
                xi_prime[q] = xp
                if xp == xi:
                    event[q] = AGREE
                elif xi == 1:
                    event[q] = E1
                else:
                    event[q] = E2
                if gbest >= 0:
                    e3[q] = 1 if glabel[top_root] != gbest else 0

            _undo(parent, size, log_child, log_root, log_size, nlog)
        g0 = g1
        gid += 1
    return xi_prime, event, e3, own, best
