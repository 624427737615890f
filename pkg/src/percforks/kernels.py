"""Hot loops: cluster labeling, crossing detection, Wilson walks, cut sizes.

Every public kernel has two implementations with identical output:

* a nopython loop compiled by numba (``*_numba``), and
* a numpy / pure-Python path (``*_numpy``) used when numba is disabled.

The dispatch functions at the bottom pick one according to
``percforks._accel.USE_NUMBA``. Labels are canonical: component ids are
assigned in order of first occurrence in row-major order, row 0 first.

Array layout: ``values[y, x]``; ``hb[y, x]`` is the bond (x, y)-(x+1, y) and
``vb[y, x]`` the bond (x, y)-(x, y+1).
"""

import numpy as np

from percforks._accel import USE_NUMBA, njit


# --------------------------------------------------------------------------
# union-find primitives (only ever used from compiled loops)


@njit
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit
def _canonical(parent, n):
    labels = np.empty(n, dtype=np.int64)
    remap = np.full(n, -1, dtype=np.int64)
    count = 0
    for i in range(n):
        r = _find(parent, i)
        if remap[r] < 0:
            remap[r] = count
            count += 1
        labels[i] = remap[r]
    return labels, count


# --------------------------------------------------------------------------
# site clusters


def _label_sites_loop(values):
    h, w = values.shape
    n = h * w
    parent = np.arange(n, dtype=np.int64)
    for y in range(h):
        for x in range(w):
            i = y * w + x
            v = values[y, x]
            if x > 0 and values[y, x - 1] == v:
                _union(parent, i, i - 1)
            if y > 0 and values[y - 1, x] == v:
                _union(parent, i, i - w)
    labels, count = _canonical(parent, n)
    return labels.reshape((h, w)), count


label_sites_numba = njit(_label_sites_loop)


def _min_label_propagation(eq_h, eq_v, shape):
    h, w = shape
    lab = np.arange(h * w, dtype=np.int64).reshape(h, w)
    while True:
        new = lab.copy()
        new[:, 1:] = np.where(eq_h, np.minimum(new[:, 1:], lab[:, :-1]), new[:, 1:])
        new[:, :-1] = np.where(eq_h, np.minimum(new[:, :-1], lab[:, 1:]), new[:, :-1])
        new[1:, :] = np.where(eq_v, np.minimum(new[1:, :], lab[:-1, :]), new[1:, :])
        new[:-1, :] = np.where(eq_v, np.minimum(new[:-1, :], lab[1:, :]), new[:-1, :])
        flat = new.ravel()
        while True:
            jumped = flat[flat]
            if np.array_equal(jumped, flat):
                break
            flat = jumped
        new = flat.reshape(h, w)
        if np.array_equal(new, lab):
            break
        lab = new
    # labels are component minima, so sorted order is first-occurrence order
    uniq, inv = np.unique(lab, return_inverse=True)
    return inv.reshape(h, w).astype(np.int64), len(uniq)


def label_sites_numpy(values):
    values = np.asarray(values)
    eq_h = values[:, 1:] == values[:, :-1]
    eq_v = values[1:, :] == values[:-1, :]
    return _min_label_propagation(eq_h, eq_v, values.shape)


# --------------------------------------------------------------------------
# bond clusters


def _label_bonds_loop(hb, vb, h, w):
    n = h * w
    parent = np.arange(n, dtype=np.int64)
    for y in range(h):
        for x in range(w - 1):
            if hb[y, x]:
                _union(parent, y * w + x, y * w + x + 1)
    for y in range(h - 1):
        for x in range(w):
            if vb[y, x]:
                _union(parent, y * w + x, (y + 1) * w + x)
    labels, count = _canonical(parent, n)
    return labels.reshape((h, w)), count


label_bonds_numba = njit(_label_bonds_loop)


def label_bonds_numpy(hb, vb, h, w):
    return _min_label_propagation(np.asarray(hb, bool), np.asarray(vb, bool), (h, w))


# --------------------------------------------------------------------------
# left-right crossings for a batch of bond configurations


def _crossings_loop(hb, vb):
    t_count = hb.shape[0]
    h = hb.shape[1]
    w = vb.shape[2]
    out = np.zeros(t_count, dtype=np.bool_)
    if w == 1:
        out[:] = True
        return out
    n = h * w
    parent = np.empty(n + 2, dtype=np.int64)
    for t in range(t_count):
        for i in range(n + 2):
            parent[i] = i
        for y in range(h):
            _union(parent, y * w, n)
            _union(parent, y * w + w - 1, n + 1)
        for y in range(h):
            for x in range(w - 1):
                if hb[t, y, x]:
                    _union(parent, y * w + x, y * w + x + 1)
        for y in range(h - 1):
            for x in range(w):
                if vb[t, y, x]:
                    _union(parent, y * w + x, (y + 1) * w + x)
        out[t] = _find(parent, n) == _find(parent, n + 1)
    return out


crossings_numba = njit(_crossings_loop)


def crossings_numpy(hb, vb):
    hb = np.asarray(hb, bool)
    vb = np.asarray(vb, bool)
    t_count, h = hb.shape[0], hb.shape[1]
    w = vb.shape[2]
    if w == 1:
        return np.ones(t_count, dtype=bool)
    reach = np.zeros((t_count, h, w), dtype=bool)
    reach[:, :, 0] = True
    while True:
        new = reach.copy()
        new[:, :, 1:] |= reach[:, :, :-1] & hb
        new[:, :, :-1] |= reach[:, :, 1:] & hb
        new[:, 1:, :] |= reach[:, :-1, :] & vb
        new[:, :-1, :] |= reach[:, 1:, :] & vb
        if np.array_equal(new, reach):
            break
        reach = new
    return reach[:, :, -1].any(axis=1)


# --------------------------------------------------------------------------
# Wilson's algorithm on the n x m box, rooted at vertex 0 (lower-left)


def wilson_parents_py(n, m, rng):
    total = n * m
    in_tree = np.zeros(total, dtype=np.bool_)
    nxt = np.full(total, -1, dtype=np.int64)
    nb = np.empty(4, dtype=np.int64)
    in_tree[0] = True
    for start in range(total):
        u = start
        while not in_tree[u]:
            x = u % n
            y = u // n
            deg = 0
            if x > 0:
                nb[deg] = u - 1
                deg += 1
            if x < n - 1:
                nb[deg] = u + 1
                deg += 1
            if y > 0:
                nb[deg] = u - n
                deg += 1
            if y < m - 1:
                nb[deg] = u + n
                deg += 1
            k = int(rng.random() * deg)
            nxt[u] = nb[k]
            u = nxt[u]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    return nxt


wilson_parents_numba = njit(wilson_parents_py)


# --------------------------------------------------------------------------
# cut sizes b(x): same-phase sites separated from the window boundary when x
# is removed. Iterative Tarjan DFS from a virtual root joined to every
# boundary site.


def cut_sizes_py(values):
    h, w = values.shape
    n = h * w
    root = n
    disc = np.full(n + 1, -1, dtype=np.int64)
    low = np.zeros(n + 1, dtype=np.int64)
    sub = np.zeros(n + 1, dtype=np.int64)
    par = np.full(n + 1, -1, dtype=np.int64)
    it = np.zeros(n + 1, dtype=np.int64)
    out = np.zeros(n, dtype=np.int64)

    nbnd = 0
    bnd = np.empty(n, dtype=np.int64)
    for i in range(n):
        x = i % w
        y = i // w
        if x == 0 or y == 0 or x == w - 1 or y == h - 1:
            bnd[nbnd] = i
            nbnd += 1

    stack = np.empty(n + 1, dtype=np.int64)
    disc[root] = 0
    t = 1
    stack[0] = root
    sp = 1
    while sp > 0:
        u = stack[sp - 1]
        v = -1
        if u == root:
            if it[root] < nbnd:
                v = bnd[it[root]]
                it[root] += 1
        else:
            x = u % w
            y = u // w
            val = values[y, x]
            while v < 0 and it[u] < 5:
                k = it[u]
                it[u] += 1
                if k == 0:
                    if x > 0 and values[y, x - 1] == val:
                        v = u - 1
                elif k == 1:
                    if x < w - 1 and values[y, x + 1] == val:
                        v = u + 1
                elif k == 2:
                    if y > 0 and values[y - 1, x] == val:
                        v = u - w
                elif k == 3:
                    if y < h - 1 and values[y + 1, x] == val:
                        v = u + w
                else:
                    if x == 0 or y == 0 or x == w - 1 or y == h - 1:
                        v = root
        if v >= 0:
            if disc[v] < 0:
                par[v] = u
                disc[v] = t
                low[v] = t
                t += 1
                sub[v] = 1
                stack[sp] = v
                sp += 1
            elif v != par[u] and disc[v] < low[u]:
                low[u] = disc[v]
        else:
            sp -= 1
            p = par[u]
            if p >= 0:
                if low[u] < low[p]:
                    low[p] = low[u]
                sub[p] += sub[u]
                if p != root and low[u] >= disc[p]:
                    out[p] += sub[u]

    # clusters that never touch the boundary: everything else is cut off
    seen = np.zeros(n, dtype=np.bool_)
    members = np.empty(n, dtype=np.int64)
    for s in range(n):
        if disc[s] >= 0 or seen[s]:
            continue
        seen[s] = True
        members[0] = s
        count = 1
        head = 0
        while head < count:
            u = members[head]
            head += 1
            x = u % w
            y = u // w
            val = values[y, x]
            for k in range(4):
                v = -1
                if k == 0 and x > 0:
                    v = u - 1
                elif k == 1 and x < w - 1:
                    v = u + 1
                elif k == 2 and y > 0:
                    v = u - w
                elif k == 3 and y < h - 1:
                    v = u + w
                if v >= 0 and not seen[v] and values[v // w, v % w] == val:
                    seen[v] = True
                    members[count] = v
                    count += 1
        for j in range(count):
            out[members[j]] = count - 1
    return out.reshape((h, w))


cut_sizes_numba = njit(cut_sizes_py)


# --------------------------------------------------------------------------
# dispatch


def label_sites(values):
    values = np.ascontiguousarray(values, dtype=np.uint8)
    if USE_NUMBA:
        return label_sites_numba(values)
    return label_sites_numpy(values)


def label_bonds(hb, vb, h, w):
    hb = np.ascontiguousarray(hb, dtype=np.bool_).reshape(h, max(w - 1, 0))
    vb = np.ascontiguousarray(vb, dtype=np.bool_).reshape(max(h - 1, 0), w)
    if USE_NUMBA:
        return label_bonds_numba(hb, vb, h, w)
    return label_bonds_numpy(hb, vb, h, w)


def horizontal_crossings(hb, vb):
    """Per-configuration left-to-right crossing flags for a batch."""
    hb = np.ascontiguousarray(hb, dtype=np.bool_)
    vb = np.ascontiguousarray(vb, dtype=np.bool_)
    if USE_NUMBA:
        return crossings_numba(hb, vb)
    return crossings_numpy(hb, vb)


def vertical_crossings(hb, vb):
    """Bottom-to-top crossings: the horizontal problem on the transpose."""
    hb = np.asarray(hb, dtype=np.bool_)
    vb = np.asarray(vb, dtype=np.bool_)
    return horizontal_crossings(vb.transpose(0, 2, 1), hb.transpose(0, 2, 1))


def wilson_parents(n, m, rng):
    if USE_NUMBA:
        return wilson_parents_numba(n, m, rng)
    return wilson_parents_py(n, m, rng)


def cut_sizes(values):
    values = np.ascontiguousarray(values, dtype=np.uint8)
    if USE_NUMBA:
        return cut_sizes_numba(values)
    return cut_sizes_py(values)
