"""Hot loops: table-constraint propagation, resumable backtracking, polymorphism scans.

Domains are ``uint64`` bitmasks, so the target structure has at most 64
elements.  All state lives in caller-owned arrays, which lets a search be
paused after a batch of solutions and resumed later.
"""

import numpy as np

from ._accel import kernel

ONE = np.uint64(1)
ZERO = np.uint64(0)

# search phases
P_INIT = 0
P_SELECT = 1
P_NEXT = 2
P_DONE = 3

# slots of the int64 status vector
S_PHASE = 0
S_DEPTH = 1
S_TRAIL = 2
S_NODES = 3
S_NSOL = 4
S_QHEAD = 5
S_QTAIL = 6
S_QCOUNT = 7
S_SIZE = 8

# kernel return codes
R_EXHAUSTED = 0
R_PAUSED = 1
R_BUDGET = 2

# variable orders
ORDER_STATIC = 0
ORDER_DOM = 1
ORDER_DOMWDEG = 2


@kernel
def popcount(x):
    c = 0
    while x != ZERO:
        x &= x - ONE
        c += 1
    return c


@kernel
def lowbit(x):
    a = 0
    while ((x >> np.uint64(a)) & ONE) == ZERO:
        a += 1
    return a


@kernel
def _tuple_ok(T, row, k, scope, eqpos, base, dom):
    for p in range(k):
        a = T[row + p]
        if ((dom[scope[base + p]] >> np.uint64(a)) & ONE) == ZERO:
            return False
        e = eqpos[base + p]
        if e != p and T[row + e] != a:
            return False
    return True


@kernel
def _push(c, queue, inq, st):
    if inq[c] == 0:
        inq[c] = 1
        queue[st[S_QTAIL]] = c
        st[S_QTAIL] = (st[S_QTAIL] + 1) % len(queue)
        st[S_QCOUNT] += 1


@kernel
def _revise(c, d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
            c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
            dom, trail_var, trail_old, queue, inq, st):
    r = c_rel[c]
    k = t_arity[r]
    base = c_off[c]
    toff = t_off[r]
    koff = key_off[r]
    for p in range(k):
        if eqpos[base + p] != p:
            continue
        v = scope[base + p]
        dv = dom[v]
        nd = dv
        x = dv
        while x != ZERO:
            a = lowbit(x)
            x &= x - ONE
            ri = (base + p) * d + a
            rt = res[ri]
            if rt >= 0 and _tuple_ok(T, toff + rt * k, k, scope, eqpos, base, dom):
                continue
            key = koff + p * d + a
            found = False
            for q in range(sup_ptr[key], sup_ptr[key + 1]):
                t = sup_idx[q]
                if _tuple_ok(T, toff + t * k, k, scope, eqpos, base, dom):
                    res[ri] = t
                    found = True
                    break
            if not found:
                nd &= ~(ONE << np.uint64(a))
        if nd != dv:
            tl = st[S_TRAIL]
            trail_var[tl] = v
            trail_old[tl] = dv
            st[S_TRAIL] = tl + 1
            dom[v] = nd
            if nd == ZERO:
                return False
            for q in range(vc_ptr[v], vc_ptr[v + 1]):
                _push(vc_idx[q], queue, inq, st)
    return True


@kernel
def _propagate(d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
               c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
               dom, trail_var, trail_old, queue, inq, st, cw, wdeg):
    nq = len(queue)
    while st[S_QCOUNT] > 0:
        c = queue[st[S_QHEAD]]
        st[S_QHEAD] = (st[S_QHEAD] + 1) % nq
        st[S_QCOUNT] -= 1
        inq[c] = 0
        if not _revise(c, d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
                       c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
                       dom, trail_var, trail_old, queue, inq, st):
            cw[c] += 1
            r = c_rel[c]
            for p in range(t_arity[r]):
                wdeg[scope[c_off[c] + p]] += 1
            while st[S_QCOUNT] > 0:
                inq[queue[st[S_QHEAD]]] = 0
                st[S_QHEAD] = (st[S_QHEAD] + 1) % nq
                st[S_QCOUNT] -= 1
            return False
    return True


@kernel
def _select(dom, order, deg, wdeg):
    n = len(dom)
    best = -1
    bc = 0
    for v in range(n):
        c = popcount(dom[v])
        if c <= 1:
            continue
        if order == ORDER_STATIC:
            return v
        if best < 0:
            best = v
            bc = c
            continue
        if order == ORDER_DOM:
            if c < bc or (c == bc and deg[v] > deg[best]):
                best = v
                bc = c
        else:
            if c * wdeg[best] < bc * wdeg[v]:
                best = v
                bc = c
    return best


@kernel
def _undo(target, dom, trail_var, trail_old, st):
    tl = st[S_TRAIL]
    while tl > target:
        tl -= 1
        dom[trail_var[tl]] = trail_old[tl]
    st[S_TRAIL] = tl


@kernel
def propagate_all(d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
                  c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
                  dom, trail_var, trail_old, queue, inq, st, cw, wdeg, first):
    """Enqueue constraints ``first, first+1, ...`` and run propagation to a fixpoint."""
    nc = len(c_rel)
    for i in range(nc):
        _push((first + i) % nc, queue, inq, st)
    return _propagate(d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
                      c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
                      dom, trail_var, trail_old, queue, inq, st, cw, wdeg)


@kernel
def search(d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
           c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
           dom, trail_var, trail_old, queue, inq, st, cw, wdeg, deg,
           lvl_var, lvl_rem, lvl_trail, order, sols, budget):
    """Depth-first search with propagation; resumable through ``st``.

    Fills ``sols`` with up to ``len(sols)`` solutions.  Returns R_PAUSED when
    the buffer is full, R_BUDGET when ``budget`` nodes were spent (negative
    budget means unlimited) and R_EXHAUSTED when the tree is finished.
    """
    n = len(dom)
    st[S_NSOL] = 0
    if st[S_PHASE] == P_INIT:
        ok = propagate_all(d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
                           c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
                           dom, trail_var, trail_old, queue, inq, st, cw, wdeg, 0)
        if not ok:
            st[S_PHASE] = P_DONE
            return R_EXHAUSTED
        st[S_PHASE] = P_SELECT
    max_sols = sols.shape[0]
    while True:
        phase = st[S_PHASE]
        if phase == P_DONE:
            return R_EXHAUSTED
        if phase == P_SELECT:
            x = _select(dom, order, deg, wdeg)
            if x < 0:
                ns = st[S_NSOL]
                for v in range(n):
                    sols[ns, v] = lowbit(dom[v])
                st[S_NSOL] = ns + 1
                st[S_PHASE] = P_NEXT
                if ns + 1 >= max_sols:
                    return R_PAUSED
                continue
            depth = st[S_DEPTH]
            lvl_var[depth] = x
            lvl_rem[depth] = dom[x]
            lvl_trail[depth] = st[S_TRAIL]
            st[S_DEPTH] = depth + 1
            st[S_PHASE] = P_NEXT
            continue
        # P_NEXT: try the next value at the deepest open level
        depth = st[S_DEPTH]
        if depth == 0:
            st[S_PHASE] = P_DONE
            return R_EXHAUSTED
        lv = depth - 1
        _undo(lvl_trail[lv], dom, trail_var, trail_old, st)
        rem = lvl_rem[lv]
        if rem == ZERO:
            st[S_DEPTH] = lv
            continue
        if budget >= 0 and st[S_NODES] >= budget:
            return R_BUDGET
        a = lowbit(rem)
        lvl_rem[lv] = rem & ~(ONE << np.uint64(a))
        st[S_NODES] += 1
        x = lvl_var[lv]
        tl = st[S_TRAIL]
        trail_var[tl] = x
        trail_old[tl] = dom[x]
        st[S_TRAIL] = tl + 1
        dom[x] = ONE << np.uint64(a)
        for q in range(vc_ptr[x], vc_ptr[x + 1]):
            _push(vc_idx[q], queue, inq, st)
        if _propagate(d, t_arity, t_off, T, key_off, sup_ptr, sup_idx,
                      c_rel, c_off, scope, eqpos, vc_ptr, vc_idx, res,
                      dom, trail_var, trail_old, queue, inq, st, cw, wdeg):
            st[S_PHASE] = P_SELECT
        else:
            st[S_PHASE] = P_NEXT


@kernel
def find_violation(R, n, base, outputs, allowed, bsize, cols):
    """Scan every n-column matrix over the rows of ``R`` (m x k).

    Row p of the matrix is the input tuple whose mixed-radix index is
    tracked in ``idx[p]``.  Returns True and fills ``cols`` with the column
    choice when some row image falls outside ``allowed``.
    """
    m, k = R.shape
    if m == 0:
        return False
    w = np.empty(n, dtype=np.int64)
    acc = 1
    for i in range(n - 1, -1, -1):
        w[i] = acc
        acc *= base
    bw = np.empty(k, dtype=np.int64)
    acc = 1
    for p in range(k - 1, -1, -1):
        bw[p] = acc
        acc *= bsize
    j = np.zeros(n, dtype=np.int64)
    idx = np.zeros(k, dtype=np.int64)
    for p in range(k):
        s = 0
        for i in range(n):
            s += R[0, p] * w[i]
        idx[p] = s
    while True:
        code = 0
        for p in range(k):
            code += outputs[idx[p]] * bw[p]
        if not allowed[code]:
            for i in range(n):
                cols[i] = j[i]
            return True
        i = n - 1
        while i >= 0:
            old = j[i]
            if old + 1 < m:
                j[i] = old + 1
                for p in range(k):
                    idx[p] += (R[old + 1, p] - R[old, p]) * w[i]
                break
            j[i] = 0
            for p in range(k):
                idx[p] += (R[0, p] - R[old, p]) * w[i]
            i -= 1
        if i < 0:
            return False
