"""numba kernels for bit-parallel good and faulty machine simulation.

Values are uint64 words; lane k of a word holds vector k. Gate arrays are
indexed by topological position, not gate id.
"""

import numpy as np
from numba import njit

K_AND, K_OR, K_NAND, K_NOR, K_XOR, K_NOT, K_BUF, K_MUX, K_C0, K_C1 = range(10)

F_STEM, F_PIN, F_OBS, F_FLIP = 0, 1, 2, 3

ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, nogil=True, inline="always")
def _gate(kind, a, b, c):
    if kind == K_AND:
        return a & b
    if kind == K_OR:
        return a | b
    if kind == K_NAND:
        return ~(a & b)
    if kind == K_NOR:
        return ~(a | b)
    if kind == K_XOR:
        return a ^ b
    if kind == K_NOT:
        return ~a
    if kind == K_BUF:
        return a
    if kind == K_MUX:
        return (~a & b) | (a & c)
    if kind == K_C0:
        return a ^ a
    return ~(a ^ a)


@njit(cache=True, nogil=True)
def good_values(kind, in0, in1, in2, out, values):
    """Evaluate every gate in place; ``values`` holds input-port words on entry."""
    n_words = values.shape[1]
    zero = np.uint64(0)
    for p in range(kind.shape[0]):
        k = kind[p]
        for w in range(n_words):
            a = values[in0[p], w] if in0[p] >= 0 else zero
            b = values[in1[p], w] if in1[p] >= 0 else zero
            c = values[in2[p], w] if in2[p] >= 0 else zero
            values[out[p], w] = _gate(k, a, b, c)


@njit(cache=True, nogil=True, inline="always")
def _push(heap, size, pending, q):
    if pending[q]:
        return size
    pending[q] = True
    k = size
    heap[k] = q
    while k > 0:
        parent = (k - 1) >> 1
        if heap[parent] <= heap[k]:
            break
        heap[parent], heap[k] = heap[k], heap[parent]
        k = parent
    return size + 1


@njit(cache=True, nogil=True, inline="always")
def _pop(heap, size):
    top = heap[0]
    size -= 1
    heap[0] = heap[size]
    k = 0
    while True:
        left = 2 * k + 1
        if left >= size:
            break
        small = left
        if left + 1 < size and heap[left + 1] < heap[left]:
            small = left + 1
        if heap[k] <= heap[small]:
            break
        heap[k], heap[small] = heap[small], heap[k]
        k = small
    return top, size


@njit(cache=True, nogil=True, inline="always")
def _observe(fv, good, net, alive, detect, f, keep_alive):
    """Record detections at an observed net; returns the number of live words."""
    n_alive = 0
    for w in range(alive.shape[0]):
        d = (fv[net, w] ^ good[net, w]) & alive[w]
        detect[f, w] |= d
        if not keep_alive:
            alive[w] &= ~d
        if alive[w] != 0:
            n_alive += 1
    return n_alive


@njit(cache=True, nogil=True)
def fault_sim(kind, in0, in1, in2, out, rd_ptr, rd_pos, observed, obs_nets,
              good, lane_mask, f_kind, f_a, f_b, f_val, detect, obs_out, want_obs):
    """Parallel-pattern single-fault simulation with event-driven propagation.

    Gates whose inputs changed are kept in a min-heap on topological position,
    so each is evaluated once, after all of its inputs are final.
    For fault ``f``: ``detect[f, w]`` gets the lanes where any observed net
    differs from the good machine. A lane stops propagating once it is
    detected (its faulty values go stale), unless ``want_obs`` is set, in
    which case ``obs_out[f, k, w]`` receives the faulty value of output bit k.
    """
    n_gates = kind.shape[0]
    n_nets, n_words = good.shape
    zero = np.uint64(0)
    fv = good.copy()
    pending = np.zeros(n_gates, np.bool_)
    heap = np.empty(n_gates, np.int64)
    changed = np.empty(n_nets, np.int64)
    newv = np.empty(n_words, np.uint64)
    alive = np.empty(n_words, np.uint64)

    for f in range(f_kind.shape[0]):
        stuck = ONES if f_val[f] else zero
        n_changed = 0
        size = 0
        n_alive = 0
        for w in range(n_words):
            detect[f, w] = zero
            alive[w] = lane_mask[w]
            if alive[w] != zero:
                n_alive += 1

        if f_kind[f] == F_OBS:
            net = obs_nets[f_a[f]]
            for w in range(n_words):
                detect[f, w] = (stuck ^ good[net, w]) & lane_mask[w]
            if want_obs:
                for k in range(obs_nets.shape[0]):
                    for w in range(n_words):
                        obs_out[f, k, w] = good[obs_nets[k], w]
                for w in range(n_words):
                    obs_out[f, f_a[f], w] = stuck
            continue

        if f_kind[f] == F_STEM:
            net = f_a[f]
            for w in range(n_words):
                newv[w] = stuck
        elif f_kind[f] == F_FLIP:
            net = f_a[f]
            for w in range(n_words):
                newv[w] = ~good[net, w]
        else:
            p = f_a[f]
            pin = f_b[f]
            net = out[p]
            k = kind[p]
            for w in range(n_words):
                a = fv[in0[p], w] if in0[p] >= 0 else zero
                b = fv[in1[p], w] if in1[p] >= 0 else zero
                c = fv[in2[p], w] if in2[p] >= 0 else zero
                if pin == 0:
                    a = stuck
                elif pin == 1:
                    b = stuck
                else:
                    c = stuck
                newv[w] = _gate(k, a, b, c)

        diff = False
        for w in range(n_words):
            if (newv[w] ^ good[net, w]) & alive[w]:
                diff = True
        if diff:
            for w in range(n_words):
                fv[net, w] = newv[w]
            changed[n_changed] = net
            n_changed += 1
            if observed[net]:
                n_alive = _observe(fv, good, net, alive, detect, f, want_obs)
            for r in range(rd_ptr[net], rd_ptr[net + 1]):
                size = _push(heap, size, pending, rd_pos[r])

        while size > 0 and n_alive > 0:
            p, size = _pop(heap, size)
            pending[p] = False
            k = kind[p]
            o = out[p]
            diff = False
            for w in range(n_words):
                a = fv[in0[p], w] if in0[p] >= 0 else zero
                b = fv[in1[p], w] if in1[p] >= 0 else zero
                c = fv[in2[p], w] if in2[p] >= 0 else zero
                v = _gate(k, a, b, c)
                newv[w] = v
                if (v ^ good[o, w]) & alive[w]:
                    diff = True
            if diff:
                for w in range(n_words):
                    fv[o, w] = newv[w]
                changed[n_changed] = o
                n_changed += 1
                if observed[o]:
                    n_alive = _observe(fv, good, o, alive, detect, f, want_obs)
                for r in range(rd_ptr[o], rd_ptr[o + 1]):
                    size = _push(heap, size, pending, rd_pos[r])
        while size > 0:
            p, size = _pop(heap, size)
            pending[p] = False

        if want_obs:
            for k in range(obs_nets.shape[0]):
                for w in range(n_words):
                    obs_out[f, k, w] = fv[obs_nets[k], w]
        for i in range(n_changed):
            net = changed[i]
            for w in range(n_words):
                fv[net, w] = good[net, w]


@njit(cache=True, nogil=True)
def ffr_detect(kind, in0, in1, in2, out, is_stem, sole_reader, good, lane_mask,
               stem_obs, f_kind, f_a, f_b, f_val, detect):
    """Detection lanes from stem observability.

    Inside a fanout-free region a fault effect can only leave through the
    region's stem, so it is carried gate by gate up to the stem and then
    intersected with the stem's observability (``stem_obs[net]``, the lanes in
    which complementing the stem changes an output).
    """
    n_words = good.shape[1]
    zero = np.uint64(0)
    diff = np.empty(n_words, np.uint64)
    for f in range(f_kind.shape[0]):
        stuck = ONES if f_val[f] else zero
        if f_kind[f] == F_OBS:
            net = f_a[f]  # observed net
            for w in range(n_words):
                detect[f, w] = (stuck ^ good[net, w]) & lane_mask[w]
            continue
        if f_kind[f] == F_STEM:
            net = f_a[f]
            for w in range(n_words):
                diff[w] = (stuck ^ good[net, w]) & lane_mask[w]
        else:
            p = f_a[f]
            pin = f_b[f]
            net = out[p]
            for w in range(n_words):
                a = good[in0[p], w] if in0[p] >= 0 else zero
                b = good[in1[p], w] if in1[p] >= 0 else zero
                c = good[in2[p], w] if in2[p] >= 0 else zero
                if pin == 0:
                    a = stuck
                elif pin == 1:
                    b = stuck
                else:
                    c = stuck
                diff[w] = (_gate(kind[p], a, b, c) ^ good[net, w]) & lane_mask[w]
        while not is_stem[net]:
            p = sole_reader[net]
            o = out[p]
            any_diff = False
            for w in range(n_words):
                a = good[in0[p], w] if in0[p] >= 0 else zero
                b = good[in1[p], w] if in1[p] >= 0 else zero
                c = good[in2[p], w] if in2[p] >= 0 else zero
                if in0[p] == net:
                    a ^= diff[w]
                elif in1[p] == net:
                    b ^= diff[w]
                else:
                    c ^= diff[w]
                diff[w] = (_gate(kind[p], a, b, c) ^ good[o, w]) & lane_mask[w]
                if diff[w] != zero:
                    any_diff = True
            net = o
            if not any_diff:
                break
        for w in range(n_words):
            detect[f, w] = diff[w] & stem_obs[net, w]
