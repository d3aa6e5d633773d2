# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Byte-for-byte the same contracts as ``pure.py``: packed action/bit buffers
in, exact integer age totals out. The schedule-search DP uses dense arrays
indexed by (updates used per link, last cache slot, user generation, flag);
the sequence sweep shares value tables across adversary sequences exactly as
the pure version does.
"""

from cpython.mem cimport PyMem_Malloc, PyMem_Free

BACKEND_NAME = "cython"

ctypedef long long i64


def sim_ages(const unsigned char[:] actions, const unsigned char[:] bits):
    """Per-slot ages for one schedule/adversary pair."""
    cdef Py_ssize_t T = actions.shape[0]
    cdef list ages = []
    cdef int g = -1, c = -1
    cdef Py_ssize_t t
    cdef int a
    if bits.shape[0] != T:
        raise ValueError("schedule and adversary sequence lengths differ")
    for t in range(T):
        ages.append(t - g)
        a = actions[t]
        if a == 1:
            c = <int> t
        if a == 2:
            g = <int> t
        elif bits[t]:
            g = c
    return ages


def sim_total(const unsigned char[:] actions, const unsigned char[:] bits):
    """Summed age over the horizon (T times the average age)."""
    cdef Py_ssize_t T = actions.shape[0]
    cdef i64 tot = 0
    cdef int g = -1, c = -1
    cdef Py_ssize_t t
    cdef int a
    if bits.shape[0] != T:
        raise ValueError("schedule and adversary sequence lengths differ")
    for t in range(T):
        tot += t - g
        a = actions[t]
        if a == 1:
            c = <int> t
        if a == 2:
            g = <int> t
        elif bits[t]:
            g = c
    return tot


def sim_totals_all_sigmas(const unsigned char[:] actions):
    """Age totals against every adversary sequence, lexicographic order."""
    cdef Py_ssize_t T = actions.shape[0]
    cdef unsigned long long n, k
    cdef list out
    cdef Py_ssize_t t
    cdef int g, c, a
    cdef i64 tot
    if T > 30:
        raise ValueError("sweep too large")
    n = 1ULL << T
    out = [0] * n
    for k in range(n):
        g = -1
        c = -1
        tot = 0
        for t in range(T):
            tot += t - g
            a = actions[t]
            if a == 1:
                c = <int> t
            if a == 2:
                g = <int> t
            elif (k >> (T - 1 - t)) & 1:
                g = c
        out[k] = tot
    return out


def worst_total(const unsigned char[:] actions):
    """(max age total, lexicographically smallest maximizing sequence) for a
    fixed schedule; DP over the user generation only, since the schedule
    fixes the cache contents."""
    cdef Py_ssize_t T = actions.shape[0]
    cdef int* carr = NULL
    cdef i64** V = NULL
    cdef Py_ssize_t t, gi
    cdef int c = -1, a, g
    cdef i64 best, alt, total
    carr = <int*> PyMem_Malloc((T + 1) * sizeof(int))
    V = <i64**> PyMem_Malloc((T + 1) * sizeof(i64*))
    if carr == NULL or V == NULL:
        PyMem_Free(carr)
        PyMem_Free(V)
        raise MemoryError()
    for t in range(T + 1):
        V[t] = NULL
    try:
        for t in range(T):
            if actions[t] == 1:
                c = <int> t
            carr[t] = c
        for t in range(T + 1):
            V[t] = <i64*> PyMem_Malloc((t + 2) * sizeof(i64))
            if V[t] == NULL:
                raise MemoryError()
        for gi in range(T + 2):
            V[T][gi] = 0
        for t in range(T - 1, -1, -1):
            a = actions[t]
            for gi in range(t + 1):
                if a == 2:
                    best = V[t + 1][t + 1]
                else:
                    best = V[t + 1][gi]
                    alt = V[t + 1][carr[t] + 1]
                    if alt > best:
                        best = alt
                V[t][gi] = (t - (gi - 1)) + best

        bits = bytearray(T)
        g = -1
        for t in range(T):
            a = actions[t]
            if a == 2:
                g = <int> t
            elif V[t + 1][g + 1] == V[t][g + 1] - (t - g):
                pass
            else:
                bits[t] = 1
                g = carr[t]
        total = V[0][0] if T else 0
        return total, bytes(bits)
    finally:
        for t in range(T + 1):
            if V[t] != NULL:
                PyMem_Free(V[t])
        PyMem_Free(V)
        PyMem_Free(carr)


cdef inline Py_ssize_t _slab_size(Py_ssize_t t, int t1, int t2):
    return (t1 + 1) * (t2 + 1) * (t + 1) * (t + 1) * 2


cdef void _backstep(
    i64* here, i64* nxt, Py_ssize_t t, int b, int t1, int t2, bint single
):
    """Fill the level-t value table from level t+1 for adversary bit b.

    Layout at level t: index = (((uU*(t2+1)+uC)*(t+1)+ci)*(t+1)+gi)*2+f with
    ci = last cache slot + 1 and gi = user generation + 1, both in [0, t].
    """
    cdef Py_ssize_t dim_nn = t + 2  # ci/gi extent at level t+1
    cdef Py_ssize_t stride_ci_n = dim_nn * 2
    cdef Py_ssize_t stride_uC_n = dim_nn * stride_ci_n
    cdef Py_ssize_t stride_uU_n = (t2 + 1) * stride_uC_n
    cdef Py_ssize_t uU, uC, ci, gi, f
    cdef Py_ssize_t idx = 0
    cdef Py_ssize_t base_u, base_ci, cache_base, user_base
    cdef i64 best, alt, cost
    for uU in range(t1 + 1):
        for uC in range(t2 + 1):
            base_u = uU * stride_uU_n + uC * stride_uC_n
            cache_base = (
                base_u + stride_uC_n + (t + 1) * stride_ci_n
                if uC < t2 else 0
            )
            user_base = (
                base_u + stride_uU_n + (t + 1) * 2 + 1 if uU < t1 else 0
            )
            for ci in range(t + 1):
                base_ci = base_u + ci * stride_ci_n
                for gi in range(t + 1):
                    cost = t - (gi - 1)
                    for f in range(2):
                        # idle: a forwarded copy resets the generation to
                        # the cache generation
                        best = nxt[base_ci + (ci if b else gi) * 2 + f]
                        if uC < t2:
                            # cache update at t; a same-slot forward
                            # relays the fresh packet
                            alt = nxt[
                                cache_base + ((t + 1) if b else gi) * 2
                            ]
                            if alt < best:
                                best = alt
                        if uU < t1 and (f == 0 or not single):
                            # direct update: generation t, flag set
                            alt = nxt[user_base + ci * stride_ci_n]
                            if alt < best:
                                best = alt
                        here[idx] = cost + best
                        idx += 1


def oracle_min_total(
    const unsigned char[:] bits, int t1, int t2, bint single_update
):
    """Minimum age total over feasible schedules for a known adversary
    sequence, plus the realizing schedule and a state counter.

    Mirrors the pure implementation: backward value tables per level, then a
    forward walk taking the first optimal action under idle < to-cache <
    to-user.
    """
    cdef Py_ssize_t T = bits.shape[0]
    cdef i64** V = NULL
    cdef Py_ssize_t t, i, sz
    cdef i64 states = 0
    cdef int uU = 0, uC = 0, ci = 0, gi = 0, f = 0, b
    cdef int nuU, nuC, nci, ngi, nf
    cdef Py_ssize_t dim_n, dim_nn, stride_uU, stride_uC, stride_ci
    cdef i64 target, cand, total
    V = <i64**> PyMem_Malloc((T + 1) * sizeof(i64*))
    if V == NULL:
        raise MemoryError()
    for t in range(T + 1):
        V[t] = NULL
    try:
        for t in range(T + 1):
            sz = _slab_size(t, t1, t2)
            V[t] = <i64*> PyMem_Malloc(sz * sizeof(i64))
            if V[t] == NULL:
                raise MemoryError()
            states += sz
        sz = _slab_size(T, t1, t2)
        for i in range(sz):
            V[T][i] = 0
        for t in range(T - 1, -1, -1):
            _backstep(V[t], V[t + 1], t, bits[t], t1, t2, single_update)

        actions = bytearray(T)
        for t in range(T):
            b = bits[t]
            dim_n = t + 1
            dim_nn = t + 2
            stride_ci = dim_nn * 2
            stride_uC = dim_nn * stride_ci
            stride_uU = (t2 + 1) * stride_uC
            target = (
                V[t][
                    (((uU * (t2 + 1) + uC) * dim_n + ci) * dim_n + gi) * 2 + f
                ]
                - (t - (gi - 1))
            )
            nuU, nuC, nci, ngi, nf = uU, uC, ci, (ci if b else gi), f
            cand = V[t + 1][
                nuU * stride_uU + nuC * stride_uC + nci * stride_ci
                + ngi * 2 + nf
            ]
            if cand != target and uC < t2:
                nuU, nuC, nci, nf = uU, uC + 1, t + 1, 0
                ngi = (t + 1) if b else gi
                cand = V[t + 1][
                    nuU * stride_uU + nuC * stride_uC + nci * stride_ci
                    + ngi * 2 + nf
                ]
                if cand == target:
                    actions[t] = 1
            if cand != target:
                nuU, nuC, nci, ngi, nf = uU + 1, uC, ci, t + 1, 1
                actions[t] = 2
            uU, uC, ci, gi, f = nuU, nuC, nci, ngi, nf

        total = V[0][0]
        return total, bytes(actions), int(states)
    finally:
        for t in range(T + 1):
            if V[t] != NULL:
                PyMem_Free(V[t])
        PyMem_Free(V)


def oracle_totals_all_sigmas(int T, int t1, int t2, bint single_update):
    """Offline-optimal age totals against every adversary sequence.

    Counter bit t drives the adversary bit at slot t, so an increment only
    invalidates the shallow value tables; the lexicographic output index is
    the bit-reversed counter. Identical scheme to the pure backend.
    """
    cdef i64** V = NULL
    cdef Py_ssize_t t, i, sz
    cdef unsigned long long n, k, nk, lex
    cdef int j
    if T > 24:
        raise ValueError("sweep too large")
    n = 1ULL << T
    V = <i64**> PyMem_Malloc((T + 1) * sizeof(i64*))
    if V == NULL:
        raise MemoryError()
    for t in range(T + 1):
        V[t] = NULL
    try:
        for t in range(T + 1):
            sz = _slab_size(t, t1, t2)
            V[t] = <i64*> PyMem_Malloc(sz * sizeof(i64))
            if V[t] == NULL:
                raise MemoryError()
        sz = _slab_size(T, t1, t2)
        for i in range(sz):
            V[T][i] = 0
        for t in range(T - 1, -1, -1):
            _backstep(V[t], V[t + 1], t, 0, t1, t2, single_update)

        out = [0] * n
        for k in range(n):
            lex = 0
            for t in range(T):
                lex = (lex << 1) | ((k >> t) & 1)
            out[lex] = V[0][0]
            nk = k + 1
            if nk == n:
                break
            j = 0
            while ((k ^ nk) >> (j + 1)) != 0:
                j += 1
            for t in range(j, -1, -1):
                _backstep(
                    V[t], V[t + 1], t, <int> ((nk >> t) & 1), t1, t2,
                    single_update,
                )
        return out
    finally:
        for t in range(T + 1):
            if V[t] != NULL:
                PyMem_Free(V[t])
        PyMem_Free(V)
