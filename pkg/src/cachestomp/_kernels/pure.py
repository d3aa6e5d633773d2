"""Pure-Python implementations of the hot kernels.

Same contracts as the compiled backend in ``_core.pyx``; the package picks
whichever imports. All functions work on byte-per-slot encodings
(source actions 0=idle, 1=to-cache, 2=to-user; adversary bits 0/1) and on
plain int age totals, so results are exact.

Shared dynamics, resolved in slot order:
  1. a to-cache action refreshes the cache to generation t,
  2. a forwarded cache copy carries displayed stamp t and is therefore
     accepted unless a direct update lands in the same slot (the direct
     packet always wins),
  3. the age recorded at slot t is t minus the user generation entering
     the slot.

The displayed user stamp never needs tracking here: a forged stamp t is
strictly larger than any stamp acquired before slot t, so acceptance only
depends on whether a direct update lands in the same slot. The reference
state machine in ``dynamics`` tracks stamps literally; tests cross-check
the two.
"""

from __future__ import annotations

BACKEND_NAME = "pure"


def sim_ages(actions: bytes, bits: bytes) -> list[int]:
    """Per-slot ages for one schedule/adversary pair."""
    if len(actions) != len(bits):
        raise ValueError("schedule and adversary sequence lengths differ")
    ages = []
    g = -1  # user generation
    c = -1  # cache generation
    for t, (a, b) in enumerate(zip(actions, bits)):
        ages.append(t - g)
        if a == 1:
            c = t
        if a == 2:
            g = t
        elif b:
            g = c
    return ages


def sim_total(actions: bytes, bits: bytes) -> int:
    """Summed age over the horizon (T times the average age)."""
    return sum(sim_ages(actions, bits))


def sim_totals_all_sigmas(actions: bytes) -> list[int]:
    """Age totals against every adversary sequence, indexed so that entry k
    corresponds to the lexicographically k-th bitstring."""
    T = len(actions)
    out = []
    for k in range(1 << T):
        g = -1
        c = -1
        tot = 0
        for t, a in enumerate(actions):
            tot += t - g
            if a == 1:
                c = t
            if a == 2:
                g = t
            elif (k >> (T - 1 - t)) & 1:
                g = c
        out.append(tot)
    return out


def worst_total(actions: bytes) -> tuple[int, bytes]:
    """Adversary sequence maximizing the age total for a fixed schedule.

    Cache generations are schedule-determined, so the DP state is just the
    user generation. Ties prefer idling, which makes the returned sequence
    the lexicographically smallest maximizer.
    """
    T = len(actions)
    carr = []  # cache generation visible to a forward in slot t
    c = -1
    for t, a in enumerate(actions):
        if a == 1:
            c = t
        carr.append(c)

    # V[t][g+1] = best achievable age sum over slots t..T-1 entering with
    # user generation g; g ranges over -1..t-1.
    V = [[0] * (t + 2) for t in range(T + 1)]
    for t in reversed(range(T)):
        a = actions[t]
        nxt = V[t + 1]
        row = V[t]
        for gi in range(t + 1):
            g = gi - 1
            if a == 2:
                best = nxt[t + 1]  # direct update wins either way
            else:
                best = nxt[gi]
                alt = nxt[carr[t] + 1]
                if alt > best:
                    best = alt
            row[gi] = (t - g) + best

    bits = bytearray(T)
    g = -1
    for t in range(T):
        a = actions[t]
        target = V[t][g + 1] - (t - g)
        if a == 2:
            g = t  # forward is discarded; keep bit 0
        elif V[t + 1][g + 1] == target:
            pass  # idle achieves the optimum
        else:
            bits[t] = 1
            g = carr[t]
    return V[0][0], bytes(bits)


def _stretch(layer: set, t: int, b: int, t1: int, t2: int, single: bool) -> set:
    """One forward step of the schedule-search state space."""
    nxt = set()
    for (uU, uC, c, g, f) in layer:
        nxt.add((uU, uC, c, c if b else g, f))
        if uC < t2:
            nxt.add((uU, uC + 1, t, t if b else g, 0))
        if uU < t1 and (f == 0 or not single):
            nxt.add((uU + 1, uC, c, t, 1))
    return nxt


def oracle_min_total(
    bits: bytes, t1: int, t2: int, single_update: bool
) -> tuple[int, bytes, int]:
    """Minimum age total over feasible schedules for a known adversary
    sequence, with the realizing schedule.

    DP state entering slot t: (updates used on each link, last cache-update
    slot, user generation, and a flag marking a direct update since the last
    cache update when the single-update rule is enforced). Ties resolve to
    the lexicographically smallest action string under idle < to-cache <
    to-user.

    Returns (total, packed schedule, states explored).
    """
    T = len(bits)
    init = (0, 0, -1, -1, 0)

    layers: list[set] = [{init}]
    for t in range(T):
        layers.append(_stretch(layers[t], t, bits[t], t1, t2, single_update))

    V: list[dict] = [dict() for _ in range(T + 1)]
    for s in layers[T]:
        V[T][s] = 0
    for t in reversed(range(T)):
        b = bits[t]
        nxt = V[t + 1]
        here = V[t]
        for s in layers[t]:
            uU, uC, c, g, f = s
            best = nxt[(uU, uC, c, c if b else g, f)]
            if uC < t2:
                alt = nxt[(uU, uC + 1, t, t if b else g, 0)]
                if alt < best:
                    best = alt
            if uU < t1 and (f == 0 or not single_update):
                alt = nxt[(uU + 1, uC, c, t, 1)]
                if alt < best:
                    best = alt
            here[s] = (t - g) + best

    actions = bytearray(T)
    s = init
    for t in range(T):
        b = bits[t]
        uU, uC, c, g, f = s
        target = V[t][s] - (t - g)
        cand = (uU, uC, c, c if b else g, f)
        if V[t + 1][cand] == target:
            s = cand
            continue
        if uC < t2:
            cand = (uU, uC + 1, t, t if b else g, 0)
            if V[t + 1][cand] == target:
                actions[t] = 1
                s = cand
                continue
        actions[t] = 2
        s = (uU + 1, uC, c, t, 1)

    states = sum(len(layer) for layer in layers)
    return V[0][init], bytes(actions), states


def oracle_totals_all_sigmas(
    T: int, t1: int, t2: int, single_update: bool
) -> list[int]:
    """Offline-optimal age totals against every adversary sequence.

    The value table entering slot t only depends on adversary bits at slots
    t..T-1, so a Gray-style sweep whose frequently flipping counter bits
    drive the *early* slots rebuilds only the cheap shallow tables on most
    increments. This shares almost all DP work across the 2^T sequences.
    """
    # covering state sets: union over both adversary bits at every slot
    init = (0, 0, -1, -1, 0)
    layers: list[list] = [[init]]
    for t in range(T):
        merged = _stretch(set(layers[t]), t, 0, t1, t2, single_update)
        merged |= _stretch(set(layers[t]), t, 1, t1, t2, single_update)
        layers.append(sorted(merged))

    V: list[dict] = [dict() for _ in range(T + 1)]
    V[T] = {s: 0 for s in layers[T]}

    def rebuild(t: int, b: int) -> None:
        nxt = V[t + 1]
        here = {}
        for s in layers[t]:
            uU, uC, c, g, f = s
            best = nxt[(uU, uC, c, c if b else g, f)]
            if uC < t2:
                alt = nxt[(uU, uC + 1, t, t if b else g, 0)]
                if alt < best:
                    best = alt
            if uU < t1 and (f == 0 or not single_update):
                alt = nxt[(uU + 1, uC, c, t, 1)]
                if alt < best:
                    best = alt
            here[s] = (t - g) + best
        V[t] = here

    # counter bit t drives the adversary bit at slot t; incrementing the
    # counter flips slots 0..j only, so tables above level j stay valid
    out = [0] * (1 << T)
    for t in reversed(range(T)):
        rebuild(t, 0)
    for k in range(1 << T):
        lex = 0  # lexicographic index = bit-reversed counter
        for t in range(T):
            lex = (lex << 1) | ((k >> t) & 1)
        out[lex] = V[0][init]
        nk = k + 1
        if nk == 1 << T:
            break
        j = (k ^ nk).bit_length() - 1
        for t in range(j, -1, -1):
            rebuild(t, (nk >> t) & 1)
    return out
