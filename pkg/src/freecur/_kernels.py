"""Hot integer kernels with a numba fast path and a pure-Python fallback.

Every kernel is written once as plain array code.  When numba is importable
and the environment variable FREECUR_NO_NUMBA is unset (or "0"), the
functions are compiled with ``@njit``; otherwise the same bodies run under
CPython.  Outputs are bit-identical on both paths; the flag only trades
speed.  ``PY_FUNCS`` keeps the undecorated originals so tests and the
benchmark can compare the two paths inside one process.

Word encoding matches freecur.words: letter 2*i is generator i, 2*i+1 its
inverse, inversion is x ^ 1.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    flag = os.environ.get("FREECUR_NO_NUMBA", "").strip()
    if flag not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return False
    return True


NUMBA_ENABLED = _numba_requested()

if NUMBA_ENABLED:
    from numba import njit as _njit
else:  # identity decorator, keeps the pure bodies callable as-is

    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


PY_FUNCS: dict = {}


def _kernel(f):
    PY_FUNCS[f.__name__] = f
    return _njit(cache=True)(f)


# ---------------------------------------------------------------------------
# word enumeration
# ---------------------------------------------------------------------------


def cyclically_reduced_count(n: int, k: int) -> int:
    """Number of cyclically reduced words of length n over 2k letters."""
    return (2 * k - 1) ** n + (k - 1) * (-1) ** n + k


@_kernel
def fill_necklaces(n, nl, out):
    # DFS odometer over reduced words, keeping lex-least rotations only.
    count = 0
    w = np.empty(n, np.int8)
    w[0] = -1
    i = 0
    while i >= 0:
        w[i] += 1
        if w[i] >= nl:
            i -= 1
            continue
        if i > 0 and (w[i] ^ 1) == w[i - 1]:
            continue
        if i < n - 1:
            i += 1
            w[i] = -1
            continue
        if n > 1 and (w[0] ^ 1) == w[n - 1]:
            continue
        canonical = True
        for r in range(1, n):
            smaller = False
            for j in range(n):
                a = w[(r + j) % n]
                b = w[j]
                if a < b:
                    smaller = True
                    break
                if a > b:
                    break
            if smaller:
                canonical = False
                break
        if canonical:
            for j in range(n):
                out[count, j] = w[j]
            count += 1
    return count


def necklaces(n: int, k: int) -> np.ndarray:
    """All cyclically reduced lex-least rotations of length n, one row each."""
    if n < 1:
        return np.empty((0, 0), np.int8)
    bound = (cyclically_reduced_count(n, k) // n
             + 2 * cyclically_reduced_count(max(n // 2, 1), k) + 8)
    out = np.empty((bound, n), np.int8)
    count = fill_necklaces(n, 2 * k, out)
    return out[:count].copy()


# ---------------------------------------------------------------------------
# free reduction and automorphism application
# ---------------------------------------------------------------------------


@_kernel
def image_length(word, img_flat, img_off):
    # reduced length of phi(word); img_flat/img_off pack the letter images
    cap = 8
    for i in range(word.shape[0]):
        l = word[i]
        cap += img_off[l + 1] - img_off[l]
    stack = np.empty(cap, np.int16)
    sp = 0
    for i in range(word.shape[0]):
        l = word[i]
        for p in range(img_off[l], img_off[l + 1]):
            x = img_flat[p]
            if sp > 0 and stack[sp - 1] == (x ^ 1):
                sp -= 1
            else:
                stack[sp] = x
                sp += 1
    return sp


# ---------------------------------------------------------------------------
# readability in a folded core (Stallings graphs, laminary languages)
# ---------------------------------------------------------------------------


@_kernel
def readable(trans, word, reps):
    # True iff word^reps labels a reduced path somewhere in the automaton.
    ns = trans.shape[0]
    if ns == 0:
        return False
    cur = np.ones(ns, np.bool_)
    nxt = np.empty(ns, np.bool_)
    for _ in range(reps):
        for i in range(word.shape[0]):
            l = word[i]
            for s in range(ns):
                nxt[s] = False
            alive = False
            for s in range(ns):
                if cur[s]:
                    t = trans[s, l]
                    if t >= 0:
                        nxt[t] = True
                        alive = True
            if not alive:
                return False
            for s in range(ns):
                cur[s] = nxt[s]
    return True


# ---------------------------------------------------------------------------
# Bass-Serre length of a cyclic word in a trivial-edge-group splitting
# ---------------------------------------------------------------------------
#
# Splitting data (precompiled on the Python side):
#   lv[letter]  vertex id of a vertex-generator letter, else -1
#   le[letter]  signed edge id (1-based) of a stable letter, else 0
#   eo[e], et[e]  endpoints of edge e when traversed positively
#   tp[u, v, :tpl[u, v]]  signed edge ids of the tree geodesic u -> v
#
# The word must be cyclically reduced over the adapted basis.  Tokens: type
# 0 is an edge crossing (tv = signed edge id), type 1 a nonempty vertex
# syllable (tv = vertex, content scratch[ts:ts+tl]).  A cyclic Y-path is
# reduced by cancelling adjacent crossings e, e^{-1} (trivial edge groups)
# and merging adjacent syllables at one vertex, which may free-cancel to
# nothing and expose new crossings.


@_kernel
def y_apply_rule(i, j, tt, tv, ts, tl, alive, scratch, send):
    # Rewrite at the adjacent alive tokens i -> j; returns the new scratch
    # end, or -1 if no rule applies here.
    if tt[i] == 0 and tt[j] == 0:
        if tv[i] == -tv[j]:
            alive[i] = False
            alive[j] = False
            return send
        return -1
    if tt[i] == 1 and tt[j] == 1 and tv[i] == tv[j]:
        p = send
        for q in range(ts[i], ts[i] + tl[i]):
            scratch[p] = scratch[q]
            p += 1
        for q in range(ts[j], ts[j] + tl[j]):
            x = scratch[q]
            if p > send and scratch[p - 1] == (x ^ 1):
                p -= 1
            else:
                scratch[p] = x
                p += 1
        if p == send:
            alive[i] = False
            alive[j] = False
            return send
        ts[i] = send
        tl[i] = p - send
        alive[j] = False
        return p
    return -1


@_kernel
def y_length_raw(word, lv, le, eo, et, tp, tpl, tt, tv, ts, tl, scratch):
    n = word.shape[0]
    ntok = 0
    send = 0
    cur = -1
    first = -1
    for i in range(n):
        l = word[i]
        v = lv[l]
        if v >= 0:
            if cur == v and ntok > 0 and tt[ntok - 1] == 1 and tv[ntok - 1] == v:
                scratch[send] = l
                send += 1
                tl[ntok - 1] += 1
            else:
                if cur == -1:
                    first = v
                elif cur != v:
                    for j in range(tpl[cur, v]):
                        tt[ntok] = 0
                        tv[ntok] = tp[cur, v, j]
                        ntok += 1
                tt[ntok] = 1
                tv[ntok] = v
                ts[ntok] = send
                tl[ntok] = 1
                scratch[send] = l
                send += 1
                ntok += 1
            cur = v
        else:
            e = le[l]
            if e > 0:
                s = eo[e]
                t = et[e]
            else:
                s = et[-e]
                t = eo[-e]
            if cur == -1:
                first = s
            elif cur != s:
                for j in range(tpl[cur, s]):
                    tt[ntok] = 0
                    tv[ntok] = tp[cur, s, j]
                    ntok += 1
            tt[ntok] = 0
            tv[ntok] = e
            ntok += 1
            cur = t
    if ntok == 0:
        return 0
    if cur != first:
        for j in range(tpl[cur, first]):
            tt[ntok] = 0
            tv[ntok] = tp[cur, first, j]
            ntok += 1

    alive = np.ones(ntok, np.bool_)
    nalive = ntok
    progress = True
    while progress and nalive > 0:
        progress = False
        prev = -1
        firstalive = -1
        for i in range(ntok):
            if not alive[i]:
                continue
            if firstalive < 0:
                firstalive = i
            if prev >= 0:
                res = y_apply_rule(prev, i, tt, tv, ts, tl, alive, scratch, send)
                if res >= 0:
                    send = res
                    progress = True
                    break
            prev = i
        if not progress and nalive >= 2 and prev != firstalive:
            res = y_apply_rule(prev, firstalive, tt, tv, ts, tl, alive, scratch, send)
            if res >= 0:
                send = res
                progress = True
        if progress:
            nalive = 0
            for j in range(ntok):
                if alive[j]:
                    nalive += 1
    edges = 0
    for i in range(ntok):
        if alive[i] and tt[i] == 0:
            edges += 1
    return edges


def _y_work_arrays(n: int, nverts: int, max_tp: int):
    max_tok = (n + 2) * (max_tp + 2) + 4
    tt = np.empty(max_tok, np.int16)
    tv = np.empty(max_tok, np.int16)
    ts = np.empty(max_tok, np.int32)
    tl = np.empty(max_tok, np.int32)
    scratch = np.empty(16 + 2 * n + max_tok * (n + 2), np.int16)
    return tt, tv, ts, tl, scratch


def y_length(word: np.ndarray, pack) -> int:
    """Edge crossings of the cyclically reduced Y-path of ``word``."""
    lv, le, eo, et, tp, tpl = pack
    if word.shape[0] == 0:
        return 0
    tt, tv, ts, tl, scratch = _y_work_arrays(word.shape[0], tp.shape[0], tp.shape[2])
    return int(y_length_raw(word, lv, le, eo, et, tp, tpl, tt, tv, ts, tl, scratch))


# ---------------------------------------------------------------------------
# batched sweeps for the acceptance experiments
# ---------------------------------------------------------------------------


@_kernel
def sweep_equivalence_raw(words, lv, le, eo, et, tp, tpl, ctrans, coffs,
                          tt, tv, ts, tl, scratch):
    # For every cyclic word row: Bass-Serre length vs vertex-core
    # readability of a pigeonhole power. Returns (#mismatches, first bad
    # row, #elliptic rows).
    rows = words.shape[0]
    n = words.shape[1]
    ncores = coffs.shape[0] - 1
    bad = 0
    first_bad = -1
    nell = 0
    w16 = np.empty(n, np.int16)
    for r in range(rows):
        for j in range(n):
            w16[j] = words[r, j]
        yl = y_length_raw(w16, lv, le, eo, et, tp, tpl, tt, tv, ts, tl, scratch)
        incl = False
        for c in range(ncores):
            sub = ctrans[coffs[c]:coffs[c + 1]]
            if readable(sub, w16, sub.shape[0] + 1):
                incl = True
                break
        if (yl == 0) != incl:
            bad += 1
            if first_bad < 0:
                first_bad = r
        if yl == 0:
            nell += 1
    return bad, first_bad, nell


def sweep_equivalence(words: np.ndarray, spack, ctrans: np.ndarray, coffs: np.ndarray):
    lv, le, eo, et, tp, tpl = spack
    if words.shape[0] == 0:
        return 0, -1, 0
    tt, tv, ts, tl, scratch = _y_work_arrays(words.shape[1], tp.shape[0], tp.shape[2])
    bad, first_bad, nell = sweep_equivalence_raw(
        words, lv, le, eo, et, tp, tpl, ctrans, coffs, tt, tv, ts, tl, scratch)
    return int(bad), int(first_bad), int(nell)


@_kernel
def sweep_ratio_raw(words, lv1, le1, eo1, et1, tp1, tpl1,
                    lv2, le2, eo2, et2, tp2, tpl2, rose_num,
                    tt, tv, ts, tl, scratch):
    # extremes of (||w||_S1 + ||w||_S2) / ||w||_T0 over all rows; the rose
    # length of w enters as an integer multiple of a fixed 1/D.
    rows = words.shape[0]
    n = words.shape[1]
    w16 = np.empty(n, np.int16)
    min_num = np.int64(-1)
    min_den = np.int64(1)
    max_num = np.int64(-1)
    max_den = np.int64(1)
    for r in range(rows):
        den = np.int64(0)
        for j in range(n):
            w16[j] = words[r, j]
            den += rose_num[words[r, j]]
        y1 = y_length_raw(w16, lv1, le1, eo1, et1, tp1, tpl1, tt, tv, ts, tl, scratch)
        y2 = y_length_raw(w16, lv2, le2, eo2, et2, tp2, tpl2, tt, tv, ts, tl, scratch)
        num = np.int64(y1 + y2)
        if min_num < 0 or num * min_den < min_num * den:
            min_num = num
            min_den = den
        if max_num < 0 or num * max_den > max_num * den:
            max_num = num
            max_den = den
    return min_num, min_den, max_num, max_den


def sweep_ratio(words: np.ndarray, spack1, spack2, rose_num: np.ndarray):
    if words.shape[0] == 0:
        return None
    n = words.shape[1]
    nv = max(spack1[4].shape[0], spack2[4].shape[0])
    mt = max(spack1[4].shape[2], spack2[4].shape[2])
    tt, tv, ts, tl, scratch = _y_work_arrays(n, nv, mt)
    out = sweep_ratio_raw(words, *spack1, *spack2, rose_num, tt, tv, ts, tl, scratch)
    return tuple(int(x) for x in out)
