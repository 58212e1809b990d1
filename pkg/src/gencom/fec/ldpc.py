"""Regular (3,6) LDPC code from a seeded random graph.

Construction is greedy per variable node: prefer checks with the most
free sockets, avoid creating length-4 cycles while possible, break ties
with seeded priorities. Encoding solves the parity equations from the
GF(2) reduced row echelon form of H; information bits sit at the free
(non-pivot) columns. Decoding is normalized min-sum (factor 0.75, at
most 50 iterations, early exit on parity satisfaction).
"""

from __future__ import annotations

import numpy as np

from ..rng import derive, uniform01

NORM_FACTOR = 0.75
MAX_ITER = 50
DEFAULT_GRAPH_SEED = 0x6C647063  # arbitrary fixed constant so configs agree

_CACHE: dict[tuple[int, int], "LdpcCode"] = {}


class LdpcConstructionError(RuntimeError):
    pass


def _build_graph(n: int, seed: int) -> np.ndarray:
    """Returns chk_vars (m, 6): the 6 variable indices of each check."""
    m = n // 2
    cap = np.full(m, 6, dtype=np.int64)
    chk_sets: list[set[int]] = [set() for _ in range(m)]
    chk_lists: list[list[int]] = [[] for _ in range(m)]
    prio_seed = derive(seed, "ldpc-prio")
    for v in range(n):
        prio = uniform01(prio_seed, v * m, m)
        order = np.lexsort((prio, -cap))
        chosen: list[int] = []
        remaining = int(cap.sum())
        for _ in range(3):
            picked = -1
            if remaining > 24:
                for c in order:
                    c = int(c)
                    if cap[c] == 0 or c in chosen:
                        continue
                    if any(chk_sets[c] & chk_sets[c2] for c2 in chosen):
                        continue
                    picked = c
                    break
            if picked < 0:
                for c in order:
                    c = int(c)
                    if cap[c] > 0 and c not in chosen:
                        picked = c
                        break
            if picked < 0:
                raise LdpcConstructionError(
                    f"no check with free sockets left at variable {v}"
                )
            chosen.append(picked)
            cap[picked] -= 1
        for c in chosen:
            chk_sets[c].add(v)
            chk_lists[c].append(v)
    if cap.any():
        raise LdpcConstructionError("socket count mismatch after construction")
    return np.array(chk_lists, dtype=np.int64)


def _rref_gf2(h: np.ndarray):
    r = h.copy()
    m, n = r.shape
    pivots: list[int] = []
    row = 0
    for col in range(n):
        nz = np.nonzero(r[row:, col])[0]
        if len(nz) == 0:
            continue
        sel = row + int(nz[0])
        if sel != row:
            r[[row, sel]] = r[[sel, row]]
        others = np.nonzero(r[:, col])[0]
        others = others[others != row]
        r[others] ^= r[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    return r[:row], np.array(pivots, dtype=np.int64)


class LdpcCode:
    def __init__(self, n: int, seed: int = DEFAULT_GRAPH_SEED):
        if n < 12 or n % 2:
            raise ValueError("LDPC code length must be even and at least 12")
        self.n = n
        self.m = n // 2
        self.seed = seed
        self.chk_vars = _build_graph(n, seed)

        h = np.zeros((self.m, n), dtype=np.uint8)
        rows = np.repeat(np.arange(self.m), 6)
        h[rows, self.chk_vars.reshape(-1)] = 1
        self.h = h

        # Variable-side gather maps: for variable v, its 3 (check, slot) edges.
        var_chks = np.zeros((n, 3), dtype=np.int64)
        var_pos = np.zeros((n, 3), dtype=np.int64)
        fill = np.zeros(n, dtype=np.int64)
        for c in range(self.m):
            for slot in range(6):
                v = self.chk_vars[c, slot]
                var_chks[v, fill[v]] = c
                var_pos[v, fill[v]] = slot
                fill[v] += 1
        if not (fill == 3).all():
            raise LdpcConstructionError("graph is not variable-regular of degree 3")
        self.var_chks = var_chks
        self.var_pos = var_pos

        rref, pivots = _rref_gf2(h)
        self.rank = len(pivots)
        self.pivot_cols = pivots
        free = np.setdiff1d(np.arange(n), pivots)
        self.info_positions = free
        self.k_info = n - self.rank
        self._parity_gen = rref[:, free]  # (rank, k_info)

    @property
    def rate(self) -> float:
        return self.k_info / self.n

    def encode(self, bits: np.ndarray) -> np.ndarray:
        """Pads to a whole number of codewords; info bits go to the free
        columns, parity fills the pivot columns."""
        bits = np.asarray(bits, dtype=np.uint8)
        npad = (-len(bits)) % self.k_info
        if npad:
            bits = np.concatenate([bits, np.zeros(npad, dtype=np.uint8)])
        u = bits.reshape(-1, self.k_info)
        parity = (u @ self._parity_gen.T) % 2
        c = np.zeros((u.shape[0], self.n), dtype=np.uint8)
        c[:, self.info_positions] = u
        c[:, self.pivot_cols] = parity.astype(np.uint8)
        return c.reshape(-1)

    def decode(self, llrs: np.ndarray) -> np.ndarray:
        """Min-sum decode of one or more concatenated codewords; returns
        the recovered information bits (padding included)."""
        llrs = np.asarray(llrs, dtype=np.float64)
        if len(llrs) % self.n:
            raise ValueError("LLR stream length not a multiple of n")
        lch = llrs.reshape(-1, self.n)
        nb = lch.shape[0]
        r = np.zeros((nb, self.m, 6))
        hard = (lch < 0).astype(np.uint8)
        out = hard.copy()
        done = self._parity_ok(hard)
        slot = np.arange(6)
        for _ in range(MAX_ITER):
            if done.all():
                break
            total = lch + r[:, self.var_chks, self.var_pos].sum(axis=2)
            q = total[:, self.chk_vars] - r
            absq = np.abs(q)
            sgn = np.where(q < 0, -1.0, 1.0)
            sexcl = sgn.prod(axis=2, keepdims=True) * sgn
            i1 = absq.argmin(axis=2)
            m1 = np.take_along_axis(absq, i1[:, :, None], axis=2)
            tmp = absq.copy()
            np.put_along_axis(tmp, i1[:, :, None], np.inf, axis=2)
            m2 = tmp.min(axis=2, keepdims=True)
            mags = np.where(slot[None, None, :] == i1[:, :, None], m2, m1)
            r = NORM_FACTOR * sexcl * mags
            total = lch + r[:, self.var_chks, self.var_pos].sum(axis=2)
            hard = (total < 0).astype(np.uint8)
            ok = self._parity_ok(hard)
            newly = ok & ~done
            out[newly] = hard[newly]
            done |= ok
        out[~done] = hard[~done]
        return out[:, self.info_positions].reshape(-1)

    def _parity_ok(self, hard: np.ndarray) -> np.ndarray:
        syn = hard[:, self.chk_vars].sum(axis=2) % 2
        return ~syn.any(axis=1)

    def to_alist(self) -> str:
        """Standard alist text form of H for external cross-checking."""
        lines = [f"{self.n} {self.m}", "3 6"]
        lines.append(" ".join(["3"] * self.n))
        lines.append(" ".join(["6"] * self.m))
        for v in range(self.n):
            lines.append(" ".join(str(c + 1) for c in sorted(self.var_chks[v])))
        for c in range(self.m):
            lines.append(" ".join(str(v + 1) for v in sorted(self.chk_vars[c])))
        return "\n".join(lines) + "\n"


def get_code(n: int, seed: int = DEFAULT_GRAPH_SEED) -> LdpcCode:
    key = (n, seed)
    if key not in _CACHE:
        _CACHE[key] = LdpcCode(n, seed)
    return _CACHE[key]
