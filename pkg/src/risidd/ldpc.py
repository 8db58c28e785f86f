"""Regular LDPC codes: progressive-edge-growth construction, systematic
encoding and flooding sum-product decoding.

LLR convention throughout: ``log P(bit=0) / P(bit=1)``, so positive means 0.
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LLR_CLIP = 30.0
_TANH_FLOOR = 1e-30
_TANH_CEIL = 1.0 - 1e-15


class CodeConstructionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ParityCheck:
    H: np.ndarray  # (m, n) uint8
    col_weight: int
    row_weight: int
    seed: int = 0
    # derived, filled in __post_init__
    info_cols: np.ndarray = field(init=False, repr=False)
    parity_cols: np.ndarray = field(init=False, repr=False)
    parity_map: np.ndarray = field(init=False, repr=False)
    edge_row: np.ndarray = field(init=False, repr=False)
    edge_col: np.ndarray = field(init=False, repr=False)
    _row_starts: np.ndarray = field(init=False, repr=False)
    _col_order: np.ndarray = field(init=False, repr=False)
    _col_starts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.uint8)
        object.__setattr__(self, "H", H)
        if np.any(H.sum(axis=0) == 0) or np.any(H.sum(axis=1) == 0):
            raise CodeConstructionError("every row and column needs at least one edge")
        pivots, rref = _gf2_rref(H)
        free = np.setdiff1d(np.arange(H.shape[1]), pivots)
        object.__setattr__(self, "parity_cols", pivots)
        object.__setattr__(self, "info_cols", free)
        # parity bit i = sum_j rref[i, free_j] * info_j (mod 2)
        object.__setattr__(self, "parity_map", rref[: len(pivots)][:, free])

        rows, cols = np.nonzero(H)  # row-major, i.e. sorted by check
        object.__setattr__(self, "edge_row", rows)
        object.__setattr__(self, "edge_col", cols)
        object.__setattr__(self, "_row_starts", np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]]))
        order = np.argsort(cols, kind="stable")
        object.__setattr__(self, "_col_order", order)
        sc = cols[order]
        object.__setattr__(self, "_col_starts", np.flatnonzero(np.r_[True, sc[1:] != sc[:-1]]))

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def k_info(self) -> int:
        return len(self.info_cols)

    @property
    def num_edges(self) -> int:
        return len(self.edge_row)

    def syndrome(self, bits) -> np.ndarray:
        bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
        return (bits @ self.H.T.astype(np.int64)) % 2

    # edge-domain reductions, operating on (B, E) arrays
    def _check_sum(self, x):
        return np.add.reduceat(x, self._row_starts, axis=1)

    def _var_sum(self, x):
        return np.add.reduceat(x[:, self._col_order], self._col_starts, axis=1)


def _gf2_rref(H: np.ndarray):
    """Reduced row echelon form over GF(2). Returns (pivot columns, rref)."""
    A = H.copy().astype(np.uint8)
    m, n = A.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hits = np.flatnonzero(A[row:, col])
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            A[[row, p]] = A[[p, row]]
        mask = A[:, col].astype(bool)
        mask[row] = False
        A[mask] ^= A[row]
        pivots.append(col)
        row += 1
    return np.array(pivots, dtype=np.int64), A


def has_four_cycle(H: np.ndarray) -> bool:
    """True if two columns share two or more checks."""
    Hi = np.asarray(H, dtype=np.int64)
    overlap = Hi.T @ Hi
    np.fill_diagonal(overlap, 0)
    return bool(np.any(overlap > 1))


def _peg(n: int, m: int, dv: int, dc: int, rng: np.random.Generator) -> np.ndarray | None:
    var_adj: list[list[int]] = [[] for _ in range(n)]
    chk_adj: list[list[int]] = [[] for _ in range(m)]
    deg = np.zeros(m, dtype=np.int64)

    def pick(candidates):
        candidates = [c for c in candidates if deg[c] < dc]
        if not candidates:
            return None
        cand = np.array(candidates)
        low = cand[deg[cand] == deg[cand].min()]
        return int(rng.choice(low))

    for j in range(n):
        for e in range(dv):
            if e == 0:
                c = pick(range(m))
            else:
                # breadth-first expansion from variable j through the current graph
                seen_chk = set(var_adj[j])
                seen_var = {j}
                frontier = list(var_adj[j])
                last_unreached = [c for c in range(m) if c not in seen_chk]
                while True:
                    nxt = []
                    for ch in frontier:
                        for v in chk_adj[ch]:
                            if v in seen_var:
                                continue
                            seen_var.add(v)
                            for ch2 in var_adj[v]:
                                if ch2 not in seen_chk:
                                    seen_chk.add(ch2)
                                    nxt.append(ch2)
                    unreached = [c for c in range(m) if c not in seen_chk]
                    if not nxt or not unreached:
                        break
                    last_unreached = unreached
                    frontier = nxt
                target = unreached if (unreached and not nxt) else last_unreached
                c = pick(target)
                if c is None:
                    c = pick([x for x in range(m) if x not in var_adj[j]])
            if c is None:
                return None
            var_adj[j].append(c)
            chk_adj[c].append(j)
            deg[c] += 1

    H = np.zeros((m, n), dtype=np.uint8)
    for j, checks in enumerate(var_adj):
        H[checks, j] = 1
    return H


@functools.lru_cache(maxsize=8)
def construct_code(n: int = 512, rate: float = 0.5, seed: int = 0, col_weight: int = 3,
                   max_retries: int = 50) -> ParityCheck:
    """Build a (col_weight, row_weight)-regular code by progressive edge growth.

    The row weight follows from ``n``, ``rate`` and ``col_weight``. Attempts
    that miss the regularity, girth >= 6, or (for odd column weight) the full
    row rank requirement are retried with derived seeds.
    """
    m_f = n * (1.0 - rate)
    m = int(round(m_f))
    if abs(m - m_f) > 1e-9 or m <= 0:
        raise CodeConstructionError(f"n*(1-rate) must be a positive integer, got {m_f}")
    if (n * col_weight) % m:
        raise CodeConstructionError(f"no regular code with n={n}, m={m}, column weight {col_weight}")
    dc = n * col_weight // m
    ss = np.random.SeedSequence(seed)
    for attempt, child in enumerate(ss.spawn(max_retries)):
        H = _peg(n, m, col_weight, dc, np.random.default_rng(child))
        if H is None or has_four_cycle(H):
            continue
        if not (np.all(H.sum(axis=0) == col_weight) and np.all(H.sum(axis=1) == dc)):
            continue
        pc = ParityCheck(H, col_weight=col_weight, row_weight=dc, seed=seed)
        # an even column weight forces the rows to sum to zero, so full rank is impossible
        if col_weight % 2 and pc.k_info != n - m:
            continue
        return pc
    raise CodeConstructionError(
        f"no valid ({col_weight},{dc}) code for n={n} after {max_retries} attempts (seed={seed})"
    )


def encode(pc: ParityCheck, info_bits) -> np.ndarray:
    """Systematic encoding; accepts a single block or a (B, k_info) batch."""
    u = np.asarray(info_bits, dtype=np.uint8)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[1] != pc.k_info:
        raise ValueError(f"expected {pc.k_info} info bits, got {u.shape[1]}")
    c = np.zeros((u.shape[0], pc.n), dtype=np.uint8)
    c[:, pc.info_cols] = u
    c[:, pc.parity_cols] = (u.astype(np.int64) @ pc.parity_map.T.astype(np.int64)) % 2
    return c[0] if single else c


def extract_info(pc: ParityCheck, codeword) -> np.ndarray:
    return np.asarray(codeword)[..., pc.info_cols]


@dataclass
class DecodeResult:
    posterior: np.ndarray
    extrinsic: np.ndarray
    hard_bits: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


def _check_update(pc: ParityCheck, v2c: np.ndarray) -> np.ndarray:
    t = np.tanh(v2c / 2.0)
    neg = (t < 0).astype(np.int64)
    mag = np.clip(np.abs(t), _TANH_FLOOR, None)
    logmag = np.log(mag)
    tot_log = pc._check_sum(logmag)[:, pc.edge_row]
    tot_neg = pc._check_sum(neg)[:, pc.edge_row]
    prod = np.exp(tot_log - logmag)
    prod = np.minimum(prod, _TANH_CEIL)
    sign = 1.0 - 2.0 * ((tot_neg - neg) % 2)
    return np.clip(2.0 * np.arctanh(sign * prod), -LLR_CLIP, LLR_CLIP)


def decode(pc: ParityCheck, channel_llr, max_inner: int = 10) -> DecodeResult:
    """Flooding sum-product decoding of one block or a (B, n) batch.

    Each block stops as soon as its hard decision satisfies every check; at
    least one iteration always runs so the extrinsic output is informative.
    ``posterior == channel_llr + extrinsic`` holds exactly (after clipping the
    input to +-30). A zero posterior decides bit 0.
    """
    llr = np.asarray(channel_llr, dtype=float)
    single = llr.ndim == 1
    llr = np.clip(np.atleast_2d(llr), -LLR_CLIP, LLR_CLIP)
    if llr.shape[1] != pc.n:
        raise ValueError(f"expected {pc.n} LLRs per block, got {llr.shape[1]}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("channel LLRs must be finite")
    B = llr.shape[0]
    c2v = np.zeros((B, pc.num_edges))
    extrinsic = np.zeros_like(llr)
    posterior = llr.copy()
    hard = np.zeros(llr.shape, dtype=np.uint8)
    converged = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=np.int64)

    active = np.arange(B)
    for _ in range(max_inner):
        if active.size == 0:
            break
        L = llr[active]
        msgs = c2v[active]
        total = L + pc._var_sum(msgs)
        v2c = total[:, pc.edge_col] - msgs
        msgs = _check_update(pc, v2c)
        c2v[active] = msgs
        ext = pc._var_sum(msgs)
        post = L + ext
        hb = (post < 0).astype(np.uint8)
        ok = ~np.any(pc._check_sum(hb[:, pc.edge_col].astype(np.int64)) % 2, axis=1)
        extrinsic[active] = ext
        posterior[active] = post
        hard[active] = hb
        iters[active] += 1
        converged[active[ok]] = True
        active = active[~ok]

    if single:
        return DecodeResult(posterior[0], extrinsic[0], hard[0], converged[0:1], iters[0:1])
    return DecodeResult(posterior, extrinsic, hard, converged, iters)


def save_parity_check(pc: ParityCheck, path: str | Path) -> None:
    """Write H as text: a header ``n m col_weight row_weight`` followed by one
    line per check, ``row: c1 c2 ...`` (0-based column indices)."""
    m, n = pc.H.shape
    lines = [f"{n} {m} {pc.col_weight} {pc.row_weight}"]
    for r in range(m):
        cols = np.flatnonzero(pc.H[r])
        lines.append(f"{r}: " + " ".join(str(c) for c in cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_parity_check(path: str | Path) -> ParityCheck:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    n, m, dv, dc = (int(x) for x in text[0].split())
    H = np.zeros((m, n), dtype=np.uint8)
    for line in text[1:]:
        if not line.strip():
            continue
        head, _, rest = line.partition(":")
        H[int(head), [int(c) for c in rest.split()]] = 1
    return ParityCheck(H, col_weight=dv, row_weight=dc)
