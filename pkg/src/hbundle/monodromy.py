"""Unipotent monodromy: logarithms, Jordan profiles, sl2-triples and weight
filtrations.

Rational input is processed exactly (``Fraction`` object arrays); anything
else in complex floating point.  Two grading operators are produced for every
nilpotent ``N``:

* ``H0``, the neutral element of an sl2-triple, ``[H0, N] = 2N``,
  ``[H0, N-] = -2N-``, ``[N, N-] = H0``;
* ``Y = -H0``, the grading of the weight filtration, ``Y e_j = j e_j`` for the
  adapted basis with ``N e_j = e_{j-2}``.

Both are kept because the two conventions disagree by a sign and downstream
code refers to one or the other explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import _linalg as la


class NotUnipotent(ValueError):
    pass


def _coerce(M) -> np.ndarray:
    if isinstance(M, np.ndarray) and M.dtype == object:
        return M
    exact = la.as_exact(M)
    if exact is not None:
        return exact
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite matrix entries")
    return M


def _square(M: np.ndarray) -> int:
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M.shape[0]


@dataclass(frozen=True)
class UnipotentMonodromy:
    gamma: np.ndarray

    def __post_init__(self):
        g = _coerce(self.gamma)
        object.__setattr__(self, "gamma", g)
        n = _square(g)
        E = g - la.eye(n, la.is_exact(g))
        if not la.is_zero(la.matpow(E, n), tol=1e-10 * max(1.0, float(np.abs(la.to_complex(g)).max()) ** n)):
            raise NotUnipotent("monodromy not unipotent")

    @property
    def exact(self) -> bool:
        return la.is_exact(self.gamma)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class NilpotentLog:
    N: np.ndarray
    source: UnipotentMonodromy | None = None

    def __post_init__(self):
        N = _coerce(self.N)
        object.__setattr__(self, "N", N)
        n = _square(N)
        scale = max(1.0, float(np.abs(la.to_complex(N)).max()))
        if not la.is_zero(la.matpow(N, n), tol=1e-10 * scale**n):
            raise ValueError("matrix is not nilpotent")

    @property
    def exact(self) -> bool:
        return la.is_exact(self.N)

    @property
    def n(self) -> int:
        return self.N.shape[0]


def log_unipotent(gamma) -> NilpotentLog:
    """``N = log(gamma) = sum_{k=1}^{n-1} (-1)^{k+1} (gamma - I)^k / k``."""
    if not isinstance(gamma, UnipotentMonodromy):
        gamma = UnipotentMonodromy(gamma)
    g = gamma.gamma
    n = gamma.n
    exact = gamma.exact
    E = g - la.eye(n, exact)
    N = la.zeros((n, n), exact)
    P = la.eye(n, exact)
    for k in range(1, n):
        P = P @ E
        c = Fraction((-1) ** (k + 1), k) if exact else (-1) ** (k + 1) / k
        N = N + P * c
    return NilpotentLog(N, gamma)


def exp_nilpotent(N) -> np.ndarray:
    """Terminating exponential series of a nilpotent matrix (exact if rational)."""
    N = _coerce(N)
    n = _square(N)
    exact = la.is_exact(N)
    out = la.eye(n, exact)
    P = la.eye(n, exact)
    fact = 1
    for k in range(1, n):
        P = P @ N
        fact *= k
        out = out + P * (Fraction(1, fact) if exact else 1.0 / fact)
    return out


def _as_log(N) -> NilpotentLog:
    return N if isinstance(N, NilpotentLog) else NilpotentLog(N)


def kernel_ranks(N) -> list[int]:
    """``[rank N^0, rank N^1, ..., rank N^n]``."""
    N = _as_log(N).N
    n = N.shape[0]
    return [la.rank(la.matpow(N, k)) if k else n for k in range(n + 1)]


def jordan_profile(N) -> list[int]:
    """Jordan block sizes (descending) from the rank sequence of powers of N."""
    r = kernel_ranks(N)
    n = len(r) - 1
    # blocks of size >= k: r[k-1] - r[k]
    at_least = [r[k - 1] - r[k] for k in range(1, n + 1)] + [0]
    sizes: list[int] = []
    for k in range(n, 0, -1):
        sizes += [k] * (at_least[k - 1] - at_least[k])
    return sizes


def block_labels(b: int) -> list[int]:
    """Weight labels of a Jordan block of size b, ascending."""
    return list(range(-(b - 1), b, 2))


def lowering_coefficients(b: int) -> list[int]:
    """``c_i`` with ``N- f_i = c_i f_{i+1}`` in a chain basis ``N f_i = f_{i-1}``."""
    return [(i + 1) * (b - 1 - i) for i in range(b - 1)]


@dataclass(frozen=True)
class Block:
    size: int
    basis: np.ndarray  # n x size, columns e_j ordered by ascending label
    labels: tuple[int, ...]


@dataclass(frozen=True)
class Sl2Data:
    N: NilpotentLog
    jordan_profile: tuple[int, ...]
    blocks: tuple[Block, ...]
    P: np.ndarray
    H0: np.ndarray
    Nminus: np.ndarray
    Y: np.ndarray

    @property
    def n(self) -> int:
        return self.N.n

    @property
    def exact(self) -> bool:
        return self.N.exact

    @property
    def labels(self) -> list[int]:
        return [j for blk in self.blocks for j in blk.labels]

    def to_json(self) -> dict:
        from .jsonio import matrix_to_json

        return {
            "n": self.n,
            "N": matrix_to_json(self.N.N),
            "blocks": [
                {
                    "size": b.size,
                    "basis": [matrix_to_json(b.basis[:, i]) for i in range(b.size)],
                    "labels": list(b.labels),
                }
                for b in self.blocks
            ],
            "H0": matrix_to_json(self.H0),
            "Y": matrix_to_json(self.Y),
        }


def _chain_tops(N: np.ndarray) -> list[tuple[int, np.ndarray]]:
    n = N.shape[0]
    exact = la.is_exact(N)
    kernels = [la.nullspace(la.matpow(N, k)) for k in range(n + 2)]
    tops: list[tuple[int, np.ndarray]] = []
    for b in range(n, 0, -1):
        # vectors of height exactly b, modulo what longer chains already supply
        S = np.concatenate([kernels[b - 1], N @ kernels[b + 1]], axis=1) if n else kernels[b - 1]
        if S.shape[1] == 0:
            S = la.zeros((n, 0), exact)
        for j in la.extend(la.column_basis(S) if S.shape[1] else S, kernels[b]):
            tops.append((b, kernels[b][:, j]))
    return tops


def sl2_triple(N) -> Sl2Data:
    """Jordan-chain basis and an sl2-triple ``(H0, N, N-)`` for a nilpotent N.

    Chains are built from tops of height b that are independent modulo
    ``ker N^(b-1) + N ker N^(b+1)``, largest blocks first, candidates taken
    in the order of the canonical RREF kernel basis.
    """
    log = _as_log(N)
    Nm = log.N
    n = log.n
    exact = log.exact
    blocks: list[Block] = []
    cols = []
    for b, top in _chain_tops(Nm):
        chain = [top]
        for _ in range(b - 1):
            chain.append(Nm @ chain[-1])
        basis = np.stack(chain[::-1], axis=1)
        blocks.append(Block(b, basis, tuple(block_labels(b))))
        cols.append(basis)
    P = np.concatenate(cols, axis=1)
    if P.shape != (n, n):
        raise RuntimeError("Jordan chains do not span the space")
    Pinv = la.inv(P)
    H0a = la.zeros((n, n), exact)
    Nma = la.zeros((n, n), exact)
    off = 0
    for blk in blocks:
        for i, j in enumerate(blk.labels):
            H0a[off + i, off + i] = Fraction(-j) if exact else -j
        for i, c in enumerate(lowering_coefficients(blk.size)):
            Nma[off + i + 1, off + i] = Fraction(c) if exact else c
        off += blk.size
    H0 = P @ H0a @ Pinv
    Nminus = P @ Nma @ Pinv
    return Sl2Data(
        N=log,
        jordan_profile=tuple(b.size for b in blocks),
        blocks=tuple(blocks),
        P=P,
        H0=H0,
        Nminus=Nminus,
        Y=-H0,
    )


def bracket(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def bracket_defects(s: Sl2Data) -> dict[str, float]:
    """Sup-norm of the three sl2 bracket relations (exactly 0 over Q)."""
    N, H0, Nm = s.N.N, s.H0, s.Nminus
    rel = {
        "[H0,N]-2N": bracket(H0, N) - N * 2,
        "[H0,N-]+2N-": bracket(H0, Nm) + Nm * 2,
        "[N,N-]-H0": bracket(N, Nm) - H0,
    }
    return {k: float(np.abs(la.to_complex(v)).max(initial=0.0)) for k, v in rel.items()}


@dataclass(frozen=True)
class WeightFiltration:
    """Increasing filtration ``W_l`` indexed by integer weights.

    ``spaces[l]`` holds a basis (columns) of ``W_l`` for every weight in
    ``weights``; weights outside the range are 0 below and the whole space
    above.
    """

    n: int
    weights: tuple[int, ...]
    spaces: dict = field(default_factory=dict)
    exact: bool = False

    def W(self, l: int) -> np.ndarray:
        if not self.weights or l < self.weights[0]:
            return la.zeros((self.n, 0), self.exact)
        if l >= self.weights[-1]:
            return self.spaces[self.weights[-1]]
        return self.spaces[max(w for w in self.weights if w <= l)]

    def dim(self, l: int) -> int:
        return self.W(l).shape[1]

    def gr_dim(self, l: int) -> int:
        return self.dim(l) - self.dim(l - 1)


def weight_filtration(N) -> WeightFiltration:
    """``W_l`` spanned by adapted basis vectors with label <= l."""
    s = N if isinstance(N, Sl2Data) else sl2_triple(N)
    labels = s.labels
    weights = tuple(sorted(set(labels)))
    spaces = {}
    for w in weights:
        idx = [i for i, j in enumerate(labels) if j <= w]
        spaces[w] = s.P[:, idx]
    return WeightFiltration(s.n, weights, spaces, s.exact)


def weight_filtration_from_kernels(N) -> WeightFiltration:
    """Independent construction: ``W_l = sum_{i - j <= l} ker N^(i+1) cap im N^j``.

    Uses only kernels and images of powers of N (no sl2-triple).
    """
    log = _as_log(N)
    Nm, n, exact = log.N, log.n, log.exact
    kers = [la.nullspace(la.matpow(Nm, k)) for k in range(n + 1)]
    ims = [la.column_basis(la.matpow(Nm, k)) for k in range(n + 1)]

    pieces = {}
    for i, j in product(range(n), range(n)):
        pieces[(i, j)] = la.intersect(kers[i + 1], ims[j])
    spaces = {}
    weights = []
    for l in range(-(n - 1), n):
        cols = [pieces[(i, j)] for (i, j) in pieces if i - j <= l and pieces[(i, j)].shape[1]]
        if not cols:
            continue
        B = la.column_basis(np.concatenate(cols, axis=1))
        if not weights or B.shape[1] != spaces[weights[-1]].shape[1]:
            weights.append(l)
            spaces[l] = B
    return WeightFiltration(n, tuple(weights), spaces, exact)


def same_subspace(A: np.ndarray, B: np.ndarray) -> bool:
    if A.shape[1] != B.shape[1]:
        return False
    if A.shape[1] == 0:
        return True
    return la.rank(np.concatenate([A, B], axis=1)) == A.shape[1] == la.rank(A)


def filtration_defects(N, W: WeightFiltration) -> dict[str, bool]:
    """Check nestedness, ``N W_l in W_{l-2}`` and ``N^l: Gr_l ~ Gr_-l``."""
    Nm = _as_log(N).N
    out = {"nested": True, "lowering": True, "gr_isomorphism": True}
    ws = range(-W.n - 1, W.n + 2)
    for l in ws:
        A, B = W.W(l - 1), W.W(l)
        if A.shape[1] and la.rank(np.concatenate([B, A], axis=1)) != B.shape[1]:
            out["nested"] = False
        img = Nm @ B
        low = W.W(l - 2)
        if B.shape[1]:
            if low.shape[1] == 0:
                if not la.is_zero(img):
                    out["lowering"] = False
            elif la.rank(np.concatenate([low, img], axis=1)) != low.shape[1]:
                out["lowering"] = False
    for l in range(1, W.n):
        g, gm = W.gr_dim(l), W.gr_dim(-l)
        if g != gm:
            out["gr_isomorphism"] = False
            continue
        if g == 0:
            continue
        below = W.W(-l - 1)
        image = la.matpow(Nm, l) @ W.W(l)
        stacked = np.concatenate([below, image], axis=1) if below.shape[1] else image
        if la.rank(stacked) - below.shape[1] != g:
            out["gr_isomorphism"] = False
    return out


def jordan_matrix(profile, exact: bool = True) -> np.ndarray:
    """Nilpotent Jordan matrix with ``N e_j = e_{j-2}`` blocks (superdiagonal ones)."""
    n = sum(profile)
    J = la.zeros((n, n), exact)
    off = 0
    for b in profile:
        for i in range(b - 1):
            J[off + i, off + i + 1] = Fraction(1) if exact else 1.0
        off += b
    return J


def partitions(n: int, largest: int | None = None):
    """All integer partitions of n, parts in descending order."""
    largest = n if largest is None else largest
    if n == 0:
        yield []
        return
    for k in range(min(n, largest), 0, -1):
        for rest in partitions(n - k, k):
            yield [k] + rest
