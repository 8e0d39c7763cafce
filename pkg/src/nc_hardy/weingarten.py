"""Exact integration of polynomials in Haar-unitary entries.

Weingarten coefficients are obtained from the Gram system over the symmetric
group, reduced to conjugacy classes and solved in exact rational arithmetic,
so every value produced here is an exact Fraction.  On top of that sit the
entry-moment formula and the boundary trace pairings used by the Hardy-space
layer: products of independent unitaries (polydisc boundary) and block
columns/rows of a single larger unitary (ball boundaries).
"""

from __future__ import annotations

import threading
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product as iterproduct
from typing import Iterable, Sequence

from .words import AlphabetMismatchError, NcSeries, Word

__all__ = [
    "ExactEngineError",
    "GramSingularityError",
    "MultiplicityLimitError",
    "Permutation",
    "cycle_count",
    "partitions",
    "WeingartenTable",
    "DEFAULT_TABLE",
    "weingarten",
    "haar_entry_moment",
    "BoundaryKind",
    "pairing_moment_exact",
    "sesquilinear_moment_exact",
]


class ExactEngineError(Exception):
    """Base class for exact-integrator precondition failures."""


class GramSingularityError(ExactEngineError):
    """Weingarten data requested in the singular regime N < n (unsupported)."""


class MultiplicityLimitError(ExactEngineError):
    """Word multiplicities exceed the supported Weingarten order."""


class Permutation:
    """A permutation of {1..n} stored as its tuple of images."""

    __slots__ = ("_images",)

    def __init__(self, images: Iterable[int]) -> None:
        imgs = tuple(int(i) for i in images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError("images must be a bijection of 1..n")
        self._images = imgs

    @property
    def images(self) -> tuple[int, ...]:
        return self._images

    @property
    def n(self) -> int:
        return len(self._images)

    def __call__(self, i: int) -> int:
        return self._images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition self(other(i))."""
        if self.n != other.n:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(self._images[other._images[i] - 1] for i in range(self.n))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self._images):
            inv[v - 1] = i + 1
        return Permutation(inv)

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * self.n
        out = []
        for start in range(1, self.n + 1):
            if seen[start - 1]:
                continue
            cyc = []
            j = start
            while not seen[j - 1]:
                seen[j - 1] = True
                cyc.append(j)
                j = self._images[j - 1]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> tuple[int, ...]:
        return tuple(sorted((len(c) for c in self.cycles()), reverse=True))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "Permutation":
        imgs = list(range(1, n + 1))
        imgs[i - 1], imgs[j - 1] = imgs[j - 1], imgs[i - 1]
        return cls(imgs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Permutation) and self._images == other._images

    def __hash__(self) -> int:
        return hash(self._images)

    def __repr__(self) -> str:
        return f"Permutation{self._images}"


def cycle_count(sigma: Permutation) -> int:
    """Number of cycles, fixed points included."""
    return len(sigma.cycles())


# 0-based permutation helpers for the hot combinatorial loops.

def _cycle_type0(perm: Sequence[int]) -> tuple[int, ...]:
    n = len(perm)
    seen = [False] * n
    lens = []
    for i in range(n):
        if seen[i]:
            continue
        c = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            c += 1
        lens.append(c)
    return tuple(sorted(lens, reverse=True))


def _invert0(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for i, v in enumerate(perm):
        inv[v] = i
    return inv


def partitions(n: int, max_part: int | None = None) -> list[tuple[int, ...]]:
    """All partitions of n with weakly decreasing parts."""
    if max_part is None:
        max_part = n
    if n == 0:
        return [()]
    out = []
    for k in range(min(n, max_part), 0, -1):
        for rest in partitions(n - k, k):
            out.append((k,) + rest)
    return out


def _class_representative(cycle_type: tuple[int, ...]) -> tuple[int, ...]:
    n = sum(cycle_type)
    img = list(range(n))
    pos = 0
    for c in cycle_type:
        for i in range(c):
            img[pos + i] = pos + (i + 1) % c
        pos += c
    return tuple(img)


def _solve_fraction_system(A: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    k = len(A)
    M = [A[i][:] + [rhs[i]] for i in range(k)]
    for col in range(k):
        piv = next((r for r in range(col, k) if M[r][col] != 0), None)
        if piv is None:
            raise GramSingularityError("class Gram system is singular")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(k):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[i][k] for i in range(k)]


def _solve_wg_system(n: int, N: int) -> dict[tuple[int, ...], Fraction]:
    """Weingarten values by cycle type at order n, dimension N.

    Wg is a class function and the Gram operator sigma -> sum_tau N^{#(sigma
    tau^{-1})} wg(tau) acts on class functions, so the n! x n! inversion
    collapses to a p(n) x p(n) system: A[mu][lam] = sum_{sigma in class lam}
    N^{#(rep_mu sigma^{-1})}, solved exactly against the indicator of the
    identity class.
    """
    parts = partitions(n)
    index = {pt: i for i, pt in enumerate(parts)}
    reps = [_class_representative(pt) for pt in parts]
    k = len(parts)
    A = [[0] * k for _ in range(k)]
    for sigma in permutations(range(n)):
        lam = index[_cycle_type0(sigma)]
        sinv = _invert0(sigma)
        for mu, rep in enumerate(reps):
            comp = tuple(rep[sinv[i]] for i in range(n))
            A[mu][lam] += N ** len(_cycle_type0(comp))
    frac_a = [[Fraction(x) for x in row] for row in A]
    rhs = [Fraction(1) if pt == (1,) * n else Fraction(0) for pt in parts]
    sol = _solve_fraction_system(frac_a, rhs)
    return {parts[i]: sol[i] for i in range(k)}


class WeingartenTable:
    """Shared cache of exact Weingarten values keyed by (n, N) and cycle type.

    Single writer, concurrent readers: inserts happen under a lock, lookups are
    plain dict reads on fully built per-(n, N) sub-tables.
    """

    def __init__(self, max_n: int = 6) -> None:
        if max_n < 1:
            raise ValueError("max_n must be >= 1")
        self.max_n = max_n
        self._values: dict[tuple[int, int], dict[tuple[int, ...], Fraction]] = {}
        self._lock = threading.Lock()

    def values(self, n: int, N: int) -> dict[tuple[int, ...], Fraction]:
        """All Wg(N, .) of order n, keyed by cycle type."""
        if not 1 <= n <= self.max_n:
            raise MultiplicityLimitError(
                f"order n = {n} outside supported range [1, {self.max_n}]"
            )
        if N < n:
            raise GramSingularityError(
                f"need N >= n for an invertible Gram system (got N = {N}, n = {n})"
            )
        key = (n, N)
        got = self._values.get(key)
        if got is None:
            computed = _solve_wg_system(n, N)
            with self._lock:
                self._values.setdefault(key, computed)
            got = self._values[key]
        return got

    def wg(self, n: int, N: int, cycle_type: tuple[int, ...]) -> Fraction:
        ct = tuple(sorted(cycle_type, reverse=True))
        if sum(ct) != n:
            raise ValueError(f"cycle type {ct} is not a partition of {n}")
        return self.values(n, N)[ct]


DEFAULT_TABLE = WeingartenTable()


def weingarten(
    n: int, N: int, sigma: Permutation, table: WeingartenTable | None = None
) -> Fraction:
    """Wg(N, sigma): the (sigma, identity) entry of the inverse Gram matrix over S_n.

    Depends only on the cycle type of sigma; values are exact rationals.
    """
    if sigma.n != n:
        raise ValueError(f"permutation acts on {sigma.n} points, expected {n}")
    tab = table if table is not None else DEFAULT_TABLE
    return tab.wg(n, N, sigma.cycle_type())


def _value_matching_bijections(
    a: Sequence[object], b: Sequence[object]
) -> list[tuple[int, ...]]:
    """All 0-based bijections f with b[f(k)] == a[k]; empty if the multisets differ."""
    if len(a) != len(b):
        return []
    pos_a: dict[object, list[int]] = defaultdict(list)
    pos_b: dict[object, list[int]] = defaultdict(list)
    for i, v in enumerate(a):
        pos_a[v].append(i)
    for i, v in enumerate(b):
        pos_b[v].append(i)
    if set(pos_a) != set(pos_b):
        return []
    if any(len(pos_a[v]) != len(pos_b[v]) for v in pos_a):
        return []
    values = list(pos_a)
    out = []
    for choice in iterproduct(*[permutations(pos_b[v]) for v in values]):
        f = [0] * len(a)
        for vi, v in enumerate(values):
            for slot, a_pos in enumerate(pos_a[v]):
                f[a_pos] = choice[vi][slot]
        out.append(tuple(f))
    return out


def haar_entry_moment(
    ups: Sequence[tuple[int, int]],
    conjs: Sequence[tuple[int, int]],
    N: int,
    table: WeingartenTable | None = None,
) -> Fraction:
    """Exact Haar-unitary entry moment E[prod u_{ij} * prod conj(u_{i'j'})].

    Vanishes identically when the two factor counts differ; otherwise it is the
    double sum over permutation pairs (sigma, tau) matching row and column
    indices, weighted by Wg(N, tau sigma^{-1}).
    """
    for i, j in list(ups) + list(conjs):
        if not (1 <= i <= N and 1 <= j <= N):
            raise ValueError(f"entry index ({i}, {j}) outside [1, {N}]^2")
    if len(ups) != len(conjs):
        return Fraction(0)
    n = len(ups)
    if n == 0:
        return Fraction(1)
    tab = table if table is not None else DEFAULT_TABLE
    wg = tab.values(n, N)
    sigmas = _value_matching_bijections([i for i, _ in ups], [i for i, _ in conjs])
    if not sigmas:
        return Fraction(0)
    taus = _value_matching_bijections([j for _, j in ups], [j for _, j in conjs])
    if not taus:
        return Fraction(0)
    total = Fraction(0)
    for sig in sigmas:
        for tau in taus:
            pi = [0] * n
            for k in range(n):
                pi[sig[k]] = tau[k]
            total += wg[_cycle_type0(pi)]
    return total


@dataclass(frozen=True)
class BoundaryKind:
    """A distinguished boundary: m independent unitaries (polydisc) or the first
    block column/row of one Haar unitary of size mN (ball)."""

    family: str
    m: int

    _FAMILIES = ("polydisc", "ball_column", "ball_row")

    def __post_init__(self) -> None:
        if self.family not in self._FAMILIES:
            raise ValueError(f"family must be one of {self._FAMILIES}")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def is_ball(self) -> bool:
        return self.family != "polydisc"

    @classmethod
    def polydisc(cls, m: int) -> "BoundaryKind":
        return cls("polydisc", m)

    @classmethod
    def ball_column(cls, m: int) -> "BoundaryKind":
        return cls("ball_column", m)

    @classmethod
    def ball_row(cls, m: int) -> "BoundaryKind":
        return cls("ball_row", m)


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def class_count(self) -> int:
        return len({self.find(x) for x in range(len(self.parent))})


def _check_letters(w: Word, v: Word, m: int) -> None:
    bad = max(w.max_letter(), v.max_letter())
    if bad > m:
        raise AlphabetMismatchError(f"word letter {bad} outside alphabet [1, {m}]")


def pairing_moment_exact(
    w: Word,
    v: Word,
    kind: BoundaryKind,
    N: int,
    table: WeingartenTable | None = None,
) -> Fraction:
    """Exact value of the boundary integral of Tr((X^w)* X^v).

    The trace is expanded into a cyclic chain of matrix-entry variables
    l_{-|v|}, ..., l_0, ..., l_{|w|} (with the closing identification
    l_{-|v|} = l_{|w|}).  Haar expectation is resolved by the entry-moment
    formula: for each independent unitary a pair of permutations (sigma for
    rows, tau for columns) is summed over, weighted by Wg(tau sigma^{-1}).
    Every delta constraint merges two chain indices; a merged class ranges
    freely over one block of size N and contributes a factor N.

    Polydisc: the m coordinates are independent, so the sum factorizes over
    letters, with per-letter order n_r = multiplicity of the letter (requires
    N >= max n_r).  Ball: all entries come from a single unitary of size mN,
    and the block offsets force the row (column ball) or column (row ball)
    matching to respect letters; inconsistent offsets kill the term (requires
    mN >= |w|).

    Unbalanced letter counts yield an exact rational zero with no Weingarten
    work at all.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    _check_letters(w, v, kind.m)
    if kind.family == "polydisc":
        return _pairing_polydisc(w, v, N, table if table is not None else DEFAULT_TABLE)
    return _pairing_ball(
        w,
        v,
        kind.m,
        N,
        table if table is not None else DEFAULT_TABLE,
        rows_blocked=kind.family == "ball_column",
    )


def _pairing_polydisc(w: Word, v: Word, N: int, table: WeingartenTable) -> Fraction:
    wl, vl = w.letters, v.letters
    if Counter(wl) != Counter(vl):
        return Fraction(0)
    s, t = len(vl), len(wl)
    if t == 0:
        return Fraction(N)
    nvars = s + t + 1
    var = lambda o: o + s  # chain offset o in [-s, t]

    options = []
    for letter in sorted(set(wl)):
        v_pos = [k + 1 for k, x in enumerate(vl) if x == letter]
        w_pos = [k + 1 for k, x in enumerate(wl) if x == letter]
        nr = len(v_pos)
        if nr > table.max_n:
            raise MultiplicityLimitError(
                f"letter {letter} has multiplicity {nr} > max_n = {table.max_n}"
            )
        wg = table.values(nr, N)
        opts = []
        for sig in permutations(range(nr)):
            rows = [(var(-v_pos[a] + 1), var(w_pos[sig[a]] - 1)) for a in range(nr)]
            for tau in permutations(range(nr)):
                pi = [0] * nr
                for a in range(nr):
                    pi[sig[a]] = tau[a]
                cols = [(var(-v_pos[a]), var(w_pos[tau[a]])) for a in range(nr)]
                opts.append((wg[_cycle_type0(pi)], rows + cols))
        options.append(opts)

    total = Fraction(0)
    for combo in iterproduct(*options):
        uf = _UnionFind(nvars)
        uf.union(var(-s), var(t))
        weight = Fraction(1)
        for wgt, merges in combo:
            weight *= wgt
            for a, b in merges:
                uf.union(a, b)
        total += weight * N ** uf.class_count()
    return total


def _pairing_ball(
    w: Word, v: Word, m: int, N: int, table: WeingartenTable, rows_blocked: bool
) -> Fraction:
    wl, vl = w.letters, v.letters
    if len(wl) != len(vl):
        return Fraction(0)
    n = len(wl)
    if n == 0:
        return Fraction(N)
    if Counter(wl) != Counter(vl):
        return Fraction(0)
    if n > table.max_n:
        raise MultiplicityLimitError(f"word length {n} > max_n = {table.max_n}")
    if m * N < n:
        raise GramSingularityError(
            f"ball pairing needs mN >= |w| (got mN = {m * N}, |w| = {n})"
        )
    wg = table.values(n, m * N)
    s = n
    nvars = 2 * n + 1
    var = lambda o: o + s

    if rows_blocked:
        sig_set = _value_matching_bijections(vl, wl)
        tau_set = list(permutations(range(n)))
    else:
        sig_set = list(permutations(range(n)))
        tau_set = _value_matching_bijections(vl, wl)

    total = Fraction(0)
    for sig in sig_set:
        rows = [(var(-k), var(sig[k])) for k in range(n)]
        for tau in tau_set:
            pi = [0] * n
            for k in range(n):
                pi[sig[k]] = tau[k]
            uf = _UnionFind(nvars)
            uf.union(var(-s), var(n))
            for a, b in rows:
                uf.union(a, b)
            for k in range(n):
                uf.union(var(-(k + 1)), var(tau[k] + 1))
            total += wg[_cycle_type0(pi)] * N ** uf.class_count()
    return total


def sesquilinear_moment_exact(
    f: NcSeries,
    g: NcSeries,
    r: float,
    kind: BoundaryKind,
    N: int,
    table: WeingartenTable | None = None,
) -> complex:
    """Exact boundary integral of (1/N) Tr(g(rX)* f(rX)).

    Bilinear expansion over word pairs into pairing_moment_exact, with the
    scale r^{|w|+|v|} per pair.  Real for f = g; complex in general.
    """
    if f.m != g.m:
        raise AlphabetMismatchError("series alphabets differ")
    if f.m != kind.m:
        raise AlphabetMismatchError("series and boundary alphabets differ")
    total = 0j
    for wv, gw in g.items():
        for vv, fv in f.items():
            pair = pairing_moment_exact(wv, vv, kind, N, table)
            if pair:
                total += gw.conjugate() * fv * (r ** (len(wv) + len(vv))) * (pair / N)
    return total
