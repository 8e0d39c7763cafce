"""Hardy-space layer: coefficient inner products, boundary recovery of Taylor
coefficients, radial norm profiles, domain membership, and reproducing kernels.

Two engines back every boundary integral: the exact Weingarten integrator and
the seeded Monte Carlo sampler.  Exact values are flagged as such; Monte Carlo
values carry a standard error.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Literal, Sequence

import numpy as np

from .haar_mc import SeededStream, default_stream, mc_pairing, mc_recovery_integral
from .weingarten import (
    BoundaryKind,
    WeingartenTable,
    pairing_moment_exact,
    sesquilinear_moment_exact,
)
from .words import (
    AlphabetMismatchError,
    MatrixTuple,
    NcSeries,
    Word,
    series_eval,
    spectral_theta,
    word_eval,
)

__all__ = [
    "SpaceKind",
    "GridCell",
    "inner_product",
    "radial_pairing",
    "RecoveryReport",
    "coeff_recover",
    "NormProfileReport",
    "boundary_norm_profile",
    "UpsilonVerdict",
    "upsilon_membership",
    "KernelValue",
    "kernel_eval",
    "kernel_section_gram",
    "ReproduceResult",
    "reproduce_check",
    "ProfilesReport",
    "radial_boundary_profiles",
]

Engine = Literal["exact", "mc"]


@dataclass(frozen=True)
class SpaceKind:
    """Hardy-space domain: polydisc (word weight 1) or ball (weight m^{-|w|})."""

    family: Literal["polydisc", "ball"]
    m: int

    def __post_init__(self) -> None:
        if self.family not in ("polydisc", "ball"):
            raise ValueError("family must be 'polydisc' or 'ball'")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @classmethod
    def polydisc(cls, m: int) -> "SpaceKind":
        return cls("polydisc", m)

    @classmethod
    def ball(cls, m: int) -> "SpaceKind":
        return cls("ball", m)

    def boundary(self, row: bool = False) -> BoundaryKind:
        if self.family == "polydisc":
            return BoundaryKind.polydisc(self.m)
        return BoundaryKind.ball_row(self.m) if row else BoundaryKind.ball_column(self.m)

    def stratum_divisor(self, length: int) -> int:
        """Exact integer divisor for a length-l stratum: 1 or m^l."""
        return 1 if self.family == "polydisc" else self.m ** length


@dataclass(frozen=True)
class GridCell:
    """One evaluated cell of an (r, N) grid."""

    r: float
    N: int
    value: complex
    std_error: float | None
    exact: bool


def _check_pair(f: NcSeries, g: NcSeries, kind: SpaceKind) -> None:
    if f.m != g.m:
        raise AlphabetMismatchError("series alphabets differ")
    if f.m != kind.m:
        raise AlphabetMismatchError("series and space alphabets differ")


def _strata(f: NcSeries, g: NcSeries) -> dict[int, complex]:
    """Length-graded sums sum_{|w|=l} conj(g_w) f_w over the common support."""
    out: dict[int, complex] = {}
    for word, fc in f.coeffs.items():
        gc = g.coeffs.get(word)
        if gc is not None:
            l = len(word)
            out[l] = out.get(l, 0j) + gc.conjugate() * fc
    return out


def inner_product(f: NcSeries, g: NcSeries, kind: SpaceKind) -> complex:
    """Coefficient-side inner product: sum_w conj(g_w) f_w, ball weighted by m^{-|w|}."""
    _check_pair(f, g, kind)
    total = 0j
    for l, stratum in _strata(f, g).items():
        total += stratum / kind.stratum_divisor(l)
    return total


def radial_pairing(
    f: NcSeries, g: NcSeries, kind: SpaceKind, r_grid: Sequence[float]
) -> tuple[tuple[float, complex], ...]:
    """Series form of the radial pairing: per r, sum_l r^{2l} (weighted stratum sums).

    At r = 1 this equals inner_product(f, g, kind).
    """
    _check_pair(f, g, kind)
    strata = _strata(f, g)
    out = []
    for r in r_grid:
        val = 0j
        for l, stratum in strata.items():
            val += (r ** (2 * l)) * stratum / kind.stratum_divisor(l)
        out.append((float(r), val))
    return tuple(out)


@dataclass(frozen=True)
class RecoveryReport:
    """Per-level recovery of one Taylor coefficient from boundary integrals."""

    word: Word
    kind: SpaceKind
    engine: str
    r: float
    cells: tuple[GridCell, ...]
    recovered: complex
    richardson: complex | None


def _exact_recovery_value(
    f: NcSeries, w: Word, kind: SpaceKind, N: int, table: WeingartenTable | None
) -> complex:
    # Only words with |v| = |w| pair nontrivially, and on that stratum the
    # r^{|v|} scale cancels the r^{-|w|} prefactor identically, so r never
    # enters the exact route.
    boundary = kind.boundary()
    prefactor = kind.stratum_divisor(len(w))
    raw = 0j
    for v, fv in f.items():
        if len(v) != len(w):
            continue
        pair = pairing_moment_exact(w, v, boundary, N, table)
        if pair:
            raw += fv * (pair / N)
    return prefactor * raw


def coeff_recover(
    f: NcSeries,
    w: Word,
    r: float,
    kind: SpaceKind,
    N_grid: Sequence[int],
    engine: Engine = "exact",
    samples: int = 100_000,
    stream: SeededStream | None = None,
    workers: int = 1,
    table: WeingartenTable | None = None,
    richardson: bool = False,
) -> RecoveryReport:
    """Recover the Taylor coefficient f_w from boundary pairings against X^w.

    Per level N the value is prefactor * integral of (1/N) Tr((X^w)* f(rX)),
    with prefactor r^{-|w|} on the polydisc and m^{|w|} r^{-|w|} on the ball.
    The report keeps the whole N-trend; `recovered` is the value at the largest
    N.  Optional single Richardson step assumes an a + b/N^2 trend on the two
    largest levels.
    """
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    if not N_grid:
        raise ValueError("N_grid must be nonempty")
    if w.max_letter() > f.m:
        raise AlphabetMismatchError("query word uses letters outside the series alphabet")
    if f.m != kind.m:
        raise AlphabetMismatchError("series and space alphabets differ")
    levels = sorted(set(int(n) for n in N_grid))
    boundary = kind.boundary()
    prefactor = kind.stratum_divisor(len(w)) / r ** len(w)
    cells = []
    if engine == "exact":
        for n in levels:
            value = _exact_recovery_value(f, w, kind, n, table)
            cells.append(GridCell(r=r, N=n, value=value, std_error=None, exact=True))
    elif engine == "mc":
        stream = stream if stream is not None else default_stream()
        for pos, n in enumerate(levels):
            est = mc_recovery_integral(
                f, w, r, boundary, n, samples, stream.lane(pos), workers
            )
            cells.append(
                GridCell(
                    r=r,
                    N=n,
                    value=prefactor * est.mean,
                    std_error=abs(prefactor) * est.std_error,
                    exact=False,
                )
            )
    else:
        raise ValueError(f"unknown engine {engine!r}")
    recovered = cells[-1].value
    rich = None
    if richardson and len(cells) >= 2:
        n1, v1 = cells[-2].N, cells[-2].value
        n2, v2 = cells[-1].N, cells[-1].value
        rich = (n2 ** 2 * v2 - n1 ** 2 * v1) / (n2 ** 2 - n1 ** 2)
    return RecoveryReport(
        word=w,
        kind=kind,
        engine=engine,
        r=r,
        cells=tuple(cells),
        recovered=recovered,
        richardson=rich,
    )


@dataclass(frozen=True)
class NormProfileReport:
    """Grid of boundary L2 means of f with the grid supremum estimate."""

    kind: SpaceKind
    engine: str
    cells: tuple[GridCell, ...]
    s_estimate: float
    limit_inner_product: complex


def boundary_norm_profile(
    f: NcSeries,
    kind: SpaceKind,
    r_grid: Sequence[float],
    N_grid: Sequence[int],
    engine: Engine = "exact",
    samples: int = 100_000,
    stream: SeededStream | None = None,
    workers: int = 1,
    table: WeingartenTable | None = None,
) -> NormProfileReport:
    """Value grid of the boundary integral of (1/N) Tr(f(rX)* f(rX)).

    The supremum estimate is the grid maximum; the grid sup and the
    large-N limit genuinely differ in general, so the report also carries the
    coefficient-side limit value ⟨f, f⟩ for comparison.
    """
    if f.m != kind.m:
        raise AlphabetMismatchError("series and space alphabets differ")
    if not r_grid or not N_grid:
        raise ValueError("grids must be nonempty")
    boundary = kind.boundary()
    if engine == "mc":
        stream = stream if stream is not None else default_stream()
    cells = []
    lane = 0
    for r in r_grid:
        for n in N_grid:
            if engine == "exact":
                value = sesquilinear_moment_exact(f, f, r, boundary, n, table)
                cells.append(GridCell(r=float(r), N=n, value=value, std_error=None, exact=True))
            elif engine == "mc":
                est = mc_pairing(f, f, r, boundary, n, samples, stream.lane(lane), workers)
                cells.append(
                    GridCell(r=float(r), N=n, value=est.mean, std_error=est.std_error, exact=False)
                )
                lane += 1
            else:
                raise ValueError(f"unknown engine {engine!r}")
    s_estimate = max(cell.value.real for cell in cells)
    return NormProfileReport(
        kind=kind,
        engine=engine,
        cells=tuple(cells),
        s_estimate=s_estimate,
        limit_inner_product=inner_product(f, f, kind),
    )


@dataclass(frozen=True)
class UpsilonVerdict:
    """Three-valued membership verdict with the evidence that produced it.

    status "converged" carries an operator-norm bound that dominates every
    partial sum; "diverged" carries the degree where growth was detected;
    "inconclusive" means neither test fired before checked_degree.
    """

    status: Literal["converged", "diverged", "inconclusive"]
    bound: float | None
    diverged_at: int | None
    checked_degree: int
    partial_sum_norms: tuple[float, ...]
    theta: float

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "bound": self.bound,
            "diverged_at": self.diverged_at,
            "checked_degree": self.checked_degree,
            "theta": self.theta,
            "partial_sum_norms": list(self.partial_sum_norms),
        }


def _op_norm(mat: np.ndarray) -> float:
    if mat.shape[0] == 0:
        return 0.0
    herm = (mat + mat.conj().T) / 2
    return float(np.linalg.eigvalsh(herm)[-1])


def upsilon_membership(
    X: MatrixTuple,
    p: float,
    max_degree: int = 48,
    divergence_threshold: float = 32.0,
) -> UpsilonVerdict:
    """Decide whether sum_w p^{|w|} (X^w)* X^w converges at X.

    Fast path: theta = lambda_max(p sum Xi* Xi) < 1 proves convergence with
    bound 1/(1 - theta), since each stratum T_{l+1} = p sum_k Xk* T_l Xk is
    dominated by theta T_l.  An exactly vanishing stratum also proves
    convergence (the sum is finite, e.g. for nilpotent tuples).  Divergence is
    a heuristic: reported at the first degree where the partial-sum norm
    exceeds the threshold while the stratum norms have stopped decaying.
    Strata are accumulated to max_degree in all cases so the verdict carries
    the full partial-sum profile.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    theta = spectral_theta(X, p)
    n = X.n
    stratum = np.eye(n, dtype=complex)
    partial = np.eye(n, dtype=complex)
    stratum_norms = [1.0]
    partial_norms = [_op_norm(partial)]
    zero_at: int | None = None
    for l in range(1, max_degree + 1):
        stratum = p * sum(
            a.conj().T @ stratum @ a for a in X.entries
        )
        partial = partial + stratum
        t_norm = _op_norm(stratum)
        stratum_norms.append(t_norm)
        partial_norms.append(_op_norm(partial))
        if t_norm == 0.0:
            zero_at = l
            break
    checked = len(stratum_norms) - 1
    if theta < 1.0:
        return UpsilonVerdict(
            status="converged",
            bound=1.0 / (1.0 - theta),
            diverged_at=None,
            checked_degree=checked,
            partial_sum_norms=tuple(partial_norms),
            theta=theta,
        )
    if zero_at is not None:
        return UpsilonVerdict(
            status="converged",
            bound=partial_norms[-1],
            diverged_at=None,
            checked_degree=checked,
            partial_sum_norms=tuple(partial_norms),
            theta=theta,
        )
    for l in range(1, checked + 1):
        growing = stratum_norms[l] >= stratum_norms[l - 1] * (1 - 1e-12)
        if growing and partial_norms[l] >= divergence_threshold:
            return UpsilonVerdict(
                status="diverged",
                bound=None,
                diverged_at=l,
                checked_degree=checked,
                partial_sum_norms=tuple(partial_norms),
                theta=theta,
            )
    return UpsilonVerdict(
        status="inconclusive",
        bound=None,
        diverged_at=None,
        checked_degree=checked,
        partial_sum_norms=tuple(partial_norms),
        theta=theta,
    )


@dataclass(frozen=True)
class KernelValue:
    """Truncated kernel value with its truncation metadata.

    tail_bound is present exactly when both arguments satisfied the spectral
    condition theta < 1; it is the product of the two single-argument geometric
    tail bounds.
    """

    value: np.ndarray
    truncation_degree: int
    tail_bound: float | None


def kernel_eval(
    X: MatrixTuple, Y: MatrixTuple, p: float, max_degree: int = 12
) -> KernelValue:
    """Truncated kernel sum_{|w| <= L} p^{|w|} X^w tensor (Y^w)*.

    Degree strata satisfy M_{l+1} = p sum_k (Xk tensor I) M_l (I tensor Yk*),
    which keeps the cost at m matrix products of size (N M) per degree.
    """
    if X.m != Y.m:
        raise AlphabetMismatchError("kernel arguments need one alphabet size")
    if p <= 0:
        raise ValueError("p must be positive")
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    n, mm = X.n, Y.n
    dim = n * mm
    left = [np.kron(a, np.eye(mm, dtype=complex)) for a in X.entries]
    right = [np.kron(np.eye(n, dtype=complex), b.conj().T) for b in Y.entries]
    term = np.eye(dim, dtype=complex)
    total = np.eye(dim, dtype=complex)
    for _ in range(max_degree):
        term = p * sum(lk @ term @ rk for lk, rk in zip(left, right))
        total = total + term
    theta_x = spectral_theta(X, p)
    theta_y = spectral_theta(Y, p)
    tail = None
    if theta_x < 1.0 and theta_y < 1.0:
        bx = theta_x ** ((max_degree + 1) / 2) / (1.0 - sqrt(theta_x))
        by = theta_y ** ((max_degree + 1) / 2) / (1.0 - sqrt(theta_y))
        tail = bx * by
    total.setflags(write=False)
    return KernelValue(value=total, truncation_degree=max_degree, tail_bound=tail)


def kernel_section_gram(
    tuples: Sequence[MatrixTuple], p: float, max_degree: int = 12
) -> tuple[np.ndarray, float | None]:
    """Gram matrix of the kernel sections e_a* K_p(., X_i) e_b in the weighted
    coefficient inner product.

    Entry [(i,a,b), (j,c,d)] = sum_w p^{|w|} (Xj^w)_{dc} conj((Xi^w)_{ba}),
    which is the [(d,a), (c,b)] entry of the truncated K_p(X_j, X_i).  The
    result is Hermitian and positive semidefinite up to truncation error.
    Returns the Gram matrix and the largest per-block tail bound (None if any
    block lacks one).
    """
    if not tuples:
        raise ValueError("need at least one tuple")
    sizes = [t.n ** 2 for t in tuples]
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    dim = int(offsets[-1])
    gram = np.zeros((dim, dim), dtype=complex)
    tails: list[float | None] = []
    for i, xi in enumerate(tuples):
        for j, xj in enumerate(tuples):
            kv = kernel_eval(xj, xi, p, max_degree)
            tails.append(kv.tail_bound)
            ni, nj = xi.n, xj.n
            # K(X_j, X_i) acts on C^{nj} tensor C^{ni}; reindex to sections.
            kmat = kv.value.reshape(nj, ni, nj, ni)
            block = np.empty((ni * ni, nj * nj), dtype=complex)
            for a in range(ni):
                for b in range(ni):
                    for c in range(nj):
                        for d in range(nj):
                            block[a * ni + b, c * nj + d] = kmat[d, a, c, b]
            gram[offsets[i] : offsets[i + 1], offsets[j] : offsets[j + 1]] = block
    tail = None if any(t is None for t in tails) else max(tails)
    return gram, tail


@dataclass(frozen=True)
class ReproduceResult:
    lhs: complex
    rhs: complex
    residual: float


def reproduce_check(
    f: NcSeries,
    Y: MatrixTuple,
    e1: np.ndarray,
    e2: np.ndarray,
    p: float,
) -> ReproduceResult:
    """Compare the kernel-pairing recovery of e2* f(Y) e1 with direct evaluation.

    The kernel section Z -> e1* K_p(Z, Y) e2 has Taylor coefficients
    p^{|w|} e1* (Y^w)* e2; pairing them against f in the weighted coefficient
    inner product must reproduce e2* f(Y) e1.  For polynomial f the pairing
    truncated at deg f is exact.
    """
    if f.m != Y.m:
        raise AlphabetMismatchError("series and tuple alphabets differ")
    if p <= 0:
        raise ValueError("p must be positive")
    e1 = np.asarray(e1, dtype=complex).reshape(-1)
    e2 = np.asarray(e2, dtype=complex).reshape(-1)
    if e1.shape[0] != Y.n or e2.shape[0] != Y.n:
        raise ValueError(f"vectors must have length {Y.n}")
    lhs = 0j
    for w, fw in f.items():
        yw = word_eval(Y, w)
        section_coeff = (p ** len(w)) * np.vdot(e1, yw.conj().T @ e2)
        lhs += (p ** (-len(w))) * np.conjugate(section_coeff) * fw
    rhs = complex(np.vdot(e2, series_eval(f, Y) @ e1))
    return ReproduceResult(lhs=complex(lhs), rhs=rhs, residual=abs(complex(lhs) - rhs))


@dataclass(frozen=True)
class ProfilesReport:
    """Radial boundary profiles over both boundaries with their series predictions."""

    phi_cells: tuple[GridCell, ...]
    psi_cells: tuple[GridCell, ...]
    phi_prediction: tuple[tuple[float, float], ...]
    psi_prediction: tuple[tuple[float, float], ...]


def radial_boundary_profiles(
    f: NcSeries,
    r_grid: Sequence[float],
    N_grid: Sequence[int],
    engine: Engine = "exact",
    samples: int = 100_000,
    stream: SeededStream | None = None,
    workers: int = 1,
    table: WeingartenTable | None = None,
) -> ProfilesReport:
    """Boundary L2 means of f over the polydisc and ball boundaries, alongside
    the coefficient-series predictions sum_l r^{2l} (weighted) sum_{|w|=l} |f_w|^2."""
    poly = boundary_norm_profile(
        f, SpaceKind.polydisc(f.m), r_grid, N_grid, engine, samples, stream, workers, table
    )
    ball_stream = stream.lane(len(r_grid) * len(N_grid)) if stream is not None else None
    ball = boundary_norm_profile(
        f, SpaceKind.ball(f.m), r_grid, N_grid, engine, samples, ball_stream, workers, table
    )
    phi_pred = tuple(
        (r, val.real) for r, val in radial_pairing(f, f, SpaceKind.polydisc(f.m), r_grid)
    )
    psi_pred = tuple(
        (r, val.real) for r, val in radial_pairing(f, f, SpaceKind.ball(f.m), r_grid)
    )
    return ProfilesReport(
        phi_cells=poly.cells,
        psi_cells=ball.cells,
        phi_prediction=phi_pred,
        psi_prediction=psi_pred,
    )
