"""Joint typicality decoding and the genie-aided estimator.

A support ``J`` (``|J| = L``) is delta-typical with ``y`` when ``A_J`` has
full column rank and

    | ||P_J^perp y||^2 / N - (N - L) sigma2 / N | < delta.

The decoder scans every size-``L`` support, keeps the typical ones, and
returns the least-squares fit on the selected support, or the zero vector
when nothing is typical.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bounds import delta_from_zeta
from .errors import BudgetError, ConfigError, RankDeficientError, ShapeMismatchError
from .subspace import (
    RANK_TOL,
    SupportSet,
    as_support,
    entries_of,
    ls_on_support,
    numeric_rank_full,
    residual_sq_norm,
)

SELECTION_RULES = ("min_deviation", "first_lexicographic")
DEFAULT_MAX_SUBSETS = 2_000_000
DEFAULT_ZETA = 0.8

# Screening values closer than this (relative to ||y||^2/N + target) to a
# decision boundary are recomputed through QR.
_GUARD_REL = 1e-7
# Cholesky pivot (squared) below this fraction of max diag(G_J) defers to QR.
_PIVOT_TOL = 1e-6
_CHUNK = 1 << 16


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder settings.

    Give either ``delta`` or ``zeta``; with ``zeta`` the slack is
    ``zeta * mu^2 * (N - L) / N`` and ``mu`` must be supplied. With neither,
    ``zeta`` defaults to 0.8.
    """

    delta: float | None = None
    zeta: float | None = None
    mu: float | None = None
    rank_tol: float = RANK_TOL
    selection_rule: str = "min_deviation"
    max_subsets: int = DEFAULT_MAX_SUBSETS
    workers: int = 1

    def __post_init__(self):
        if self.delta is not None and self.zeta is not None:
            raise ConfigError("give exactly one of delta and zeta")
        if self.delta is None:
            zeta = DEFAULT_ZETA if self.zeta is None else self.zeta
            if not 2.0 / 3.0 < zeta < 1.0:
                raise ConfigError(f"zeta must lie in (2/3, 1), got {zeta}")
            object.__setattr__(self, "zeta", zeta)
        elif not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.selection_rule not in SELECTION_RULES:
            raise ConfigError(f"unknown selection rule {self.selection_rule!r}")
        if self.max_subsets < 1 or self.workers < 1:
            raise ConfigError("max_subsets and workers must be positive")

    def resolve_delta(self, n: int, l: int) -> float:  # noqa: E741
        if self.delta is not None:
            return float(self.delta)
        if self.mu is None:
            raise ConfigError("zeta-based slack needs mu; pass delta explicitly when mu is unknown")
        return delta_from_zeta(self.zeta, self.mu, n, l)[0]


@dataclass(frozen=True, eq=False)
class DecodeResult:
    estimate: np.ndarray
    chosen_support: SupportSet | None
    e0: bool
    deviation: float
    typical_count: int
    subsets_examined: int

    def to_dict(self) -> dict:
        return {
            "support": None if self.chosen_support is None else list(self.chosen_support),
            "e0": self.e0,
            "deviation": self.deviation,
            "typical_count": self.typical_count,
            "subsets_examined": self.subsets_examined,
            "estimate": self.estimate.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DecodeResult:
        sup = d["support"]
        return cls(
            estimate=np.asarray(d["estimate"], dtype=float),
            chosen_support=None if sup is None else tuple(sup),
            e0=bool(d["e0"]),
            deviation=float(d["deviation"]),
            typical_count=int(d["typical_count"]),
            subsets_examined=int(d["subsets_examined"]),
        )


def typicality_deviation(A, J, y, sigma2: float, rank_tol: float = RANK_TOL) -> float:
    """``| ||P_J^perp y||^2 / N - (N - |J|) sigma2 / N |``; raises on rank deficiency."""
    n = entries_of(A).shape[0]
    res = residual_sq_norm(A, J, y, rank_tol)
    return abs(res / n - (n - len(J)) * sigma2 / n)


def _exact_deviation(A, J, y, sigma2, rank_tol) -> float | None:
    if not numeric_rank_full(A, J, rank_tol):
        return None
    try:
        return typicality_deviation(A, J, y, sigma2, rank_tol)
    except RankDeficientError:
        return None


def is_jointly_typical(A, J, y, sigma2: float, delta: float, rank_tol: float = RANK_TOL) -> bool:
    dev = _exact_deviation(A, J, y, sigma2, rank_tol)
    return dev is not None and dev < delta


def genie_estimate(A, I, y, rank_tol: float = RANK_TOL) -> np.ndarray:  # noqa: E741
    """Least squares on the true support ``I``, zero elsewhere."""
    A = entries_of(A)
    I = as_support(I, A.shape[1])  # noqa: E741
    x = np.zeros(A.shape[1])
    x[list(I)] = ls_on_support(A, I, y, rank_tol)
    return x


def _check_budget(m: int, l: int, max_subsets: int | None) -> int:  # noqa: E741
    if not 0 <= l <= m:
        raise ValueError(f"need 0 <= l <= m, got l={l}, m={m}")
    total = math.comb(m, l)
    if max_subsets is not None and total > max_subsets:
        raise BudgetError(f"C({m}, {l}) = {total} exceeds the subset budget {max_subsets}")
    return total


def enumerate_supports(m: int, l: int, max_subsets: int | None = None):  # noqa: E741
    """Yield every size-``l`` subset of ``range(m)`` once, in lexicographic order."""
    _check_budget(m, l, max_subsets)
    return itertools.combinations(range(m), l)


def support_rank(J, m: int) -> int:
    """Position of ``J`` in the lexicographic order of ``enumerate_supports``."""
    l = len(J)  # noqa: E741
    r, c = 0, 0
    for i, j in enumerate(J):
        for skipped in range(c, j):
            r += math.comb(m - skipped - 1, l - i - 1)
        c = j + 1
    return r


def support_at(rank: int, m: int, l: int) -> SupportSet:  # noqa: E741
    """Inverse of :func:`support_rank`."""
    out, c = [], 0
    for i in range(l):
        while True:
            cnt = math.comb(m - c - 1, l - i - 1)
            if rank < cnt:
                break
            rank -= cnt
            c += 1
        out.append(c)
        c += 1
    return tuple(out)


@dataclass(frozen=True, eq=False)
class SupportScan:
    """Per-support verdicts of one exhaustive scan, in lexicographic order.

    ``deviation[k]`` is ``inf`` where ``rank_ok[k]`` is False.
    """

    m: int
    l: int  # noqa: E741
    delta: float
    deviation: np.ndarray
    rank_ok: np.ndarray
    typical: np.ndarray

    def support(self, k: int) -> SupportSet:
        return support_at(int(k), self.m, self.l)

    def index(self, J) -> int:
        return support_rank(as_support(J, self.m), self.m)


class _Scanner:
    def __init__(self, A, y, l, sigma2, delta, rank_tol, max_subsets, workers):  # noqa: E741
        self.A = entries_of(A)
        n, m = self.A.shape
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (n,):
            raise ShapeMismatchError(f"y has shape {self.y.shape}, expected ({n},)")
        if not 1 <= l <= n:
            raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
        self.n, self.m, self.l = n, m, int(l)
        self.total = _check_budget(m, self.l, max_subsets)
        self.sigma2 = float(sigma2)
        self.delta = float(delta)
        self.rank_tol = rank_tol
        self.workers = workers
        yy = float(self.y @ self.y)
        self.target = (n - self.l) * self.sigma2 / n
        self.guard = _GUARD_REL * (yy / n + self.target)
        self.exact = np.zeros(self.total, dtype=bool)

    def run(self) -> SupportScan:
        G = np.ascontiguousarray(self.A.T @ self.A)
        b = np.ascontiguousarray(self.A.T @ self.y)
        yy = float(self.y @ self.y)
        binom = _kernels.binomial_table(self.m, self.l)
        dev = np.empty(self.total)
        flag = np.empty(self.total, dtype=np.bool_)
        starts = range(0, self.total, _CHUNK)

        def work(start):
            stop = min(start + _CHUNK, self.total)
            _kernels.scan_chunk(
                G, b, yy, self.n, self.l, start, stop - start, binom,
                self.target, _PIVOT_TOL, dev[start:stop], flag[start:stop],
            )

        if self.workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                list(pool.map(work, starts))
        else:
            for s in starts:
                work(s)

        rank_ok = ~flag
        self.dev, self.rank_ok = dev, rank_ok
        near = np.flatnonzero(flag | (np.abs(dev - self.delta) <= self.guard))
        self.refine(near)
        return self.scan()

    def refine(self, ks) -> None:
        for k in ks:
            if self.exact[k]:
                continue
            d = _exact_deviation(self.A, support_at(int(k), self.m, self.l), self.y, self.sigma2, self.rank_tol)
            self.rank_ok[k] = d is not None
            self.dev[k] = np.inf if d is None else d
            self.exact[k] = True

    def refine_minimum(self, mask) -> int | None:
        """Index of the smallest deviation within ``mask``, ties to the lowest index."""
        if not mask.any():
            return None
        lo = self.dev[mask].min()
        self.refine(np.flatnonzero(mask & (self.dev <= lo + 2.0 * self.guard)))
        return int(np.argmin(np.where(mask, self.dev, np.inf)))

    def scan(self) -> SupportScan:
        typical = self.rank_ok & (self.dev < self.delta)
        return SupportScan(self.m, self.l, self.delta, self.dev, self.rank_ok, typical)


def scan_supports(A, y, l, sigma2, delta, rank_tol=RANK_TOL, max_subsets=DEFAULT_MAX_SUBSETS, workers=1) -> SupportScan:  # noqa: E741
    """Typicality verdict and deviation for every size-``l`` support."""
    return _Scanner(A, y, l, sigma2, delta, rank_tol, max_subsets, workers).run()


def joint_typicality_decode(A, y, l: int, sigma2: float, config: DecoderConfig | None = None) -> DecodeResult:  # noqa: E741
    """Exhaustive joint typicality decoder.

    Every size-``l`` support is examined (no early exit). Under
    ``min_deviation`` the typical support with the smallest deviation wins,
    exact ties going to the lexicographically smaller support; under
    ``first_lexicographic`` the first typical support wins. If no support is
    typical the estimate is zero and ``e0`` is set; ``deviation`` then reports
    the smallest deviation over all full-rank supports.

    The outcome does not depend on ``config.workers``.
    """
    config = config or DecoderConfig()
    A = entries_of(A)
    n, m = A.shape
    delta = config.resolve_delta(n, l)
    sc = _Scanner(A, y, l, sigma2, delta, config.rank_tol, config.max_subsets, config.workers)
    sc.run()
    scan = sc.scan()
    typical = scan.typical

    if typical.any():
        if config.selection_rule == "min_deviation":
            k = sc.refine_minimum(typical)
        else:
            k = int(np.argmax(typical))
            sc.refine([k])
        J = support_at(k, m, l)
        x = np.zeros(m)
        x[list(J)] = ls_on_support(A, J, sc.y, config.rank_tol)
        return DecodeResult(x, J, False, float(sc.dev[k]), int(typical.sum()), sc.total)

    k = sc.refine_minimum(sc.rank_ok)
    dev = float(sc.dev[k]) if k is not None else math.inf
    return DecodeResult(np.zeros(m), None, True, dev, 0, sc.total)
