"""Problem objects for noisy compressive sampling, ``y = A x + n``.

Every generator here is a pure function of its arguments. Randomness comes
from a Philox (counter-based) bit generator keyed by a 64-bit seed, and
per-trial seeds are derived with :func:`derive_seed`, so trials can run in
any order or in parallel without sharing state.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, RegimeError, ShapeMismatchError, SparsityError

#: Upper limit on ``n * m`` for generated matrices.
MAX_MATRIX_ELEMENTS = 50_000_000

#: Matrices with more entries than this are written to JSON by seed only.
INLINE_MATRIX_LIMIT = 4096

AMPLITUDE_RULES = ("constant", "uniform_above_mu")

_SEED_LIMIT = 2**64


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_check_seed(seed))))


def derive_seed(master_seed: int, *path: int) -> int:
    """Derive an independent 64-bit seed from a master seed and an index path.

    ``derive_seed(s, t, k)`` gives the seed of stream ``k`` in trial ``t``.
    Distinct paths give statistically independent streams.
    """
    ss = np.random.SeedSequence(_check_seed(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """An N x M measurement matrix. ``seed`` is None for user-supplied entries."""

    entries: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        entries = _readonly(self.entries)
        if entries.ndim != 2 or min(entries.shape) < 1:
            raise DimensionError(f"matrix must be 2-D with positive dimensions, got shape {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """Sparse vector with its support and minimum nonzero magnitude."""

    values: np.ndarray
    support: tuple[int, ...] = field(default=None)
    mu: float = field(default=None)

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim != 1:
            raise ShapeMismatchError("signal values must be a vector")
        nz = tuple(int(i) for i in np.flatnonzero(values))
        support = nz if self.support is None else tuple(int(i) for i in self.support)
        if support != nz:
            raise SparsityError(f"support {support} does not match nonzero pattern {nz}")
        if len(support) >= values.size:
            raise SparsityError(f"sparsity {len(support)} must be smaller than length {values.size}")
        mu = float(np.min(np.abs(values[list(support)]))) if support else 0.0
        if self.mu is not None and self.mu != mu:
            raise SparsityError(f"stored mu {self.mu} differs from min nonzero magnitude {mu}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mu", mu)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.support)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(self.values**2))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    matrix: MeasurementMatrix
    signal: SparseSignal
    sigma2: float
    observation: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        y = _readonly(self.observation)
        if y.shape != (self.matrix.n_rows,):
            raise ShapeMismatchError(f"observation has shape {y.shape}, expected ({self.matrix.n_rows},)")
        object.__setattr__(self, "observation", y)

    @property
    def n(self) -> int:
        return self.matrix.n_rows

    @property
    def m(self) -> int:
        return self.matrix.n_cols

    @property
    def l(self) -> int:  # noqa: E743
        return self.signal.l

    @property
    def alpha(self) -> float:
        return self.l / self.n

    @property
    def beta(self) -> float:
        return self.m / self.l if self.l else math.inf


def gen_gaussian_matrix(n: int, m: int, seed: int, max_elements: int = MAX_MATRIX_ELEMENTS) -> MeasurementMatrix:
    """Draw an ``n x m`` matrix with i.i.d. N(0, 1) entries.

    The result is a deterministic function of ``(n, m, seed)``.
    """
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise DimensionError(f"dimensions must be positive, got n={n}, m={m}")
    if n * m > max_elements:
        raise DimensionError(f"n*m = {n * m} exceeds the element budget {max_elements}")
    rng = rng_from_seed(seed)
    return MeasurementMatrix(rng.standard_normal((n, m)), seed=int(seed))


def gen_sparse_signal(m: int, l: int, mu: float, amplitude_rule: str = "constant", seed: int = 0) -> SparseSignal:  # noqa: E741
    """Draw an ``l``-sparse vector of length ``m`` with a uniform random support.

    ``constant`` puts ``+-mu`` on every support entry. ``uniform_above_mu``
    draws magnitudes uniformly from ``[mu, 2 mu)``; the stored ``mu`` is then
    the realised minimum magnitude. Signs are uniform in both cases.
    """
    m, l = int(m), int(l)  # noqa: E741
    if l < 1 or l >= m:
        raise SparsityError(f"need 1 <= l < m, got l={l}, m={m}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if amplitude_rule not in AMPLITUDE_RULES:
        raise ValueError(f"unknown amplitude rule {amplitude_rule!r}")
    rng = rng_from_seed(seed)
    support = np.sort(rng.choice(m, size=l, replace=False))
    signs = rng.choice(np.array([-1.0, 1.0]), size=l)
    if amplitude_rule == "constant":
        mags = np.full(l, float(mu))
    else:
        mags = rng.uniform(mu, 2.0 * mu, size=l)
    values = np.zeros(m)
    values[support] = signs * mags
    return SparseSignal(values)


def apply_matrix(matrix: MeasurementMatrix, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (matrix.n_cols,):
        raise ShapeMismatchError(f"vector has shape {v.shape}, matrix has {matrix.n_cols} columns")
    return matrix.entries @ v


def measure(matrix: MeasurementMatrix, signal: SparseSignal, sigma2: float, seed: int) -> ProblemInstance:
    """Form ``y = A x + n`` with ``n ~ N(0, sigma2 I)``; ``sigma2 = 0`` gives ``y = A x``."""
    if signal.m != matrix.n_cols:
        raise ShapeMismatchError(f"signal length {signal.m} != matrix columns {matrix.n_cols}")
    sigma2 = float(sigma2)
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    y = apply_matrix(matrix, signal.values)
    if sigma2 > 0:
        y = y + math.sqrt(sigma2) * rng_from_seed(seed).standard_normal(matrix.n_rows)
    return ProblemInstance(matrix, signal, sigma2, y, seed=int(seed))


def sparsity_params(n: int, m: int, l: int) -> tuple[float, float]:  # noqa: E741
    """Return ``(alpha, beta) = (l/n, m/l)``; requires ``l <= n`` and ``m > 2 l``."""
    if l < 1 or l > n:
        raise SparsityError(f"need 1 <= l <= n, got l={l}, n={n}")
    if m <= 2 * l:
        raise RegimeError(f"beta = m/l = {m}/{l} must exceed 2")
    return l / n, m / l


# -- JSON -------------------------------------------------------------------


def instance_to_dict(inst: ProblemInstance, inline_limit: int = INLINE_MATRIX_LIMIT) -> dict:
    doc = {
        "n": inst.n,
        "m": inst.m,
        "l": inst.l,
        "sigma2": inst.sigma2,
        "seed": inst.seed,
        "matrix_seed": inst.matrix.seed,
        "support": list(inst.signal.support),
        "values": inst.signal.values.tolist(),
        "y": inst.observation.tolist(),
    }
    if inst.matrix.seed is None or inst.n * inst.m <= inline_limit:
        doc["matrix"] = inst.matrix.entries.tolist()
    return doc


def instance_from_dict(doc: dict) -> ProblemInstance:
    n, m = int(doc["n"]), int(doc["m"])
    if "matrix" in doc:
        matrix = MeasurementMatrix(np.asarray(doc["matrix"], dtype=float), seed=doc.get("matrix_seed"))
    elif doc.get("matrix_seed") is not None:
        matrix = gen_gaussian_matrix(n, m, doc["matrix_seed"])
    else:
        raise ValueError("instance has neither inline matrix nor matrix_seed")
    if matrix.shape != (n, m):
        raise ShapeMismatchError(f"matrix shape {matrix.shape} != ({n}, {m})")
    signal = SparseSignal(np.asarray(doc["values"], dtype=float), support=doc["support"])
    if signal.l != int(doc["l"]):
        raise SparsityError(f"declared l={doc['l']} but support has {signal.l} entries")
    return ProblemInstance(matrix, signal, float(doc["sigma2"]), np.asarray(doc["y"], dtype=float), seed=doc.get("seed"))


def save_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst)))


def load_instance(path) -> ProblemInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))
