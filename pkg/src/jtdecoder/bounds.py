"""Closed-form bounds for the joint typicality decoder.

All logarithms are natural, including the binary entropy.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import DomainError, RegimeError
from .subspace import trace_inverse_gram

#: Default finite-L stand-in for the requirement that L mu^4 / log L diverge.
GROWTH_THRESHOLD = 10.0


def crb_gae(A, I, sigma2: float) -> float:  # noqa: E741
    """Cramer-Rao bound ``sigma2 * Tr((A_I^T A_I)^{-1})`` of the genie-aided estimator."""
    return float(sigma2) * trace_inverse_gram(A, I)


def binary_entropy(p: float) -> float:
    """Binary entropy in nats, extended continuously by 0 at ``p in {0, 1}``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def miss_typicality_bound(n: int, l: int, sigma2: float, delta: float) -> float:  # noqa: E741
    """Upper bound on P(true support fails the delta-typicality test)."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    if not l < n:
        raise DomainError(f"need l < n, got l={l}, n={n}")
    s4 = sigma2 * sigma2
    return 2.0 * math.exp(-(delta * delta / (4.0 * s4)) * n * n / (n - l + (2.0 * delta / sigma2) * n))


def false_typicality_bound(n: int, l: int, missed_energy: float, sigma2: float, delta_prime: float) -> float:  # noqa: E741
    """Upper bound on P(a wrong support passes the test).

    ``missed_energy`` is the signal energy on the true indices the wrong
    support leaves out.
    """
    if not delta_prime < missed_energy:
        raise DomainError(f"delta_prime={delta_prime} must be below missed_energy={missed_energy}")
    ratio = (missed_energy - delta_prime) / (missed_energy + sigma2)
    return math.exp(-((n - l) / 4.0) * ratio * ratio)


def eig_deviation_bound(m: int, alpha: float, beta: float, epsilon: float) -> float:
    """One-sided tail bound for an extreme eigenvalue of ``(1/N) A_K^T A_K``.

    The two-sided probability of leaving
    ``[(1 - sqrt(alpha) - eps)^2, (1 + sqrt(alpha) + eps)^2]`` is at most
    twice this value.
    """
    if not (alpha > 0 and beta > 2 and epsilon >= 0):
        raise DomainError(f"need alpha > 0, beta > 2, epsilon >= 0; got {alpha}, {beta}, {epsilon}")
    rate = math.sqrt(binary_entropy(1.0 / beta)) / math.sqrt(alpha * beta)
    return math.exp(-0.5 * m * rate * epsilon)


def _energy_ratio(energy: float, delta_prime: float, sigma2: float) -> float:
    r = (energy - delta_prime) / (energy + sigma2)
    return r * r


def f_exponent(z: float, l: int, beta: float, c0: float, mu2: float, delta_prime: float, sigma2: float) -> float:  # noqa: E741
    """Exponent of the ``K' = z L`` term in the impostor union bound."""
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    log_z = math.log(z)
    return (
        l * z * (1.0 - log_z)
        + l * z * (math.log(beta - 1.0) + 1.0 - log_z)
        - c0 * l * _energy_ratio(l * z * mu2, delta_prime, sigma2)
    )


def f_endpoints(l: int, beta: float, c0: float, mu2: float, delta_prime: float, sigma2: float) -> tuple[float, float]:  # noqa: E741
    """Closed forms of ``f_exponent`` at ``z = 1/l`` and ``z = 1``."""
    lb = math.log(beta - 1.0)
    f_low = 2.0 * math.log(l) + 2.0 + lb - c0 * l * _energy_ratio(mu2, delta_prime, sigma2)
    f_high = l * (2.0 + lb) - c0 * l * _energy_ratio(l * mu2, delta_prime, sigma2)
    return f_low, f_high


def union_bound_constant(x_norm_sq: float, alpha: float, sigma2: float) -> float:
    """Prefactor bounding the squared error of an estimate on a wrong support."""
    s = 2.0 * math.sqrt(2.0 * alpha)
    if s >= 1.0:
        raise RegimeError(f"2*sqrt(2*alpha) = {s} >= 1; constant is singular (alpha must be < 1/8)")
    gap = 1.0 - s
    spread = 8.0 * alpha + 4.0 * math.sqrt(2.0 * alpha)
    return (1.0 + spread**2 / gap**4) * x_norm_sq + alpha * sigma2 / gap**2


def delta_from_zeta(zeta: float, mu: float, n: int, l: int) -> tuple[float, float]:  # noqa: E741
    """Return ``(delta, delta_prime)`` with ``delta_prime = zeta mu^2`` and
    ``delta = delta_prime (n - l) / n``."""
    if not 2.0 / 3.0 < zeta < 1.0:
        raise RegimeError(f"zeta must lie in (2/3, 1), got {zeta}")
    if not l < n:
        raise RegimeError(f"need l < n, got l={l}, n={n}")
    if not mu > 0:
        raise RegimeError(f"mu must be positive, got {mu}")
    delta_prime = zeta * mu * mu
    return delta_prime * (n - l) / n, delta_prime


@dataclass(frozen=True)
class RegimeParams:
    n: int
    m: int
    l: int  # noqa: E741
    sigma2: float
    mu: float
    kappa: float = 1.0
    zeta: float = 0.8
    epsilon: float | None = None
    growth_threshold: float = GROWTH_THRESHOLD

    @property
    def alpha(self) -> float:
        return self.l / self.n

    @property
    def beta(self) -> float:
        return self.m / self.l


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class RegimeReport:
    c0: float
    c1: float
    c2: float
    c_exponent: float
    checks: list[RegimeCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RegimeReport:
        return cls(
            c0=d["c0"],
            c1=d["c1"],
            c2=d["c2"],
            c_exponent=d["c_exponent"],
            checks=[RegimeCheck(**c) for c in d["checks"]],
        )


def validate_regime(params: RegimeParams, x_norm_sq: float) -> RegimeReport:
    """Evaluate the MSE-convergence regime hypotheses at finite size.

    Nothing is raised; each hypothesis becomes a named check with a margin
    (positive or zero where the check passes).
    """
    n, l, s2 = params.n, params.l, params.sigma2  # noqa: E741
    beta = params.beta
    c0 = (n - l) / (4.0 * l)
    c1 = 18.0 * params.kappa * s2 * s2 + 1.0
    c2 = 9.0 + 4.0 * math.log(beta - 1.0) if beta > 1 else math.nan
    c = params.zeta**2 * c0 / (2.0 * s2 * s2) if s2 > 0 else math.inf
    mu2 = params.mu**2
    growth = l * mu2 * mu2 / math.log(l) if l > 1 else 0.0

    def strict(name, margin):
        return RegimeCheck(name, bool(margin > 0), float(margin))

    def loose(name, margin):
        return RegimeCheck(name, bool(margin >= 0), float(margin))

    checks = [
        strict("beta_gt_2", beta - 2.0),
        strict("n_gt_c1_l", n - c1 * l),
        strict("n_gt_c2_l", n - c2 * l),
        strict("alpha_lt_1_9", 1.0 / 9.0 - params.alpha),
        loose("sigma2_ge_2_zeta_mu2", s2 - 2.0 * params.zeta * mu2),
        strict("c_gt_kappa", c - params.kappa),
        loose("norm_sq_le_l_pow_kappa", l**params.kappa - x_norm_sq),
        loose("growth_l_mu4_over_log_l", growth - params.growth_threshold),
    ]
    return RegimeReport(c0=c0, c1=c1, c2=c2, c_exponent=c, checks=checks)
