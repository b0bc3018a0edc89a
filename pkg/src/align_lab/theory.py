"""Numerical evaluation of the closed-form quantities and bounds.

Poisson machinery (upper-tail psi, the core-emergence constant c_k and the
largest root mu_k), the normal-approximation lower bound on psi, the Fano
impossibility bound, the finite-n impossibility diagnostic, the four
sufficient recovery conditions, the cyclic-sum moment generating function,
the Chernoff minimization helper, and the resulting per-permutation
goodness-probability bound.

Numerical policy: everything that can underflow is evaluated in log domain
with 64-bit floats; probabilities are clamped to [0, 1]; indices that arrive
as reals (e.g. n*q*s/2 - 1) are snapped to the nearest integer within 1e-9
before taking the ceiling, since the upper tail of an integer-valued
variable only depends on the ceiling of the cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .errors import AlignLabError, NoRootError, ParameterError
from .model import ModelParams, dist_p, dist_q, kl_divergence
from .perms import ceil_snap, m_alpha


@dataclass(frozen=True)
class PoissonSolver:
    """Tolerances for the Poisson tail series.

    ``tolerance`` bounds the relative truncation error of the summed tail;
    ``max_terms`` caps the series length.
    """

    tolerance: float = 1e-12
    max_terms: int = 200_000


DEFAULT_SOLVER = PoissonSolver()


def _log_poisson_pmf(i: int, mu: float) -> float:
    return -mu + i * math.log(mu) - math.lgamma(i + 1)


def psi(j: float, mu: float, solver: PoissonSolver = DEFAULT_SOLVER) -> float:
    """Upper tail P(Po(mu) >= j) for real j >= 0 (via the ceiling of j).

    Sums the smaller of the two tails with a stable log-domain pmf recursion
    and complements, so both psi ~ 1 and psi ~ 0 keep full precision.
    """
    if not (math.isfinite(mu) and mu > 0):
        raise ParameterError(f"mu must be positive, got {mu}")
    idx = ceil_snap(j)
    if idx <= 0:
        return 1.0
    if idx > solver.max_terms:
        raise ParameterError(f"tail index {idx} exceeds max_terms={solver.max_terms}")
    if idx <= mu:
        # lower tail P(Po < idx) is the smaller side
        lower = math.fsum(math.exp(_log_poisson_pmf(i, mu)) for i in range(idx))
        return min(1.0, max(0.0, 1.0 - lower))
    log_term = _log_poisson_pmf(idx, mu)
    if log_term < -745.0:  # below double underflow: the whole tail is ~0
        return 0.0
    term = math.exp(log_term)
    total = term
    i = idx
    while i - idx < solver.max_terms:
        i += 1
        term *= mu / i
        total += term
        if term <= total * solver.tolerance:
            break
    return min(1.0, total)


def _golden_min(f, a: float, b: float, rel_tol: float) -> tuple[float, float]:
    """Golden-section minimum of a unimodal f on [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > rel_tol * max(1.0, abs(a) + abs(b)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


class CkResult(NamedTuple):
    value: float
    argmin: float


_CK_GRID = 2000


@lru_cache(maxsize=256)
def _c_k_cached(k: float, tolerance: float, max_terms: int) -> CkResult:
    solver = PoissonSolver(tolerance, max_terms)

    def ratio(mu: float) -> float:
        tail = psi(k - 1, mu, solver)
        return mu / tail if tail > 0.0 else math.inf

    hi = 10.0 * k
    step = hi / _CK_GRID
    best_i, best_v = 1, math.inf
    for i in range(1, _CK_GRID + 1):
        v = ratio(i * step)
        if v < best_v:
            best_i, best_v = i, v
    lo = max(step * (best_i - 1), step * 1e-6)
    x, fx = _golden_min(ratio, lo, min(hi, step * (best_i + 1)), 1e-9)
    return CkResult(value=fx, argmin=x)


def c_k(k: float, solver: PoissonSolver = DEFAULT_SOLVER) -> CkResult:
    """inf over mu > 0 of mu / psi_{k-1}(mu): the k-core emergence constant.

    Coarse grid on (0, 10k] followed by golden-section refinement.  k may be
    a real >= 3 (the tail index is taken through the usual ceiling).
    """
    if not (math.isfinite(k) and k >= 3):
        raise ParameterError(f"k must be >= 3, got {k}")
    return _c_k_cached(float(k), solver.tolerance, solver.max_terms)


def mu_k(k: float, lam: float, solver: PoissonSolver = DEFAULT_SOLVER) -> float:
    """Largest root of f(mu) = mu - lam * psi_{k-1}(mu), for lam > c_k(k).

    Scans downward from mu = lam in steps of lam/1000 for the topmost sign
    change, then bisects the bracketing cell; a golden-section fallback
    handles a dip narrower than the scan step.
    """
    threshold = c_k(k, solver).value
    if not (math.isfinite(lam) and lam > threshold):
        raise NoRootError(f"lam must exceed c_k(k)={threshold:.6g}, got {lam}")

    def f(mu: float) -> float:
        return mu - lam * psi(k - 1, mu, solver)

    step = lam / 1000.0
    hi = lam
    f_hi = f(hi)
    lo = None
    mu = hi - step
    while mu > 0.0:
        f_mu = f(mu)
        if f_mu <= 0.0:
            lo = mu
            break
        hi, f_hi = mu, f_mu
        mu -= step
    if lo is None:
        # dip narrower than the scan step: locate it around the scan minimum
        x, fx = _golden_min(f, step * 1e-3, lam, 1e-12)
        if fx > 0.0:
            raise NoRootError(f"no root found below lam={lam} despite lam > c_k")
        lo = x
        hi = min(lam, x + step)
        f_hi = f(hi)
    if f_hi <= 0.0:
        raise AlignLabError("bracketing failed: f must be positive at the top end")

    xtol = 1e-12 * max(1.0, lam)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol:
            break
        if f(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def berry_esseen_lower(j: float, mu: float) -> float:
    """Normal-approximation lower bound on psi_j(mu); may be negative."""
    if not (math.isfinite(mu) and mu > 0):
        raise ParameterError(f"mu must be positive, got {mu}")
    x = (j - mu) / math.sqrt(mu)
    upper_normal = 0.5 * math.erfc(x / math.sqrt(2.0))
    return upper_normal - 0.55 / math.sqrt(math.ceil(mu))


class FanoBound(NamedTuple):
    raw: float
    clamped: float


def fano_bound(n: int, q: float, s: float, alpha: float) -> FanoBound:
    """Information-theoretic lower bound on the failure probability.

    raw = 1 - (C(n,2) * D(P||Q) + 1) / log(n! / m_alpha).  The raw value can
    be negative at small n (the bound is vacuous there); clamped is its
    projection onto [0, 1].
    """
    params = ModelParams(n, q, s)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    kl = kl_divergence(dist_p(params), dist_q(params))
    log_ratio = m_alpha(n, alpha).log_ratio
    raw = 1.0 - (math.comb(n, 2) * kl + 1.0) / log_ratio
    return FanoBound(raw=raw, clamped=min(1.0, max(0.0, raw)))


def impossibility_ratio(n: int, q: float, s: float, alpha: float) -> float:
    """Finite-n diagnostic (n / log n) * D(P||Q) / alpha.

    The impossibility regime is where this vanishes asymptotically; at fixed
    n it is reported as a plain number, never as a verdict.
    """
    params = ModelParams(n, q, s)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    kl = kl_divergence(dist_p(params), dist_q(params))
    return (n / math.log(n)) * kl / alpha


@dataclass(frozen=True)
class RecoveryConditions:
    """The four sufficient conditions with slack margins (value >= 0 means met).

    - mean_degree:     n*q*s >= max{20, 84*log(2/(1-alpha)), 16/(min(beta,gamma)*(1-alpha))}
    - correlation:     s > 8*q/(1-alpha)                       (strict)
    - sparsity_beta:   2*q*(1-s^2)/s <= n^(-beta)
    - sparsity_gamma:  q*s <= n^(-2*gamma)
    """

    cond_mean_degree: bool
    cond_correlation: bool
    cond_sparsity_beta: bool
    cond_sparsity_gamma: bool
    nqs: float
    mean_degree_threshold: float
    mean_degree_margin: float
    correlation_margin: float
    sparsity_beta_margin: float
    sparsity_gamma_margin: float

    @property
    def all_satisfied(self) -> bool:
        return (
            self.cond_mean_degree
            and self.cond_correlation
            and self.cond_sparsity_beta
            and self.cond_sparsity_gamma
        )

    def flags(self) -> tuple[bool, bool, bool, bool]:
        return (
            self.cond_mean_degree,
            self.cond_correlation,
            self.cond_sparsity_beta,
            self.cond_sparsity_gamma,
        )


def recovery_conditions(
    n: int, q: float, s: float, alpha: float, beta: float, gamma: float
) -> RecoveryConditions:
    """Evaluate the four sufficient conditions literally, with margins."""
    params = ModelParams(n, q, s)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    if beta <= 0.0 or gamma <= 0.0:
        raise ParameterError(f"beta and gamma must be positive, got {beta}, {gamma}")
    nqs = params.nqs
    threshold = max(
        20.0,
        84.0 * math.log(2.0 / (1.0 - alpha)),
        16.0 / (min(gamma, beta) * (1.0 - alpha)),
    )
    corr_bound = 8.0 * q / (1.0 - alpha)
    sp_beta_lhs = 2.0 * q * (1.0 - s * s) / s
    sp_beta_rhs = n ** (-beta)
    sp_gamma_rhs = n ** (-2.0 * gamma)
    return RecoveryConditions(
        cond_mean_degree=nqs >= threshold,
        cond_correlation=s > corr_bound,
        cond_sparsity_beta=sp_beta_lhs <= sp_beta_rhs,
        cond_sparsity_gamma=q * s <= sp_gamma_rhs,
        nqs=nqs,
        mean_degree_threshold=threshold,
        mean_degree_margin=nqs - threshold,
        correlation_margin=s - corr_bound,
        sparsity_beta_margin=sp_beta_rhs - sp_beta_lhs,
        sparsity_gamma_margin=sp_gamma_rhs - q * s,
    )


def mgf_zk(k_pairs: int, t: float, params: ModelParams) -> float:
    """Moment generating function of the cyclic sum over k_pairs matched pairs.

    With x = e^t - 1, T = p11*x + 1 and D = sigma^2*x, the value is
    lam1^k + lam2^k for the two roots lam = (T +- sqrt(T^2 - 4D)) / 2.
    """
    if not isinstance(k_pairs, (int,)) or k_pairs < 1:
        raise ParameterError(f"k_pairs must be a positive integer, got {k_pairs!r}")
    if not (math.isfinite(t) and t >= 0.0):
        raise ParameterError(f"t must be a nonnegative real, got {t}")
    p11 = params.q * params.s
    sigma2 = params.q * (params.s - params.q)
    x = math.expm1(t)
    trace = p11 * x + 1.0
    det = sigma2 * x
    disc = trace * trace - 4.0 * det
    if disc <= 0.0:
        raise AlignLabError(f"discriminant must be positive, got {disc}")
    root = math.sqrt(disc)
    lam1 = (trace + root) / 2.0
    lam2 = (trace - root) / 2.0
    return lam1**k_pairs + lam2**k_pairs


class ZetaResult(NamedTuple):
    zeta: float
    z_star: float


def chernoff_zeta(tau: float, q1: float, q2: float) -> ZetaResult:
    """Chernoff minimization of z^-tau * exp(q2*(z^2-1) + q1*(z-1)) over z >= 0.

    Returns the bound base zeta = max(sqrt(2)*e*q1/tau, 4*e*sqrt(q2/tau)) and
    the closed-form minimizer z* = 2*tau / (q1 + sqrt(q1^2 + 8*tau*q2)).
    """
    if not (math.isfinite(tau) and tau > 0.0):
        raise ParameterError(f"tau must be positive, got {tau}")
    if not (math.isfinite(q1) and q1 >= 0.0):
        raise ParameterError(f"q1 must be nonnegative, got {q1}")
    if not (math.isfinite(q2) and q2 > 0.0):
        raise ParameterError(f"q2 must be positive (degenerate linear case rejected), got {q2}")
    z_star = 2.0 * tau / (q1 + math.sqrt(q1 * q1 + 8.0 * tau * q2))
    residual = 2.0 * q2 * z_star * z_star + q1 * z_star - tau
    if abs(residual) > 1e-9 * max(1.0, tau):
        raise AlignLabError(f"minimizer residual too large: {residual}")
    if z_star * z_star > tau / (2.0 * q2) * (1.0 + 1e-12):
        raise AlignLabError("minimizer exceeded its square bound tau/(2*q2)")
    zeta = max(math.sqrt(2.0) * math.e * q1 / tau, 4.0 * math.e * math.sqrt(q2 / tau))
    return ZetaResult(zeta=zeta, z_star=z_star)


class GoodProbBound(NamedTuple):
    """Per-permutation goodness probability bound at overlap <= alpha.

    ``value`` is min(1, exp(log_value)); ``log_value`` stays meaningful when
    the bound underflows.  ``union_exponent`` is the log of the n!-union
    bound with log(1/zeta) replaced by its floor min(beta, gamma)*log n;
    a negative value certifies the whole-search failure bound is tiny.
    """

    value: float
    log_value: float
    union_exponent: float


def good_prob_bound(
    n: int, q: float, s: float, alpha: float, beta: float, gamma: float
) -> GoodProbBound:
    """Bound e^{n(1-alpha)/16} * zeta^{n(1-alpha) n p11 / 8} on P(pi good)."""
    params = ModelParams(n, q, s)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    if beta <= 0.0 or gamma <= 0.0:
        raise ParameterError(f"beta and gamma must be positive, got {beta}, {gamma}")
    p11 = q * s
    if p11 <= 0.0:
        raise ParameterError("good_prob_bound needs p11 = q*s > 0")
    q11 = q * q
    tau = (1.0 - alpha) / 2.0
    q1 = 2.0 * (q11 - p11 * p11) / p11
    q2 = p11
    zeta = chernoff_zeta(tau, q1, q2).zeta
    weight = n * (1.0 - alpha) * n * p11 / 8.0
    log_value = n * (1.0 - alpha) / 16.0 + weight * math.log(zeta)
    value = 1.0 if log_value >= 0.0 else math.exp(log_value)
    union_exponent = (
        n * math.log(n)
        + n * (1.0 - alpha) / 16.0
        - weight * min(beta, gamma) * math.log(n)
    )
    return GoodProbBound(value=value, log_value=log_value, union_exponent=union_exponent)


def power_mean_check(a: float, b: float, k: float, n: float) -> bool:
    """Verify (a^k + b^k)^(n/k) <= (a^2 + b^2)^(n/2) in log domain."""
    if not (a > 0 and b > 0):
        raise ParameterError(f"a and b must be positive, got {a}, {b}")
    if not 2 <= k <= n:
        raise ParameterError(f"need 2 <= k <= n, got k={k}, n={n}")
    la, lb = math.log(a), math.log(b)
    lhs = (n / k) * _logaddexp(k * la, k * lb)
    rhs = (n / 2.0) * _logaddexp(2.0 * la, 2.0 * lb)
    return lhs <= rhs + 1e-12 * max(1.0, abs(rhs))


def _logaddexp(x: float, y: float) -> float:
    if x < y:
        x, y = y, x
    return x + math.log1p(math.exp(y - x))


@dataclass(frozen=True)
class TheoryReport:
    """All bound values and condition flags for one parameter point."""

    params: ModelParams
    alpha: float
    beta: float | None
    gamma: float | None
    kl: float
    fano_raw: float
    fano_clamped: float
    impossibility_ratio: float
    conditions: RecoveryConditions | None
    nqs: float
    good_prob_bound: float

    def to_dict(self) -> dict:
        out: dict = {
            "n": self.params.n,
            "q": self.params.q,
            "s": self.params.s,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "kl": self.kl,
            "fano_raw": self.fano_raw,
            "fano_clamped": self.fano_clamped,
            "impossibility_ratio": self.impossibility_ratio,
            "nqs": self.nqs,
            "good_prob_bound": self.good_prob_bound,
        }
        if self.conditions is not None:
            out["conditions"] = {
                "cond_mean_degree": self.conditions.cond_mean_degree,
                "cond_correlation": self.conditions.cond_correlation,
                "cond_sparsity_beta": self.conditions.cond_sparsity_beta,
                "cond_sparsity_gamma": self.conditions.cond_sparsity_gamma,
                "all_satisfied": self.conditions.all_satisfied,
                "nqs": self.conditions.nqs,
                "mean_degree_threshold": self.conditions.mean_degree_threshold,
                "mean_degree_margin": self.conditions.mean_degree_margin,
                "correlation_margin": self.conditions.correlation_margin,
                "sparsity_beta_margin": self.conditions.sparsity_beta_margin,
                "sparsity_gamma_margin": self.conditions.sparsity_gamma_margin,
            }
        else:
            out["conditions"] = None
        return out


def theory_report(
    n: int,
    q: float,
    s: float,
    alpha: float,
    beta: float | None = None,
    gamma: float | None = None,
) -> TheoryReport:
    """Assemble every evaluator into one report for a parameter point.

    beta and gamma are optional; without them the condition checker and the
    goodness-probability bound are omitted (reported as None / 1.0 cap).
    """
    params = ModelParams(n, q, s)
    kl = kl_divergence(dist_p(params), dist_q(params))
    fano = fano_bound(n, q, s, alpha)
    ratio = impossibility_ratio(n, q, s, alpha)
    if (beta is None) != (gamma is None):
        raise ParameterError("beta and gamma must be given together")
    if beta is not None and gamma is not None:
        conds = recovery_conditions(n, q, s, alpha, beta, gamma)
        gpb = good_prob_bound(n, q, s, alpha, beta, gamma).value if q > 0 else 1.0
    else:
        conds = None
        gpb = 1.0
    return TheoryReport(
        params=params,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        kl=kl,
        fano_raw=fano.raw,
        fano_clamped=fano.clamped,
        impossibility_ratio=ratio,
        conditions=conds,
        nqs=params.nqs,
        good_prob_bound=gpb,
    )
