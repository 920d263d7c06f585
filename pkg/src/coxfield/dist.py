"""Coxian and hyperexponential service-time algebra.

A Coxian distribution is a phase-type distribution with ordered phases
1..n: a job starts in phase 1, leaves phase i at rate mu_i, continues to
phase i+1 with probability p_i and completes otherwise, so the completion
rate of phase i is nu_i = mu_i * (1 - p_i).  A hyperexponential mixes
exponentials with positive weights.  This module converts between the two
representations, classifies Coxians by whether their completion rates
decrease along phases (the class that behaves like hyperexponentials in
the mean-field results), computes moments and hazard rates, and fits a
two-branch hyperexponential to a moment triple.

Survival, density and hazard are evaluated by integrating the phase-mass
ODE a'(t) = a(t) S with a classic fourth-order fixed-step scheme rather
than a series-based matrix exponential: n is small and, crucially, both
representations of the same distribution are pushed through the same
discretization, so representation-equivalence checks compare algebra, not
integrator truncation.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

#: relative gap under which two rates are considered duplicates (rejected
#: where the partial-fraction algebra needs distinct rates)
DUPLICATE_RATE_RTOL = 1e-9

#: completion-rate ties within this absolute tolerance count as a boundary
#: case of the decreasing-completion-rate class (accepted, margin 0)
BOUNDARY_TOL = 1e-12

#: survival values below this are too small for a trustworthy hazard ratio
SURVIVAL_FLOOR = 1e-14

#: hard cap on the survival-ODE step; tightened to 0.05/mu_max for stiff rates
MAX_SURVIVAL_STEP = 1e-3


@dataclass(frozen=True)
class CoxianDistribution:
    """Coxian distribution with rates ``mu_i`` and continuations ``p_i``.

    Parameters
    ----------
    rates : tuple of float
        Phase exit rates mu_1..mu_n, all strictly positive.
    continuations : tuple of float
        Continuation probabilities p_1..p_n with p_i in [0, 1) and
        p_n = 0 exactly.
    """

    rates: tuple
    continuations: tuple

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        conts = tuple(float(p) for p in self.continuations)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "continuations", conts)
        if len(rates) == 0:
            raise ValueError("a Coxian needs at least one phase")
        if len(conts) != len(rates):
            raise ValueError(
                f"got {len(rates)} rates but {len(conts)} continuations"
            )
        if any(r <= 0 or not math.isfinite(r) for r in rates):
            raise ValueError(f"rates must be positive and finite, got {rates}")
        if any(p < 0 or p >= 1 for p in conts):
            raise ValueError(f"continuations must lie in [0, 1), got {conts}")
        if conts[-1] != 0.0:
            raise ValueError(f"last continuation must be 0, got {conts[-1]}")

    @property
    def n(self) -> int:
        return len(self.rates)

    @property
    def completion_rates(self) -> np.ndarray:
        """nu_i = mu_i * (1 - p_i) for each phase."""
        return np.asarray(self.rates) * (1.0 - np.asarray(self.continuations))

    def generator(self) -> np.ndarray:
        """Upper-bidiagonal phase generator S (absorption excluded)."""
        mu = np.asarray(self.rates)
        s = np.diag(-mu)
        if self.n > 1:
            off = mu[:-1] * np.asarray(self.continuations[:-1])
            s += np.diag(off, k=1)
        return s


@dataclass(frozen=True)
class HyperExponential:
    """Finite mixture of exponentials with strictly positive weights.

    Parameters
    ----------
    weights : tuple of float
        Branch probabilities, strictly positive, summing to 1 within 1e-12.
    rates : tuple of float
        Branch rates, strictly positive and pairwise distinct (relative
        gaps above 1e-9).
    """

    weights: tuple
    rates: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", rates)
        if len(w) == 0 or len(w) != len(rates):
            raise ValueError(
                f"got {len(w)} weights for {len(rates)} rates"
            )
        if any(v <= 0 for v in w):
            raise ValueError(f"weights must be strictly positive, got {w}")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got sum {sum(w)!r}")
        if any(r <= 0 or not math.isfinite(r) for r in rates):
            raise ValueError(f"rates must be positive and finite, got {rates}")
        _reject_duplicate_rates(rates)

    @property
    def k(self) -> int:
        return len(self.rates)


@dataclass(frozen=True)
class SignedMixture:
    """Exponential mixture with real (possibly negative) weights.

    The partial-fraction expansion of a Coxian over distinct rates always
    sums to one but may carry negative weights; a nonnegative expansion is
    exactly a hyperexponential.
    """

    weights: tuple
    rates: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", rates)
        if len(w) == 0 or len(w) != len(rates):
            raise ValueError(f"got {len(w)} weights for {len(rates)} rates")
        if any(r <= 0 for r in rates):
            raise ValueError(f"rates must be positive, got {rates}")
        if abs(sum(w) - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got sum {sum(w)!r}")

    @property
    def is_hyperexponential(self) -> bool:
        """True when every weight is nonnegative (within 1e-12)."""
        return all(v >= -1e-12 for v in self.weights)


@dataclass(frozen=True)
class MomentTriple:
    """First moment plus normalized second and third moments.

    n2 = m2 / m1^2 and n3 = m3 / (m1 * m2).
    """

    m1: float
    n2: float
    n3: float

    def __post_init__(self):
        if self.m1 <= 0:
            raise ValueError(f"m1 must be positive, got {self.m1}")
        if self.n2 < 1 or self.n3 < 1:
            raise ValueError(
                f"normalized moments must be >= 1, got n2={self.n2}, n3={self.n3}"
            )

    @property
    def m2(self) -> float:
        return self.n2 * self.m1 ** 2

    @property
    def m3(self) -> float:
        return self.n3 * self.m1 * self.m2


@dataclass(frozen=True)
class CompletionRateCheck:
    """Outcome of the decreasing-completion-rate classification.

    ``margin`` is min_i (nu_i - nu_{i+1}), +inf for a single phase;
    ``boundary`` flags ties accepted with margin 0.
    """

    is_member: bool
    margin: float
    boundary: bool


Distribution = Union[CoxianDistribution, HyperExponential]


def _reject_duplicate_rates(rates: Sequence[float]) -> None:
    ordered = sorted(rates)
    for a, b in zip(ordered, ordered[1:]):
        if (b - a) <= DUPLICATE_RATE_RTOL * b:
            raise ValueError(
                f"rates must be distinct (relative gap > {DUPLICATE_RATE_RTOL:g}), "
                f"got {a!r} and {b!r}"
            )


def hyperexp_to_coxian(hyper: HyperExponential) -> CoxianDistribution:
    """Convert a hyperexponential to its equivalent Coxian.

    Rates are sorted in strictly decreasing order and the continuation
    probabilities are chosen so both representations have identical
    distribution functions.  The result always has strictly decreasing
    completion rates.

    Parameters
    ----------
    hyper : HyperExponential
        Mixture to convert.

    Returns
    -------
    CoxianDistribution
        Equivalent Coxian on the sorted rates, p_i in (0, 1) for i < n.
    """
    order = np.argsort(-np.asarray(hyper.rates))
    mu = [hyper.rates[j] for j in order]
    w = [hyper.weights[j] for j in order]
    n = len(mu)
    if n == 1:
        return CoxianDistribution((mu[0],), (0.0,))

    # partial[k] accumulates prod_{j<=i} (1 - mu_k/mu_j) as i advances;
    # only k >= i is ever read, so the zero factor at j = k never enters.
    partial = [1.0] * n
    conts = []
    for i in range(n - 1):
        denom = sum(w[k] * partial[k] for k in range(i, n))
        for k in range(i + 1, n):
            partial[k] *= 1.0 - mu[k] / mu[i]
        numer = sum(w[k] * partial[k] for k in range(i + 1, n))
        p_i = numer / denom
        if not 0.0 < p_i < 1.0:
            raise ValueError(
                f"conversion produced continuation {p_i!r} outside (0, 1); "
                "input rates are too close to duplicate"
            )
        conts.append(p_i)
    conts.append(0.0)
    return CoxianDistribution(tuple(mu), tuple(conts))


def coxian_to_mixture(cox: CoxianDistribution) -> SignedMixture:
    """Expand a Coxian with distinct rates into a signed exponential mixture.

    The weight of rate mu_k collects the partial-fraction residues of every
    phase prefix the job can complete in.  Weights always sum to one; they
    are all nonnegative exactly when the Coxian is also a hyperexponential.

    Raises
    ------
    ValueError
        If any two rates coincide within relative 1e-9.
    """
    _reject_duplicate_rates(cox.rates)
    mu = list(cox.rates)
    p = list(cox.continuations)
    n = cox.n

    # exit[i] = P(job completes in phase i) = (1 - p_i) * prod_{j<i} p_j
    exit_prob = []
    through = 1.0
    for i in range(n):
        exit_prob.append((1.0 - p[i]) * through)
        through *= p[i]

    weights = []
    for k in range(n):
        residue = 1.0  # prod_{j <= i, j != k} mu_j / (mu_j - mu_k)
        for j in range(k):
            residue *= mu[j] / (mu[j] - mu[k])
        total = exit_prob[k] * residue
        for i in range(k + 1, n):
            residue *= mu[i] / (mu[i] - mu[k])
            total += exit_prob[i] * residue
        weights.append(total)
    return SignedMixture(tuple(weights), tuple(mu))


def has_decreasing_completion_rates(
    cox: CoxianDistribution, tol: float = 0.0
) -> CompletionRateCheck:
    """Check whether completion rates nu_i decrease along phases.

    Parameters
    ----------
    cox : CoxianDistribution
        Distribution to classify.
    tol : float, optional
        Slack: the check passes when every nu_i - nu_{i+1} > -tol.  The
        default demands strict decrease, except that ties within 1e-12 are
        reported as a boundary case and accepted with margin 0.
    """
    nu = cox.completion_rates
    if cox.n == 1:
        return CompletionRateCheck(True, math.inf, False)
    margin = float(np.min(nu[:-1] - nu[1:]))
    boundary = -BOUNDARY_TOL <= margin <= 0.0
    is_member = margin > -tol or boundary
    return CompletionRateCheck(is_member, 0.0 if boundary else margin, boundary)


def remaining_service_times(cox: CoxianDistribution) -> np.ndarray:
    """Expected remaining service time R_i seen from each phase i.

    R_n = 1/mu_n and R_{i-1} = 1/mu_{i-1} + p_{i-1} R_i.  For unit-mean
    distributions R_1 = 1, and decreasing completion rates make the vector
    strictly increasing.
    """
    n = cox.n
    r = np.empty(n)
    r[-1] = 1.0 / cox.rates[-1]
    for i in range(n - 2, -1, -1):
        r[i] = 1.0 / cox.rates[i] + cox.continuations[i] * r[i + 1]
    return r


def normalize_to_unit_mean(cox: CoxianDistribution) -> CoxianDistribution:
    """Rescale rates so the mean becomes exactly one."""
    m1 = moments(cox, 1)
    return CoxianDistribution(
        tuple(r * m1 for r in cox.rates), cox.continuations
    )


def _phase_form(dist: Distribution):
    """Unified (alpha, rates, continuations) phase representation."""
    if isinstance(dist, CoxianDistribution):
        alpha = np.zeros(dist.n)
        alpha[0] = 1.0
        return alpha, np.asarray(dist.rates), np.asarray(dist.continuations)
    if isinstance(dist, HyperExponential):
        return (
            np.asarray(dist.weights),
            np.asarray(dist.rates),
            np.zeros(dist.k),
        )
    raise TypeError(f"unsupported distribution type {type(dist).__name__}")


def moments(dist: Distribution, k: int) -> float:
    """Raw moment m_k = k! * alpha (-S)^{-k} 1 by back-substitution.

    The phase generator is upper bidiagonal, so each (-S)^{-1} application
    is a single backward sweep; no matrix is ever inverted.  Works for both
    representations through the shared phase form.
    """
    if k < 1:
        raise ValueError(f"moment order must be >= 1, got {k}")
    alpha, rates, conts = _phase_form(dist)
    y = np.ones(len(rates))
    for _ in range(k):
        y = _solve_neg_generator(rates, conts, y)
    return math.factorial(k) * float(alpha @ y)


def _solve_neg_generator(rates, conts, v):
    """Solve (-S) x = v for upper-bidiagonal S, backwards."""
    n = len(rates)
    x = np.empty(n)
    x[-1] = v[-1] / rates[-1]
    for i in range(n - 2, -1, -1):
        x[i] = v[i] / rates[i] + conts[i] * x[i + 1]
    return x


def normalized_moments(dist: Distribution) -> MomentTriple:
    """MomentTriple (m1, m2/m1^2, m3/(m1 m2)) of a distribution."""
    m1 = moments(dist, 1)
    m2 = moments(dist, 2)
    m3 = moments(dist, 3)
    return MomentTriple(m1, m2 / m1 ** 2, m3 / (m1 * m2))


def fit_hyperexp2(
    target: MomentTriple, region_tol: float = 0.0
) -> HyperExponential:
    """Fit a two-branch hyperexponential to a moment triple in closed form.

    The moment equations m_j = j! sum_k w_k / mu_k^j say the branch means
    1/mu_k form a two-point distribution with power moments m_j / j!; its
    atoms solve a quadratic with coefficients linear in the moments, and
    the weight follows from the mean.  Feasibility requires n2 > 2 and
    n3 > 1.5 * n2 (an open region); the single point (n2, n3) = (2, 3)
    is the exponential with rate 1/m1.

    Parameters
    ----------
    target : MomentTriple
        Moments to match.
    region_tol : float, optional
        Slack applied to the n3 > 1.5 * n2 boundary.  The default keeps the
        boundary excluded: on it one branch mean collapses to zero.  Even
        with slack, a degenerate solution is rejected after the solve.

    Raises
    ------
    ValueError
        If the target lies outside the feasible region or the solve
        degenerates on its boundary.
    """
    m1, n2, n3 = target.m1, target.n2, target.n3
    if abs(n2 - 2.0) <= 1e-12 and abs(n3 - 3.0) <= 1e-12:
        return HyperExponential((1.0,), (1.0 / m1,))
    if n2 <= 2.0:
        raise ValueError(
            f"second normalized moment must exceed 2, got n2={n2!r}"
        )
    if n3 <= 1.5 * n2 - region_tol:
        raise ValueError(
            f"third normalized moment must exceed 1.5*n2={1.5 * n2!r}, "
            f"got n3={n3!r}"
        )

    # Branch means are the atoms of a two-point law whose power moments
    # are m_j / j!.  Their sum a and (negated) product b reduce to the
    # expressions below; keeping n2 - 2 and companions as direct input
    # subtractions avoids the cancellation of the generic moment route
    # near the region boundary, and the small root comes from the root
    # product rather than a - sqrt(disc).
    a = m1 * n2 * (n3 - 3.0) / (3.0 * (n2 - 2.0))
    b = -(m1 * m1) * n2 * (2.0 * n3 - 3.0 * n2) / (6.0 * (n2 - 2.0))
    disc = a * a + 4.0 * b
    if disc <= 0.0:
        raise ValueError(
            f"target {target} has no real two-branch solution"
        )
    x1 = 0.5 * (a + math.sqrt(disc))
    x2 = -b / x1
    if x2 <= 0.0 or x1 <= x2:
        raise ValueError(
            f"target {target} degenerates to a zero-mean branch; "
            "it sits on the feasibility boundary"
        )
    w1 = (m1 - x2) / (x1 - x2)
    if not 0.0 < w1 < 1.0:
        raise ValueError(f"target {target} needs a weight outside (0, 1)")
    return HyperExponential((w1, 1.0 - w1), (1.0 / x1, 1.0 / x2))


def telescoping_rate_sum(k: int, l: int, rates: Sequence[float]) -> float:
    """Telescoping product-ratio sum over rates; equals -1 identically.

    For 1-based indices l > k >= 1 and rates with mu_j != mu_k for j > k,

        sum_{i=k+1}^{l} prod_{v=k}^{i-1} (mu_v - mu_l)
                        / prod_{j=k+1}^{i} (mu_j - mu_k)

    collapses to -1 for every choice of rates.  Cross-checks the
    partial-fraction algebra behind the mixture conversion.
    """
    if not 1 <= k < l <= len(rates):
        raise ValueError(f"need 1 <= k < l <= len(rates), got k={k}, l={l}")
    mu = [float(r) for r in rates]
    mu_k = mu[k - 1]
    mu_l = mu[l - 1]
    for j in range(k + 1, l + 1):
        if mu[j - 1] == mu_k:
            raise ValueError(
                f"rates[{j - 1}] equals rates[{k - 1}]; they must differ"
            )
    total = 0.0
    numer = 1.0
    denom = 1.0
    for i in range(k + 1, l + 1):
        numer *= mu[i - 2] - mu_l
        denom *= mu[i - 1] - mu_k
        total += numer / denom
    return total


# ---------------------------------------------------------------------------
# survival / density / hazard via the phase-mass ODE
# ---------------------------------------------------------------------------


def _survival_step(dist: Distribution) -> float:
    return min(MAX_SURVIVAL_STEP, 0.05 / max(dist.rates))


def _rk4_phase_segment(mass, rates, pm, span, max_step):
    """Advance batched phase mass over one time span in lockstep.

    mass, rates, pm are (M, n); pm holds p_i * mu_i.  The step divides the
    span exactly and never exceeds max_step.
    """
    if span <= 0.0:
        return mass
    steps = max(1, math.ceil(span / max_step))
    h = span / steps

    def action(a):
        b = -a * rates
        b[:, 1:] += a[:, :-1] * pm[:, :-1]
        return b

    for _ in range(steps):
        k1 = action(mass)
        k2 = action(mass + 0.5 * h * k1)
        k3 = action(mass + 0.5 * h * k2)
        k4 = action(mass + h * k3)
        mass = mass + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return mass


def _phase_grid_many(dists: Sequence[Distribution], ts: np.ndarray):
    """Survival and density for many distributions on a shared sorted grid.

    Returns (survival, density), each of shape (len(dists), len(ts)).
    Distributions are grouped by phase count and step bucket so members of
    a group integrate in lockstep with a common step below each member's
    own bound.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.ndim != 1:
        raise ValueError("time grid must be one-dimensional")
    if len(ts) and (ts[0] < 0 or np.any(np.diff(ts) < 0)):
        raise ValueError("time grid must be nonnegative and ascending")
    m = len(dists)
    surv = np.empty((m, len(ts)))
    dens = np.empty((m, len(ts)))

    groups = {}
    for idx, d in enumerate(dists):
        step = _survival_step(d)
        key = (len(d.rates), math.ceil(math.log2(1.0 / step)))
        groups.setdefault(key, []).append(idx)

    for (n, exponent), members in groups.items():
        step = 2.0 ** (-exponent)
        alpha = np.empty((len(members), n))
        rates = np.empty((len(members), n))
        conts = np.empty((len(members), n))
        for row, idx in enumerate(members):
            alpha[row], rates[row], conts[row] = _phase_form(dists[idx])
        pm = conts * rates
        nu = rates * (1.0 - conts)
        mass = alpha
        prev_t = 0.0
        rows = np.asarray(members)
        for col, t in enumerate(ts):
            mass = _rk4_phase_segment(mass, rates, pm, t - prev_t, step)
            prev_t = t
            surv[rows, col] = mass.sum(axis=1)
            dens[rows, col] = (mass * nu).sum(axis=1)
    return surv, dens


def _eval_grid(dist: Distribution, t):
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    order = np.argsort(t_arr, kind="stable")
    surv, dens = _phase_grid_many([dist], t_arr[order])
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    return surv[0][inv], dens[0][inv]


def cdf(dist: Distribution, t):
    """Distribution function at scalar or array times, F(t) = 1 - survival."""
    surv, _ = _eval_grid(dist, t)
    out = 1.0 - surv
    return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out


def pdf(dist: Distribution, t):
    """Density at scalar or array times, the completion flow of phase mass."""
    _, dens = _eval_grid(dist, t)
    return float(dens[0]) if np.isscalar(t) or np.ndim(t) == 0 else dens


def hazard(dist: Distribution, t):
    """Hazard rate pdf/survival; NaN where survival drops below 1e-14.

    The hazard is the completion-rate average over the conditional phase
    distribution at time t, hence nonincreasing for distributions with
    decreasing completion rates.
    """
    surv, dens = _eval_grid(dist, t)
    out = np.full_like(surv, np.nan)
    ok = surv >= SURVIVAL_FLOOR
    out[ok] = dens[ok] / surv[ok]
    return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# seeded samplers
# ---------------------------------------------------------------------------


def random_hyperexp(
    rng: np.random.Generator,
    max_branches: int = 6,
    rate_range=(1e-2, 1e2),
    min_rel_gap: float = 1e-4,
) -> HyperExponential:
    """Draw a random hyperexponential with log-uniform rates.

    Rates are resampled until all pairwise relative gaps exceed
    ``min_rel_gap`` (near-ties are measure zero but would sit inside the
    duplicate-rejection band); weights get a small floor so no branch is
    negligible.
    """
    k = int(rng.integers(1, max_branches + 1))
    lo, hi = math.log(rate_range[0]), math.log(rate_range[1])
    while True:
        rates = np.sort(np.exp(rng.uniform(lo, hi, size=k)))[::-1]
        if k == 1 or np.all((rates[:-1] - rates[1:]) > min_rel_gap * rates[:-1]):
            break
    w = rng.dirichlet(np.ones(k))
    w = (w + 0.02) / (1.0 + 0.02 * k)
    return HyperExponential(tuple(w), tuple(rates))


def random_coxian_decreasing(
    rng: np.random.Generator,
    max_phases: int = 6,
    completion_range=(0.05, 20.0),
    max_continuation: float = 0.9,
    unit_mean: bool = True,
    max_unit_rate: float = 500.0,
) -> CoxianDistribution:
    """Draw a random Coxian with strictly decreasing completion rates.

    Completion rates are sorted log-uniform draws, continuations are
    uniform on [0.05, max_continuation], and the result is normalized to
    unit mean by default.  Normalized draws whose largest rate exceeds
    ``max_unit_rate`` are redrawn: they are valid but needlessly stiff for
    the fixed-step survival evaluation.
    """
    lo, hi = math.log(completion_range[0]), math.log(completion_range[1])
    while True:
        n = int(rng.integers(1, max_phases + 1))
        nu = np.sort(np.exp(rng.uniform(lo, hi, size=n)))[::-1]
        if n > 1 and np.any((nu[:-1] - nu[1:]) <= 1e-6 * nu[:-1]):
            continue
        p = rng.uniform(0.05, max_continuation, size=n)
        p[-1] = 0.0
        cox = CoxianDistribution(tuple(nu / (1.0 - p)), tuple(p))
        if unit_mean:
            cox = normalize_to_unit_mean(cox)
        if max(cox.rates) <= max_unit_rate:
            return cox


# ---------------------------------------------------------------------------
# JSON-dict round trip
# ---------------------------------------------------------------------------


def distribution_to_dict(dist: Distribution) -> dict:
    """Plain-dict form: {"kind", "rates", "continuations"|"weights"}."""
    if isinstance(dist, CoxianDistribution):
        return {
            "kind": "coxian",
            "rates": list(dist.rates),
            "continuations": list(dist.continuations),
        }
    if isinstance(dist, HyperExponential):
        return {
            "kind": "hyperexp",
            "rates": list(dist.rates),
            "weights": list(dist.weights),
        }
    raise TypeError(f"unsupported distribution type {type(dist).__name__}")


class SchemaError(ValueError):
    """Structurally invalid input: wrong shape, missing or unknown fields.

    Distinct from a plain ValueError, which marks well-formed input
    rejected on mathematical grounds (duplicate rates, infeasible
    moments, ...).  The command-line layer maps the two to different
    exit codes.
    """


def distribution_from_dict(data: dict) -> Distribution:
    """Inverse of :func:`distribution_to_dict`, with schema validation."""
    if not isinstance(data, dict) or "kind" not in data:
        raise SchemaError("distribution object needs a 'kind' field")
    kind = data["kind"]
    if kind == "coxian":
        missing = {"rates", "continuations"} - data.keys()
        if missing:
            raise SchemaError(f"coxian distribution missing fields {missing}")
        return CoxianDistribution(
            tuple(data["rates"]), tuple(data["continuations"])
        )
    if kind == "hyperexp":
        missing = {"rates", "weights"} - data.keys()
        if missing:
            raise SchemaError(f"hyperexp distribution missing fields {missing}")
        return HyperExponential(tuple(data["weights"]), tuple(data["rates"]))
    raise SchemaError(f"unknown distribution kind {kind!r}")
