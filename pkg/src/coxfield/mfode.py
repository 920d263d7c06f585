"""Mean-field ODE engine for FCFS load balancing with Coxian service.

The state h lives on a (B, n) grid (see order.py).  Its drift splits into
a service part shared by every policy and a policy-specific arrival part:

* service: completions at rate nu_j = mu_j (1 - p_j) remove a server from
  {length >= l} only when its length is exactly l, and from every
  {length >= l, phase >= i >= 2} set regardless (the next job restarts in
  phase 1); phase advances feed h_{l,i} from h_{l,i-1}.
* arrivals: "jsq" routes each job to the shortest of d uniform samples,
  "pullpush" has uniform local arrivals plus idle servers pulling one
  waiting job from a uniform peer at rate r, "batchjsq" routes batches of
  K jobs (batch rate lam per server) to the K shortest of d samples.

For phase columns i >= 2 every arrival drift factors as lam times the
exact-length phase mass (h_{l-1,i} - h_{l,i}) times a selection slope,
the divided difference of the policy's overflow polynomial between
h_{l,1} and h_{l-1,1}.  The batch slope is evaluated by Gauss-Legendre
quadrature of the derivative along the segment, which is exact for
polynomials and free of the cancellation a raw difference quotient
suffers when the two tail values nearly coincide.

Integration is classic fixed-step RK4 (drifts are smooth polynomials in
h; determinism matters more than adaptivity here).  Fixed points are
found by integrating from the empty state until the drift is small, then
polishing with a damped Newton iteration on the full (B n)-dimensional
drift using a one-shot batched finite-difference Jacobian.
"""

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .dist import (
    CoxianDistribution,
    SchemaError,
    distribution_from_dict,
    distribution_to_dict,
    has_decreasing_completion_rates,
    hyperexp_to_coxian,
    moments,
    remaining_service_times,
)
from .order import (
    MeanFieldState,
    StateLike,
    _as_h,
    _leq_arrays,
    leq,
    state_space_report,
    zero_state,
)

POLICY_KINDS = ("jsq", "pullpush", "batchjsq")

#: sup-norm drift threshold switching from integration to Newton
PRE_NEWTON_DRIFT = 1e-8

#: residual required of a polished fixed point
FIXED_POINT_RESIDUAL = 1e-12

#: tail mass threshold for automatic buffer growth
TAIL_MASS_TOL = 1e-10

_UNIT_MEAN_TOL = 1e-9


class FixedPointError(RuntimeError):
    """Raised when the solver cannot reach the target residual.

    Carries the residual history so callers can distinguish slow progress
    (near-instability) from divergence.
    """

    def __init__(self, message: str, history: Sequence[float] = ()):
        super().__init__(message)
        self.history = tuple(float(r) for r in history)


class IntegrationError(RuntimeError):
    """Raised when a trajectory leaves the state space beyond tolerance."""


@dataclass(frozen=True)
class PolicyModel:
    """A load-balancing policy with its rates and service distribution.

    ``kind`` is one of "jsq" (needs d), "pullpush" (needs r), "batchjsq"
    (needs K <= d).  ``service`` must have unit mean and nonincreasing
    completion rates; both are structural requirements of the ODE family
    and violations raise.  Instability (lam >= 1, or lam*K >= 1 for
    batches) only warns: with a finite buffer the dynamics stay well
    defined.  ``B=None`` requests automatic buffer growth in fixed_point.
    """

    kind: str
    lam: float
    service: CoxianDistribution
    B: Optional[int] = None
    d: Optional[int] = None
    K: Optional[int] = None
    r: Optional[float] = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"arrival rate must be positive, got {self.lam!r}")
        if self.B is not None and (int(self.B) != self.B or self.B < 1):
            raise ValueError(f"buffer size must be a positive integer, got {self.B!r}")
        m1 = moments(self.service, 1)
        if abs(m1 - 1.0) > _UNIT_MEAN_TOL:
            raise ValueError(f"service must have unit mean, got {m1!r}")
        check = has_decreasing_completion_rates(self.service, tol=1e-9)
        if not check.is_member:
            raise ValueError(
                "service completion rates must be nonincreasing "
                f"(margin {check.margin!r})"
            )

        if self.kind == "jsq":
            if self.d is None or int(self.d) != self.d or self.d < 1:
                raise ValueError(f"jsq needs integer d >= 1, got {self.d!r}")
            if self.lam >= 1:
                warnings.warn(f"jsq with lam={self.lam} is unstable", stacklevel=2)
        elif self.kind == "pullpush":
            if self.r is None or self.r < 0:
                raise ValueError(f"pullpush needs probe rate r >= 0, got {self.r!r}")
            if self.lam >= 1:
                warnings.warn(f"pullpush with lam={self.lam} is unstable", stacklevel=2)
        else:
            if self.d is None or int(self.d) != self.d or self.d < 1:
                raise ValueError(f"batchjsq needs integer d >= 1, got {self.d!r}")
            if self.K is None or int(self.K) != self.K or not 1 <= self.K <= self.d:
                raise ValueError(f"batchjsq needs 1 <= K <= d, got K={self.K!r}")
            if self.lam * self.K >= 1:
                warnings.warn(
                    f"batchjsq with lam*K={self.lam * self.K} is unstable", stacklevel=2
                )

    @property
    def n(self) -> int:
        return self.service.n

    @property
    def rate_bound(self) -> float:
        """Total event-rate scale governing the integrator step bound."""
        choice = max(self.d or 1, self.K or 1, 1)
        return self.lam * choice + float(np.max(self.service.rates)) + (self.r or 0.0)

    def with_buffer(self, B: int) -> "PolicyModel":
        return replace(self, B=B)


def model_to_dict(model: PolicyModel) -> dict:
    out = {
        "policy": model.kind,
        "lambda": model.lam,
        "B": model.B,
        "service": distribution_to_dict(model.service),
    }
    if model.kind in ("jsq", "batchjsq"):
        out["d"] = model.d
    if model.kind == "batchjsq":
        out["K"] = model.K
    if model.kind == "pullpush":
        out["r"] = model.r
    return out


def model_from_dict(data: dict) -> PolicyModel:
    """Build a model from its JSON dict; hyperexp services are converted."""
    if not isinstance(data, dict):
        raise SchemaError(f"model must be a JSON object, got {type(data).__name__}")
    for key in ("policy", "lambda", "service"):
        if key not in data:
            raise SchemaError(f"model is missing required key {key!r}")
    service = distribution_from_dict(data["service"])
    if not isinstance(service, CoxianDistribution):
        service = hyperexp_to_coxian(service)
    B = data.get("B")
    return PolicyModel(
        kind=data["policy"],
        lam=float(data["lambda"]),
        service=service,
        B=None if B is None else int(B),
        d=data.get("d"),
        K=data.get("K"),
        r=data.get("r"),
    )


# ---------------------------------------------------------------------------
# overflow polynomial calculus for batch sampling


def _check_unit(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
        raise ValueError(f"{name} must lie in [0, 1]")
    return x


def _check_kd(K: int, d: int):
    if not (1 <= K <= d):
        raise ValueError(f"need 1 <= K <= d, got K={K}, d={d}")


def batch_overflow(x, K: int, d: int):
    """Expected jobs of a K-batch landing on servers with tail value x.

    Sum over s < K of (K - s) C(d, s) x^(d-s) (1-x)^s: s is the number of
    sampled slots below the threshold, which absorb jobs first.
    """
    _check_kd(K, d)
    x = _check_unit(x, "x")
    return _batch_overflow(x, K, d)


def _batch_overflow(x, K, d):
    acc = math.comb(d, K - 1) * (K - (K - 1)) * x ** (d - K + 1) * (1 - x) ** (K - 1)
    for s in range(K - 2, -1, -1):
        acc = acc + (K - s) * math.comb(d, s) * x ** (d - s) * (1 - x) ** s
    return acc


def batch_overflow_prime(x, K: int, d: int):
    """Derivative of batch_overflow: sum of d C(d-1,s) x^(d-1-s)(1-x)^s."""
    _check_kd(K, d)
    x = _check_unit(x, "x")
    return _batch_overflow_prime(x, K, d)


def _batch_overflow_prime(x, K, d):
    acc = 0.0
    for s in range(K):
        acc = acc + d * math.comb(d - 1, s) * x ** (d - 1 - s) * (1 - x) ** s
    return acc


def batch_overflow_second(x, K: int, d: int):
    """Second derivative: d(d-1) C(d-2,K-1) x^(d-K-1)(1-x)^(K-1); 0 if K=d."""
    _check_kd(K, d)
    x = _check_unit(x, "x")
    if K == d:
        return np.zeros_like(x) if x.ndim else 0.0
    return d * (d - 1) * math.comb(d - 2, K - 1) * x ** (d - K - 1) * (1 - x) ** (K - 1)


_GL_CACHE = {}


def _gl_nodes(d: int):
    # enough nodes to integrate the degree-(d-1) derivative exactly
    if d not in _GL_CACHE:
        m = max(1, (d + 1) // 2)
        u, w = np.polynomial.legendre.leggauss(m)
        _GL_CACHE[d] = ((u + 1.0) / 2.0, w / 2.0)
    return _GL_CACHE[d]


def _batch_overflow_slope(x1, x2, K, d):
    nodes, weights = _gl_nodes(d)
    x1 = np.asarray(x1, dtype=float)
    gap = np.asarray(x2, dtype=float) - x1
    acc = weights[0] * _batch_overflow_prime(x1 + nodes[0] * gap, K, d)
    for t, w in zip(nodes[1:], weights[1:]):
        acc = acc + w * _batch_overflow_prime(x1 + t * gap, K, d)
    return acc


def batch_overflow_slope(x1, x2, K: int, d: int):
    """Divided difference of batch_overflow between x1 and x2.

    Evaluated as the Gauss-Legendre integral of the derivative along the
    segment, so coincident arguments return the derivative itself and no
    accuracy is lost when x1 and x2 are close.  Bounded above by the
    derivative at 1, which equals d.
    """
    _check_kd(K, d)
    x1 = _check_unit(x1, "x1")
    x2 = _check_unit(x2, "x2")
    return _batch_overflow_slope(x1, x2, K, d)


# ---------------------------------------------------------------------------
# drift assembly; all functions broadcast over leading axes of h


def service_drift(service: CoxianDistribution, h: StateLike) -> np.ndarray:
    """Completion and phase-advance drift, shared by every policy."""
    h = _as_h_batch(h)
    rates = np.asarray(service.rates, dtype=float)
    conts = np.asarray(service.continuations, dtype=float)
    nu = rates * (1 - conts)
    pad_phase = np.zeros(h.shape[:-1] + (1,))
    d_phase = h - np.concatenate([h[..., 1:], pad_phase], axis=-1)
    tail = np.flip(np.cumsum(np.flip(d_phase * nu, axis=-1), axis=-1), axis=-1)
    pad_level = np.zeros(h.shape[:-2] + (1,) + h.shape[-1:])
    cells = d_phase - np.concatenate([d_phase[..., 1:, :], pad_level], axis=-2)
    out = np.empty_like(h)
    out[..., 0] = -(cells @ nu)
    if h.shape[-1] > 1:
        advance = (rates[:-1] * conts[:-1]) * d_phase[..., :-1]
        out[..., 1:] = advance - tail[..., 1:]
    return out


def _as_h_batch(h: StateLike) -> np.ndarray:
    if isinstance(h, MeanFieldState):
        return h.h
    arr = np.asarray(h, dtype=float)
    if arr.ndim < 2:
        raise ValueError(f"state must have at least 2 axes, got shape {arr.shape}")
    return arr


def _tails(h):
    """First-phase column, shifted variants with the h_{0,1}=1 convention."""
    q = h[..., :, 0]
    ones = np.ones(q.shape[:-1] + (1,))
    above = np.concatenate([ones, q[..., :-1]], axis=-1)
    return q, above


def _phase_factor_drift(h, f1, slope, lam):
    """Assemble f from the level-1 column f1 and the phase-split slope."""
    pad = np.zeros(h.shape[:-2] + (1,) + h.shape[-1:])
    above = np.concatenate([pad, h[..., :-1, :]], axis=-2)
    f = lam * (above - h) * slope[..., None]
    f[..., 0, :] = 0.0
    f[..., :, 0] = f1
    return f


def arrival_drift_jsq(model: PolicyModel, h: StateLike) -> np.ndarray:
    """Power-of-d arrivals: f_{l,1} = lam (h_{l-1,1}^d - h_{l,1}^d)."""
    h = _as_h_batch(h)
    q, above = _tails(h)
    d = model.d
    f1 = model.lam * (above**d - q**d)
    slope = sum(above**j * q ** (d - 1 - j) for j in range(d))
    return _phase_factor_drift(h, f1, slope, model.lam)


def arrival_drift_pullpush(model: PolicyModel, h: StateLike) -> np.ndarray:
    """Uniform local arrivals plus idle-probe transfers at rate r.

    A transfer moves one waiting job from a length >= 2 server (which
    keeps its phase) to an idle server (which starts the job in phase 1),
    so the transfer terms cancel in the total arrival mass.
    """
    h = _as_h_batch(h)
    q, above = _tails(h)
    f1 = model.lam * (above - q)
    pull = model.r * (1.0 - q[..., 0])
    below = np.concatenate([q[..., 1:], np.zeros(q.shape[:-1] + (1,))], axis=-1)
    if h.shape[-2] > 1:
        f1[..., 0] += pull * q[..., 1]
    f1[..., 1:] -= pull[..., None] * (q[..., 1:] - below[..., 1:])
    f = _phase_factor_drift(h, f1, np.ones_like(q), model.lam)
    if h.shape[-1] > 1:
        pad = np.zeros(h.shape[:-2] + (1,) + h.shape[-1:])
        h_below = np.concatenate([h[..., 1:, :], pad], axis=-2)
        loss = pull[..., None, None] * (h[..., 1:, 1:] - h_below[..., 1:, 1:])
        f[..., 1:, 1:] -= loss
    return f


def arrival_drift_batchjsq(model: PolicyModel, h: StateLike) -> np.ndarray:
    """Batch-sampling arrivals via overflow-polynomial differences."""
    h = _as_h_batch(h)
    q, above = _tails(h)
    K, d = model.K, model.d
    f1 = model.lam * (_batch_overflow(above, K, d) - _batch_overflow(q, K, d))
    slope = _batch_overflow_slope(q, above, K, d)
    return _phase_factor_drift(h, f1, slope, model.lam)


_ARRIVALS = {
    "jsq": arrival_drift_jsq,
    "pullpush": arrival_drift_pullpush,
    "batchjsq": arrival_drift_batchjsq,
}


def drift(model: PolicyModel, h: StateLike) -> np.ndarray:
    """Full right-hand side: policy arrivals plus service drift."""
    h = _as_h_batch(h)
    return _ARRIVALS[model.kind](model, h) + service_drift(model.service, h)


# ---------------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: times (strictly increasing) and state stack.

    ``states[k]`` is the state at ``times[k]``; with batched initial
    conditions the state axes follow the time axis.
    """

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def step_bound(model: PolicyModel) -> float:
    """Largest admissible RK4 step for this model's event-rate scale."""
    return 0.1 / model.rate_bound


def _rk4(model, h, dt, steps):
    sixth = dt / 6.0
    half = dt / 2.0
    for _ in range(steps):
        k1 = drift(model, h)
        k2 = drift(model, h + half * k1)
        k3 = drift(model, h + half * k2)
        k4 = drift(model, h + dt * k3)
        h = h + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        low = float(h.min())
        if low < -1e-12:
            raise IntegrationError(
                f"state went negative ({low:.3e}) during a step; reduce dt"
            )
        h = np.clip(h, 0.0, 1.0)
    return h


def integrate(
    model: PolicyModel,
    h0: StateLike,
    T: float,
    dt: Optional[float] = None,
    samples: int = 50,
) -> Trajectory:
    """Integrate the mean-field ODE with fixed-step RK4.

    Samples are emitted at ``samples`` + 1 evenly spaced times including
    both endpoints; each segment is cut into whole steps no larger than
    ``dt``.  Every emitted state is checked against the state-space
    inequalities at tolerance 1e-8; a violation aborts (the usual cause
    is a step size above the event-rate bound).  ``h0`` may carry leading
    batch axes to integrate many trajectories in lockstep.
    """
    h = np.array(_as_h_batch(h0), dtype=float, copy=True)
    if T < 0:
        raise ValueError(f"horizon must be nonnegative, got {T!r}")
    bound = step_bound(model)
    if dt is None:
        dt = bound / 2.0
    elif not 0 < dt <= bound * (1 + 1e-12):
        raise ValueError(f"dt={dt!r} exceeds the stability bound {bound:.6g}")
    _require_valid(h, 0.0)
    if T == 0:
        return Trajectory(np.zeros(1), h[None, ...])
    samples = max(1, int(samples))
    times = np.linspace(0.0, T, samples + 1)
    out = np.empty((samples + 1,) + h.shape)
    out[0] = h
    for k in range(samples):
        span = times[k + 1] - times[k]
        steps = max(1, int(math.ceil(span / dt - 1e-12)))
        h = _rk4(model, h, span / steps, steps)
        _require_valid(h, times[k + 1])
        out[k + 1] = h
    return Trajectory(times, out)


def _require_valid(h, t):
    flat = h.reshape((-1,) + h.shape[-2:])
    for idx in range(flat.shape[0]):
        report = state_space_report(flat[idx], tol=1e-8)
        if not report.ok:
            shown = ", ".join(report.violations[:5])
            raise IntegrationError(
                f"state left the valid polytope at t={t:.6g}: {shown}"
            )


# ---------------------------------------------------------------------------
# fixed points


@dataclass(frozen=True)
class FixedPointResult:
    pi: MeanFieldState
    residual: float
    newton_steps: int
    history: tuple

    @property
    def B(self) -> int:
        return self.pi.B


_AUTO_BUFFERS = (16, 32, 64, 128, 256, 512)


def fixed_point(
    model: PolicyModel,
    drift_tol: float = PRE_NEWTON_DRIFT,
    residual_tol: float = FIXED_POINT_RESIDUAL,
    t_max: float = 3000.0,
    newton_max: int = 40,
) -> FixedPointResult:
    """Locate the fixed point: integrate from empty, then damped Newton.

    With ``B=None`` the buffer doubles from 16 until the fixed point's
    top-level tail mass drops below 1e-10, emulating an infinite buffer.
    Raises FixedPointError (with residual history) on non-convergence,
    which in practice flags loads at the edge of stability.
    """
    if model.B is None:
        for B in _AUTO_BUFFERS:
            result = fixed_point(
                model.with_buffer(B), drift_tol, residual_tol, t_max, newton_max
            )
            if result.pi.h[-1, 0] < TAIL_MASS_TOL:
                return result
        raise FixedPointError(
            f"tail mass still above {TAIL_MASS_TOL} at B={_AUTO_BUFFERS[-1]}"
        )

    B, n = model.B, model.n
    h = zero_state(B, n).h
    dt = step_bound(model) / 2.0
    chunk = 25.0
    steps = int(math.ceil(chunk / dt))
    elapsed = 0.0
    sup = float(np.max(np.abs(drift(model, h))))
    while sup > drift_tol and elapsed < t_max:
        h = _rk4(model, h, chunk / steps, steps)
        elapsed += chunk
        sup = float(np.max(np.abs(drift(model, h))))

    history = [sup]
    fval = drift(model, h)
    size = B * n
    eye = np.eye(size).reshape(size, B, n)
    newton_steps = 0
    eps = 1e-7
    while float(np.max(np.abs(fval))) > residual_tol:
        if newton_steps >= newton_max:
            raise FixedPointError(
                f"no convergence in {newton_max} Newton steps "
                f"(residual {history[-1]:.3e}); model may be near instability",
                history,
            )
        jac = (drift(model, h[None] + eps * eye) - fval).reshape(size, size) / eps
        try:
            delta = np.linalg.solve(jac.T, -fval.ravel()).reshape(B, n)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(jac.T, -fval.ravel(), rcond=None)[0].reshape(B, n)
        base = float(np.max(np.abs(fval)))
        alpha = 1.0
        while True:
            trial = np.clip(h + alpha * delta, 0.0, 1.0)
            trial_f = drift(model, trial)
            trial_sup = float(np.max(np.abs(trial_f)))
            if trial_sup < base or trial_sup <= residual_tol:
                h, fval = trial, trial_f
                break
            alpha /= 2.0
            if alpha < 1e-6:
                raise FixedPointError(
                    f"Newton damping stalled at residual {base:.3e}", history
                )
        newton_steps += 1
        history.append(trial_sup)

    report = state_space_report(h, tol=1e-8)
    if not report.ok:
        raise FixedPointError(
            f"solver state violates {report.violations[0]}", history
        )
    residual = float(np.max(np.abs(fval)))
    return FixedPointResult(MeanFieldState(h), residual, newton_steps, tuple(history))


@dataclass(frozen=True)
class StructureCheck:
    """Residuals of the fixed-point phase structure.

    ``phase_residual`` measures the level-1 identity pi_{1,i} =
    pi_{1,1} * sum_{j>=i} beta_j with beta_j = (prod_{s<j} p_s)/mu_j;
    ``generator_residual`` certifies independently that beta spans the
    null space of the restart generator S + (-S 1) alpha.
    """

    phase_residual: float
    generator_residual: float

    @property
    def residual(self) -> float:
        return max(self.phase_residual, self.generator_residual)


def fixed_point_structure_residual(
    pi: StateLike, service: CoxianDistribution
) -> StructureCheck:
    """Check the level-1 phase marginal a fixed point must carry."""
    h = _as_h(pi)
    rates = np.asarray(service.rates, dtype=float)
    conts = np.asarray(service.continuations, dtype=float)
    beta = np.concatenate([[1.0], np.cumprod(conts[:-1])]) / rates
    tails = np.flip(np.cumsum(np.flip(beta)))
    phase_residual = float(np.max(np.abs(h[0, :] - h[0, 0] * tails)))

    gen = service.generator()
    restart = gen.copy()
    restart[:, 0] -= gen @ np.ones(service.n)
    generator_residual = float(np.max(np.abs(beta @ restart)))
    return StructureCheck(phase_residual, generator_residual)


# ---------------------------------------------------------------------------
# diagnostics: Lyapunov functionals, order preservation, attraction


def lyapunov_values(h: StateLike, service: CoxianDistribution, L: int = 1):
    """The two decreasing functionals: tail mass above L and a phase term.

    Returns (sum_{l>=L} h_{l,1}, sum_{i>=2} h_{1,i} (R_i - R_{i-1})) with
    R the expected remaining service times per phase.  Both are
    nonnegative whenever completion rates are nonincreasing.
    """
    arr = _as_h(h)
    if not 1 <= L <= arr.shape[0]:
        raise ValueError(f"need 1 <= L <= B, got L={L}")
    rem = remaining_service_times(service)
    z1 = float(arr[L - 1 :, 0].sum())
    z2 = float(np.dot(arr[0, 1:], np.diff(rem)))
    return z1, z2


def lyapunov_rates(model: PolicyModel, h: StateLike, L: int = 1):
    """Closed-form time derivatives of the two Lyapunov functionals."""
    arr = _as_h(h)
    if not 1 <= L <= arr.shape[0]:
        raise ValueError(f"need 1 <= L <= B, got L={L}")
    nu = model.service.completion_rates
    pad = np.zeros((arr.shape[0], 1))
    d_phase = arr - np.concatenate([arr[:, 1:], pad], axis=1)
    f = _ARRIVALS[model.kind](model, arr)
    dz1 = float(f[L - 1 :, 0].sum() - np.dot(d_phase[L - 1, :], nu))
    dz2 = float(-arr[0, 0] + np.dot(d_phase[0, :], nu))
    return dz1, dz2


@dataclass(frozen=True)
class OrderPreservationReport:
    ok: bool
    times: np.ndarray
    violation_time: Optional[float]
    violation_pair: Optional[int]
    min_margin: float


def monotonicity_report(
    model: PolicyModel,
    lo: StateLike,
    hi: StateLike,
    T: float,
    dt: Optional[float] = None,
    samples: int = 50,
    tol: float = 1e-8,
) -> OrderPreservationReport:
    """Integrate an ordered pair (or stacks of pairs) and track the order.

    ``lo`` and ``hi`` may carry leading batch axes (pairs are matched
    elementwise).  Inputs must already be ordered at t=0; the report
    gives the first sampled violation time and the worst margin seen
    (most negative componentwise or sequence-functional gap).
    """
    a = _as_h_batch(lo)
    b = _as_h_batch(hi)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    ok0, _, dp0 = _leq_arrays(a, b, tol)
    if not np.all(ok0):
        raise ValueError("initial states are not ordered")
    stacked = np.stack([a, b], axis=0)
    traj = integrate(model, stacked, T, dt=dt, samples=samples)
    lo_t, hi_t = traj.states[:, 0], traj.states[:, 1]
    ok, _, dp_min = _leq_arrays(lo_t, hi_t, tol)
    comp_min = (hi_t - lo_t).min(axis=(-2, -1))
    margin = float(min(comp_min.min(), dp_min.min()))
    if np.all(ok):
        return OrderPreservationReport(True, traj.times, None, None, margin)
    flat = ok.reshape(ok.shape[0], -1)
    bad_t, bad_pair = np.argwhere(~flat)[0]
    return OrderPreservationReport(
        False, traj.times, float(traj.times[bad_t]), int(bad_pair), margin
    )


@dataclass(frozen=True)
class AttractionReport:
    distances: np.ndarray
    max_distance: float
    pairwise_max: float
    fixed_point: FixedPointResult
    ok: bool


def attraction_report(
    model: PolicyModel,
    starts: np.ndarray,
    T: float,
    tol: float = 1e-6,
    dt: Optional[float] = None,
) -> AttractionReport:
    """Integrate many starts to time T and measure convergence to pi.

    ``starts`` has shape (M, B, n).  Reports per-start sup distances to
    the solver fixed point and the largest pairwise endpoint distance
    (small values evidence a unique attractor).
    """
    starts = np.asarray(starts, dtype=float)
    if starts.ndim == 2:
        starts = starts[None]
    fp = fixed_point(model if model.B is not None else model.with_buffer(starts.shape[-2]))
    traj = integrate(model, starts, T, dt=dt, samples=1)
    ends = traj.final
    dists = np.max(np.abs(ends - fp.pi.h), axis=(-2, -1))
    flat = ends.reshape(ends.shape[0], -1)
    pairwise = np.max(np.abs(flat[:, None, :] - flat[None, :, :]), axis=-1)
    return AttractionReport(
        distances=dists,
        max_distance=float(dists.max()),
        pairwise_max=float(pairwise.max()),
        fixed_point=fp,
        ok=bool(np.all(dists <= tol)),
    )
