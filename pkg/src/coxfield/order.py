"""State space and comparison order for mean-field queue states.

A state h is a (B, n) array where h[l-1, i-1] is the fraction of servers
with queue length >= l whose job in service sits in phase >= i... phase
exactly >= i is the tail convention used throughout: h_{l,1} is the
fraction with length >= l, and boundary conventions h_{0,1} = 1,
h_{l,n+1} = 0, h_{B+1,i} = 0 apply everywhere.

Valid states form a polytope: entries in [0, 1], nonincreasing along
phases and levels, plus a supermodularity family that makes the implied
per-(length, phase) occupancy nonnegative.  The comparison order used by
the monotonicity results strengthens componentwise ordering with a family
of linear functionals indexed by nonincreasing level sequences; a change
of summation makes each functional separable across phases, so the
minimum over all sequences is a small dynamic program instead of an
exponential enumeration.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

#: default tolerance for state-space membership checks
OMEGA_TOL = 1e-12

#: default tolerance for order checks on integrated trajectories
ORDER_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeanFieldState:
    """Tail-fraction state on B queue levels and n service phases."""

    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float, copy=True)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise ValueError(f"state must be a (B, n) array, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "h", h)

    @property
    def B(self) -> int:
        return self.h.shape[0]

    @property
    def n(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True, eq=False)
class OccupancyState:
    """Fractions of servers per exact (queue length, phase) cell.

    ``idle`` is the fraction with empty queues; ``x[l-1, i-1]`` the
    fraction with length exactly l and phase exactly i.  Entries are
    nonnegative and total exactly one.
    """

    idle: float
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True)
        if x.ndim != 2:
            raise ValueError(f"occupancy must be a (B, n) array, got {x.shape}")
        if self.idle < 0 or np.any(x < 0):
            raise ValueError("occupancy fractions must be nonnegative")
        total = self.idle + float(x.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"occupancy must total 1, got {total!r}")
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class StateSpaceReport:
    ok: bool
    violations: tuple


@dataclass(frozen=True)
class LeqReport:
    """Outcome of an order comparison.

    ``min_gap`` is the minimum of the functional gaps over all
    nonincreasing level sequences including constant ones;
    ``nonconstant_min_gap`` restricts to admissible sequences (first level
    strictly above the last) and ``witness`` is a minimizing admissible
    sequence (1-based levels) when that gap is negative beyond tolerance.
    """

    ok: bool
    componentwise_ok: bool
    min_gap: float
    nonconstant_min_gap: float
    witness: Optional[tuple]


StateLike = Union[MeanFieldState, np.ndarray]


def _as_h(state: StateLike) -> np.ndarray:
    if isinstance(state, MeanFieldState):
        return state.h
    h = np.asarray(state, dtype=float)
    if h.ndim != 2:
        raise ValueError(f"state must be a (B, n) array, got shape {h.shape}")
    return h


def zero_state(B: int, n: int) -> MeanFieldState:
    """All servers idle."""
    return MeanFieldState(np.zeros((B, n)))


def full_state(B: int, n: int) -> MeanFieldState:
    """Every server at full buffer in the last phase (the order maximum)."""
    return MeanFieldState(np.ones((B, n)))


def state_space_report(state: StateLike, tol: float = OMEGA_TOL) -> StateSpaceReport:
    """Check the four inequality families defining valid states.

    Violations are reported as human-readable strings naming the family
    and the 1-based (level, phase) anchor, e.g. "phase monotonicity at
    (1, 1)" when h_{1,2} > h_{1,1}.
    """
    h = _as_h(state)
    B, n = h.shape
    violations = []

    bad = np.argwhere((h < -tol) | (h > 1.0 + tol))
    violations += [f"range at ({l + 1}, {i + 1})" for l, i in bad]

    if n > 1:
        bad = np.argwhere(h[:, 1:] > h[:, :-1] + tol)
        violations += [f"phase monotonicity at ({l + 1}, {i + 1})" for l, i in bad]
    if B > 1:
        bad = np.argwhere(h[1:, :] > h[:-1, :] + tol)
        violations += [f"level monotonicity at ({l + 1}, {i + 1})" for l, i in bad]
    if B > 1 and n > 1:
        gap = (h[:-1, :-1] + h[1:, 1:]) - (h[1:, :-1] + h[:-1, 1:])
        bad = np.argwhere(gap < -tol)
        violations += [f"supermodularity at ({l + 1}, {i + 1})" for l, i in bad]

    return StateSpaceReport(not violations, tuple(violations))


def in_state_space(state: StateLike, tol: float = OMEGA_TOL) -> bool:
    return state_space_report(state, tol).ok


def to_occupancy(state: StateLike, tol: float = OMEGA_TOL) -> OccupancyState:
    """Invert the tail sums into per-cell occupancy fractions.

    Raises
    ------
    ValueError
        If the state violates a defining inequality beyond ``tol``; the
        message lists the violated constraints.
    """
    report = state_space_report(state, tol)
    if not report.ok:
        shown = ", ".join(report.violations[:8])
        raise ValueError(f"state outside the valid polytope: {shown}")
    h = _as_h(state)
    d = h - np.concatenate([h[:, 1:], np.zeros((h.shape[0], 1))], axis=1)
    x = d - np.concatenate([d[1:, :], np.zeros((1, h.shape[1]))], axis=0)
    x = np.maximum(x, 0.0)
    idle = max(1.0 - float(h[0, 0]), 0.0)
    return OccupancyState(idle, x)


def from_occupancy(occ: OccupancyState) -> MeanFieldState:
    """Rebuild tail fractions as double tail-sums of the occupancy.

    The construction yields a valid state by design: tail sums of
    nonnegative cells satisfy every defining inequality.
    """
    t = np.flip(np.cumsum(np.flip(occ.x, axis=0), axis=0), axis=0)
    h = np.flip(np.cumsum(np.flip(t, axis=1), axis=1), axis=1)
    return MeanFieldState(h)


def random_state(B: int, n: int, rng: np.random.Generator) -> MeanFieldState:
    """Random valid state: normalized exponential variates per cell."""
    raw = rng.exponential(size=B * n + 1)
    raw /= raw.sum()
    return from_occupancy(OccupancyState(float(raw[0]), raw[1:].reshape(B, n)))


def level_phase_mass(state: StateLike, levels: Sequence[int]) -> float:
    """Functional g: mass with queue >= l_i and phase exactly i for some i.

    ``levels`` is a 1-based nonincreasing sequence (l_1, ..., l_n) with
    l_1 > l_n.  The value is h_{l_1,1} + sum_{i>=2} (h_{l_i,i} -
    h_{l_{i-1},i}), always within [0, h_{l_n,1}] for valid states.
    """
    h = _as_h(state)
    B, n = h.shape
    seq = [int(l) for l in levels]
    if len(seq) != n:
        raise ValueError(f"need one level per phase ({n}), got {len(seq)}")
    if any(l < 1 or l > B for l in seq):
        raise ValueError(f"levels must lie in 1..{B}, got {seq}")
    if any(a < b for a, b in zip(seq, seq[1:])):
        raise ValueError(f"levels must be nonincreasing, got {seq}")
    if seq[0] <= seq[-1]:
        raise ValueError(f"first level must exceed the last, got {seq}")
    value = h[seq[0] - 1, 0]
    for i in range(1, n):
        value += h[seq[i] - 1, i] - h[seq[i - 1] - 1, i]
    return float(value)


def _phase_diffs(h: np.ndarray) -> np.ndarray:
    """d[..., l, i] = h_{l,i} - h_{l,i+1} with h_{.,n+1} = 0."""
    pad = np.zeros(h.shape[:-1] + (1,))
    return h - np.concatenate([h[..., 1:], pad], axis=-1)


def _suffix_min(a: np.ndarray) -> np.ndarray:
    """b[..., l] = min_{l' >= l} a[..., l']."""
    return np.flip(np.minimum.accumulate(np.flip(a, axis=-1), axis=-1), axis=-1)


def _leq_arrays(h: np.ndarray, ht: np.ndarray, tol: float):
    """Batched order decision on (..., B, n) stacks.

    Returns (ok, componentwise_ok, dp_min) with batch shape (...,).
    dp_min is the sequence-functional gap minimized over all nonincreasing
    sequences; once componentwise ordering holds, constant sequences have
    nonnegative gaps, so including them never flips the decision.
    """
    comp_ok = np.all(ht >= h - tol, axis=(-2, -1))
    n = h.shape[-1]
    if n == 1:
        dp_min = np.full(h.shape[:-2], np.inf)
        return comp_ok, comp_ok, dp_min
    d = _phase_diffs(ht) - _phase_diffs(h)
    m = d[..., :, 0]
    for i in range(1, n):
        m = d[..., :, i] + _suffix_min(m)
    dp_min = m.min(axis=-1)
    return comp_ok & (dp_min >= -tol), comp_ok, dp_min


def leq(h: StateLike, other: StateLike, tol: float = ORDER_TOL) -> bool:
    """Decide h <= other in the strengthened comparison order.

    Requires componentwise ordering and nonnegative gaps of every
    level-sequence functional.  With a single phase the order reduces to
    the componentwise comparison.
    """
    a, b = _as_h(h), _as_h(other)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    ok, _, _ = _leq_arrays(a, b, tol)
    return bool(ok)


def leq_report(h: StateLike, other: StateLike, tol: float = ORDER_TOL) -> LeqReport:
    """Order decision plus diagnostics and a violating sequence if any.

    The witness minimizes the functional gap over admissible sequences
    (nonincreasing, first level strictly above the last); constant
    sequences are tracked separately so the witness is always admissible.
    """
    a, b = _as_h(h), _as_h(other)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    ok, comp_ok, dp_min = _leq_arrays(a, b, tol)
    B, n = a.shape
    if n == 1:
        return LeqReport(bool(ok), bool(comp_ok), float(dp_min), math.inf, None)

    d = _phase_diffs(b) - _phase_diffs(a)
    # two-track DP: E = best prefix that stayed constant, N = best prefix
    # that already dropped a level; only N-prefixes can end admissibly
    e_val = d[:, 0].copy()
    n_val = np.full(B, np.inf)
    origins = []
    for i in range(1, n):
        suf_n_val = np.empty(B)
        suf_n_idx = np.empty(B, dtype=int)
        best, best_idx = np.inf, -1
        for l in range(B - 1, -1, -1):
            if n_val[l] < best:
                best, best_idx = n_val[l], l
            suf_n_val[l], suf_n_idx[l] = best, best_idx
        drop_val = np.full(B, np.inf)
        drop_idx = np.full(B, -1, dtype=int)
        best, best_idx = np.inf, -1
        for l in range(B - 1, -1, -1):
            drop_val[l], drop_idx[l] = best, best_idx
            if e_val[l] < best:
                best, best_idx = e_val[l], l
        take_n = suf_n_val <= drop_val
        stage = np.empty((B, 2), dtype=int)
        stage[:, 0] = np.where(take_n, 1, 0)  # 1: from N, 0: dropped from E
        stage[:, 1] = np.where(take_n, suf_n_idx, drop_idx)
        origins.append(stage)
        n_val = d[:, i] + np.where(take_n, suf_n_val, drop_val)
        e_val = e_val + d[:, i]

    end = int(np.argmin(n_val))
    nonconst_min = float(n_val[end])
    witness = None
    if math.isfinite(nonconst_min):
        seq = [0] * n
        seq[n - 1] = end
        level = end
        for i in range(n - 1, 0, -1):
            came_from_n, pred = origins[i - 1][level]
            if came_from_n:
                seq[i - 1] = pred
                level = pred
            else:
                for j in range(i):
                    seq[j] = pred
                break
        witness_seq = tuple(int(l) + 1 for l in seq)
        if nonconst_min < -tol:
            witness = witness_seq
    return LeqReport(bool(ok), bool(comp_ok), float(dp_min), nonconst_min, witness)


def upper_envelope(h: StateLike, pi: StateLike) -> MeanFieldState:
    """Common upper bound: every phase column equals max(h_{l,1}, pi_{l,1}).

    The result is a valid state above both inputs in the comparison order;
    each sequence functional telescopes to its value at the last level.
    """
    a, b = _as_h(h), _as_h(pi)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    col = np.maximum(a[:, 0], b[:, 0])
    return MeanFieldState(np.repeat(col[:, None], a.shape[1], axis=1))


def state_to_dict(state: StateLike) -> dict:
    """Plain-dict form {"B", "n", "h"} with h as a nested list."""
    h = _as_h(state)
    return {"B": h.shape[0], "n": h.shape[1], "h": h.tolist()}


def state_from_dict(data: dict) -> MeanFieldState:
    """Inverse of :func:`state_to_dict`, with schema validation."""
    from .dist import SchemaError

    if not isinstance(data, dict):
        raise SchemaError(f"state must be a JSON object, got {type(data).__name__}")
    missing = {"B", "n", "h"} - data.keys()
    if missing:
        raise SchemaError(f"state is missing fields {missing}")
    h = np.asarray(data["h"], dtype=float)
    if h.ndim != 2 or h.shape != (int(data["B"]), int(data["n"])):
        raise SchemaError(
            f"state array has shape {h.shape}, expected ({data['B']}, {data['n']})"
        )
    return MeanFieldState(h)
