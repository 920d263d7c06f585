"""State space and comparison order.

The DP decision is checked against exhaustive enumeration of level
sequences evaluated through the definitional functional, which uses a
different summation route than the DP.
"""

from itertools import combinations_with_replacement

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import coxfield as cf
from coxfield.dist import SchemaError
from coxfield.order import _as_h


def enum_leq(lo, hi, tol=1e-9):
    """Order decision straight from the definition, no DP."""
    a, b = _as_h(lo), _as_h(hi)
    if float((b - a).min()) < -tol:
        return False
    B, n = a.shape
    for combo in combinations_with_replacement(range(1, B + 1), n):
        seq = tuple(reversed(combo))
        if seq[0] > seq[-1]:
            if cf.level_phase_mass(hi, seq) - cf.level_phase_mass(lo, seq) < -tol:
                return False
    return True


def random_pair(rng, B, n, recipe):
    if recipe == 0:
        lo = cf.random_state(B, n, rng)
        return lo, cf.upper_envelope(lo, cf.random_state(B, n, rng))
    if recipe == 1:
        hi = cf.random_state(B, n, rng)
        lo = _as_h(hi) * rng.uniform(0.0, 1.0)
        if rng.random() < 0.5:
            lo = lo.copy()
            lo[rng.integers(B), rng.integers(n)] += rng.uniform(0.0, 0.3)
            lo = np.minimum(lo, 1.0)
        return lo, hi
    return cf.random_state(B, n, rng), cf.random_state(B, n, rng)


# ---------------------------------------------------------------------------
# state space


def test_random_states_are_valid(rng):
    for _ in range(100):
        B, n = int(rng.integers(1, 9)), int(rng.integers(1, 5))
        state = cf.random_state(B, n, rng)
        report = cf.state_space_report(state)
        assert report.ok, report.violations


def test_violations_are_named():
    bad = np.array([[0.9, 0.95], [0.2, 0.1]])  # phase increase at level 1
    report = cf.state_space_report(bad)
    assert not report.ok
    assert any("phase monotonicity at (1, 1)" in v for v in report.violations)

    bad = np.array([[0.5, 0.2], [0.9, 0.3]])  # level increase
    report = cf.state_space_report(bad)
    assert any("level monotonicity" in v for v in report.violations)

    bad = np.array([[1.4, 0.2], [0.2, 0.1]])
    assert any("range" in v for v in cf.state_space_report(bad).violations)

    # h_{1,1}+h_{2,2} < h_{2,1}+h_{1,2}: negative cell mass
    bad = np.array([[0.9, 0.85], [0.8, 0.5]])
    report = cf.state_space_report(bad)
    assert any("supermodularity at (1, 1)" in v for v in report.violations)


def test_occupancy_round_trip(rng):
    for _ in range(50):
        B, n = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        state = cf.random_state(B, n, rng)
        occ = cf.to_occupancy(state)
        assert occ.x.min() >= 0
        assert occ.idle + occ.x.sum() == pytest.approx(1.0, abs=1e-9)
        back = cf.from_occupancy(occ)
        assert np.abs(back.h - state.h).max() < 1e-12


def test_to_occupancy_rejects_invalid():
    bad = np.array([[0.5, 0.2], [0.9, 0.3]])
    with pytest.raises(ValueError, match="level monotonicity"):
        cf.to_occupancy(bad)


def test_extreme_states():
    assert cf.zero_state(3, 2).h.sum() == 0
    assert cf.full_state(3, 2).h.min() == 1.0
    assert cf.in_state_space(cf.zero_state(3, 2))
    assert cf.in_state_space(cf.full_state(3, 2))


# ---------------------------------------------------------------------------
# sequence functional


def test_level_phase_mass_validation():
    h = cf.full_state(4, 3)
    with pytest.raises(ValueError):
        cf.level_phase_mass(h, (2, 2))  # constant: first must exceed last
    with pytest.raises(ValueError):
        cf.level_phase_mass(h, (2, 3, 1))  # not nonincreasing
    with pytest.raises(ValueError):
        cf.level_phase_mass(h, (5, 1, 1))  # level out of range
    with pytest.raises(ValueError):
        cf.level_phase_mass(h, (3, 1))  # wrong length


def test_level_phase_mass_is_linear(rng):
    h = cf.random_state(5, 3, rng)
    for seq in ((5, 3, 1), (4, 4, 2), (2, 1, 1)):
        g = cf.level_phase_mass(h, seq)
        assert cf.level_phase_mass(h.h * 0.25, seq) == pytest.approx(0.25 * g)
        assert g >= -1e-12  # nonnegative on the state space


def test_level_phase_mass_telescopes_on_flat_columns(rng):
    # states whose columns agree give g = h at the last level of the sequence
    col = np.sort(rng.uniform(0, 1, size=6))[::-1]
    h = np.repeat(col[:, None], 3, axis=1)
    assert cf.level_phase_mass(h, (5, 3, 2)) == pytest.approx(col[1])


# ---------------------------------------------------------------------------
# order decision


def test_dp_matches_enumeration(rng):
    agree = ordered = 0
    for k in range(400):
        B, n = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        lo, hi = random_pair(rng, B, n, k % 3)
        got = cf.leq(lo, hi)
        want = enum_leq(lo, hi)
        agree += got == want
        ordered += want
    assert agree == 400
    assert 0 < ordered < 400


def test_two_state_example_is_incomparable():
    h = np.array([[1.0, 0.5], [0.5, 0.0]])
    ht = np.array([[1.0, 0.5], [0.5, 0.5]])
    assert (ht >= h).all()
    assert not cf.leq(h, ht)
    report = cf.leq_report(h, ht)
    assert report.componentwise_ok and not report.ok
    assert report.witness == (2, 1)
    assert cf.level_phase_mass(h, (2, 1)) == pytest.approx(1.0)
    assert cf.level_phase_mass(ht, (2, 1)) == pytest.approx(0.5)
    assert report.nonconstant_min_gap == pytest.approx(-0.5)


def test_order_properties(rng):
    for _ in range(20):
        B, n = int(rng.integers(2, 6)), int(rng.integers(2, 4))
        a = cf.random_state(B, n, rng)
        assert cf.leq(a, a)
        assert cf.leq(cf.zero_state(B, n), a)
        assert cf.leq(a, cf.full_state(B, n))
        # transitivity along an envelope chain
        b = cf.upper_envelope(a, cf.random_state(B, n, rng))
        c = cf.upper_envelope(b, cf.random_state(B, n, rng))
        assert cf.leq(a, b) and cf.leq(b, c) and cf.leq(a, c)


def test_mutual_order_forces_equality(rng):
    a = cf.random_state(4, 3, rng)
    b = cf.MeanFieldState(a.h + 5e-10)
    assert cf.leq(a, b) and cf.leq(b, a)  # within tolerance both ways
    assert np.abs(a.h - b.h).max() < 1e-9


def test_witness_reproduces_gap(rng):
    found = 0
    for _ in range(200):
        a = cf.random_state(4, 3, rng)
        b = cf.random_state(4, 3, rng)
        report = cf.leq_report(a, b)
        if report.witness is None:
            continue
        found += 1
        seq = report.witness
        assert len(seq) == 3 and seq[0] > seq[-1]
        assert all(x >= y for x, y in zip(seq, seq[1:]))
        gap = cf.level_phase_mass(b, seq) - cf.level_phase_mass(a, seq)
        assert gap == pytest.approx(report.nonconstant_min_gap, abs=1e-12)
    assert found > 20


def test_degenerate_shapes_have_no_sequences(rng):
    # B=1 or n=1 admits no sequence with first level above the last
    a, b = cf.random_state(1, 3, rng), cf.random_state(1, 3, rng)
    assert cf.leq(a, b) == bool((b.h >= a.h - 1e-9).all())
    a, b = cf.random_state(5, 1, rng), cf.random_state(5, 1, rng)
    assert cf.leq(a, b) == bool((b.h >= a.h - 1e-9).all())
    assert cf.leq_report(a, b).witness is None


def test_upper_envelope_properties(rng):
    for _ in range(30):
        B, n = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        a = cf.random_state(B, n, rng)
        b = cf.random_state(B, n, rng)
        env = cf.upper_envelope(a, b)
        assert cf.in_state_space(env)
        assert cf.leq(a, env) and cf.leq(b, env)
        again = cf.upper_envelope(env, env)
        assert np.array_equal(again.h, env.h)


@given(u=st.floats(0.0, 1.0), v=st.floats(0.0, 1.0))
def test_scaling_preserves_order(u, v):
    rng = np.random.default_rng(1234)
    h = cf.random_state(5, 3, rng).h
    lo, hi = sorted((u, v))
    assert cf.leq(h * lo, h * hi)


# ---------------------------------------------------------------------------
# serialization


def test_state_dict_round_trip(rng):
    state = cf.random_state(4, 2, rng)
    again = cf.state_from_dict(cf.state_to_dict(state))
    assert np.array_equal(again.h, state.h)


def test_state_dict_schema_errors():
    with pytest.raises(SchemaError):
        cf.state_from_dict({"B": 2, "n": 2})
    with pytest.raises(SchemaError):
        cf.state_from_dict({"B": 3, "n": 2, "h": [[0.1, 0.0]]})
