"""State-affine realizations: resolvent steps, time reversal, and the bridge
back to the continuous bilinear system."""

import math

import numpy as np
import pytest

from fliess.algebra import (
    Alphabet,
    DomainError,
    LinearRepresentation,
    SeriesSpec,
)
from fliess.operators import iterated_sum_trajectory
from fliess.realization import (
    NonFinite,
    PolicyViolation,
    SingularTransition,
    StateAffineSystem,
    backward_step,
    ct_bilinear_simulate,
    forward_step,
    implicit_discretize_step,
    one_step_identity_check,
    simulate_backward,
    simulate_forward,
)
from fliess.signals import DiscreteInput, constant_input, discretize

from conftest import random_pc_input, random_polynomial_series


def geometric_rep() -> LinearRepresentation:
    # scalar system whose forward recursion is z' = z/(1 - uhat_1)
    return LinearRepresentation(
        [np.array([[0.0]]), np.array([[1.0]])],
        np.array([1.0]),
        np.array([1.0]),
    )


def random_uhat(rng, m, L, delta=0.1, scale=0.05) -> DiscreteInput:
    values = np.column_stack(
        [np.full(L, delta), rng.uniform(-scale, scale, size=(L, m))]
    )
    return DiscreteInput(m=m, L=L, delta=delta, values=values)


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def test_forward_step_solves_resolvent():
    A0 = np.array([[0.0, 0.2], [0.0, 0.0]])
    A1 = np.array([[0.1, 0.0], [0.3, -0.1]])
    sys = StateAffineSystem(LinearRepresentation([A0, A1], [1.0, 0.0], [1.0, 1.0]))
    z = np.array([1.0, 2.0])
    u_next = np.array([0.5, 0.25])
    z_next = forward_step(sys, z, u_next)
    B = A0 * 0.5 + A1 * 0.25
    assert np.allclose((np.eye(2) - B) @ z_next, z, atol=1e-14)


def test_backward_step_inverts_forward():
    rng = np.random.default_rng(3)
    mats = [rng.uniform(-0.3, 0.3, (3, 3)) for _ in range(3)]
    sys = StateAffineSystem(
        LinearRepresentation(mats, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
    )
    z = rng.uniform(-1, 1, 3)
    u_next = np.array([0.1, -0.2, 0.15])
    fwd = forward_step(sys, z, u_next)
    assert np.allclose(backward_step(sys, fwd, u_next), z, atol=1e-12)


def test_strict_norm_policy_rejects_large_increments():
    sys = StateAffineSystem(geometric_rep())
    with pytest.raises(PolicyViolation):
        forward_step(sys, np.array([1.0]), np.array([0.0, 1.0]))


def test_solve_with_residual_raises_on_singular():
    sys = StateAffineSystem(geometric_rep(), invertibility_policy="solve_with_residual")
    # I - B is exactly the zero matrix here
    with pytest.raises(SingularTransition):
        forward_step(sys, np.array([1.0]), np.array([0.0, 1.0]))
    # but a merely large increment is fine under this policy
    out = forward_step(sys, np.array([1.0]), np.array([0.0, 0.9]))
    assert out[0] == pytest.approx(10.0)


def test_unknown_policy_rejected():
    with pytest.raises(DomainError):
        StateAffineSystem(geometric_rep(), invertibility_policy="clip")


def test_implicit_discretize_step_matches_forward():
    rep = geometric_rep()
    z = np.array([2.0])
    u_next = np.array([0.1, 0.04])
    expected = forward_step(StateAffineSystem(rep), z, u_next)
    assert np.allclose(implicit_discretize_step(rep, z, u_next), expected)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def test_forward_geometric_product():
    uhat = discretize(constant_input(4.0, 0.5), 50)
    traj = simulate_forward(StateAffineSystem(geometric_rep()), uhat)
    assert len(traj) == 51
    assert traj.outputs[0] == pytest.approx(1.0)
    for N in (1, 10, 50):
        assert traj.outputs[N] == pytest.approx((1 - 0.04) ** (-N), rel=1e-13)
    assert traj.outputs[-1] == pytest.approx(0.96**-50, rel=1e-13)


def test_forward_backward_round_trip(rng):
    mats = [rng.uniform(-0.4, 0.4, (3, 3)) for _ in range(3)]
    sys = StateAffineSystem(
        LinearRepresentation(mats, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
    )
    uhat = random_uhat(rng, m=2, L=12)
    fwd = simulate_forward(sys, uhat)
    back = simulate_backward(sys, uhat, terminal_state=fwd.states[-1])
    assert np.allclose(back.states, fwd.states, atol=1e-11)
    # default terminal data is gamma: running forward from the backward
    # trajectory's start recovers gamma at the end
    back2 = simulate_backward(sys, uhat)
    assert np.allclose(back2.states[-1], sys.rep.gamma)
    refwd = simulate_forward(
        StateAffineSystem(
            LinearRepresentation(mats, back2.states[0], rng.uniform(-1, 1, 3))
        ),
        uhat,
    )
    assert np.allclose(refwd.states[-1], sys.rep.gamma, atol=1e-10)


def test_simulate_forward_partial_horizon():
    uhat = discretize(constant_input(4.0, 0.5), 50)
    traj = simulate_forward(StateAffineSystem(geometric_rep()), uhat, N_f=10)
    assert len(traj) == 11
    with pytest.raises(DomainError):
        simulate_forward(StateAffineSystem(geometric_rep()), uhat, N_f=51)


def test_simulate_checks_alphabet_size():
    uhat = discretize(constant_input([1.0, 2.0], 0.5), 10)  # m = 2
    with pytest.raises(DomainError):
        simulate_forward(StateAffineSystem(geometric_rep()), uhat)


def test_policy_violation_reports_step():
    # increments grow over the horizon; the violation happens mid-run
    L = 10
    values = np.column_stack([np.full(L, 0.1), np.linspace(0.1, 1.2, L)])
    uhat = DiscreteInput(m=1, L=L, delta=0.1, values=values)
    with pytest.raises(PolicyViolation) as exc:
        simulate_forward(StateAffineSystem(geometric_rep()), uhat)
    assert "step" in str(exc.value)


# ---------------------------------------------------------------------------
# triangular realization of a single word
# ---------------------------------------------------------------------------

def test_triangular_word_realization(rng):
    """A chain of integrators realizes one iterated sum per state: state k
    holds the sum over the last k letters of the word."""
    word = (1, 0, 1)          # outermost letter first
    n = len(word) + 1
    mats = [np.zeros((n, n)) for _ in range(2)]
    # state k+1 integrates channel word[len(word)-1-k] against state k
    for k, letter in enumerate(reversed(word)):
        mats[letter][k + 1, k] = 1.0
    gamma = np.zeros(n)
    gamma[0] = 1.0
    lam = np.zeros(n)
    lam[-1] = 1.0
    sys = StateAffineSystem(LinearRepresentation(mats, gamma, lam))
    uhat = random_uhat(rng, m=1, L=9)
    traj = simulate_forward(sys, uhat)
    expected = iterated_sum_trajectory(word, uhat)
    assert np.allclose(traj.outputs, expected, atol=1e-13)
    # intermediate states hold the suffix sums
    assert np.allclose(traj.states[:, 1], iterated_sum_trajectory(word[-1:], uhat), atol=1e-13)
    assert np.allclose(traj.states[:, 2], iterated_sum_trajectory(word[-2:], uhat), atol=1e-13)


# ---------------------------------------------------------------------------
# continuous bilinear bridge
# ---------------------------------------------------------------------------

def test_ct_bilinear_exponential():
    times, outputs = ct_bilinear_simulate(geometric_rep(), constant_input(4.0, 0.5))
    assert times[0] == 0.0 and times[-1] == pytest.approx(0.5)
    assert outputs[0] == pytest.approx(1.0)
    assert outputs[-1] == pytest.approx(math.exp(2.0), rel=1e-10)


def test_ct_bilinear_rejects_explosion():
    rep = LinearRepresentation(
        [np.array([[0.0]]), np.array([[100.0]])],
        np.array([1.0]),
        np.array([1.0]),
    )
    with pytest.raises(NonFinite):
        ct_bilinear_simulate(rep, constant_input(100.0, 10.0), steps=50)


def test_resolvent_converges_to_bilinear_first_order():
    # the implicit step is a first-order integrator: halving Delta halves the
    # endpoint error
    target = math.exp(2.0)
    errors = []
    for L in (50, 100, 200, 400):
        uhat = discretize(constant_input(4.0, 0.5), L)
        out = simulate_forward(StateAffineSystem(geometric_rep()), uhat).outputs[-1]
        errors.append(abs(out - target))
    for e1, e2 in zip(errors, errors[1:]):
        assert e1 / e2 == pytest.approx(2.0, rel=0.15)


# ---------------------------------------------------------------------------
# one-step identity
# ---------------------------------------------------------------------------

def test_one_step_identity_randoms(rng):
    worst = 0.0
    for _ in range(20):
        c = random_polynomial_series(rng, m=2, max_len=3, n_terms=5)
        uhat = discretize(random_pc_input(rng, m=2, T=1.0), 6)
        N = int(rng.integers(0, 6))
        J = int(rng.integers(1, 5))
        worst = max(worst, one_step_identity_check(c, uhat, N, J))
    assert worst < 1e-12


def test_one_step_identity_domain():
    c = random_polynomial_series(np.random.default_rng(0), m=1)
    uhat = discretize(constant_input(1.0, 1.0), 4)
    with pytest.raises(DomainError):
        one_step_identity_check(c, uhat, 4, 2)  # needs N+1 <= L
    with pytest.raises(DomainError):
        one_step_identity_check(c, uhat, 0, -1)
    # J = 0 keeps only the empty word on both sides: exactly zero residual
    assert one_step_identity_check(c, uhat, 0, 0) == 0.0
