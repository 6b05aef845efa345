import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gluenn.autodiff import Jet, LayoutError, Tape, finite_diff_check, grad_params
from gluenn.network import ArchSpec, NetworkParams, TrunkSpec, build_network, eval_with_input_derivs, forward_jets

finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_affine_unit_derivatives():
    arch = ArchSpec((), 1, (TrunkSpec("y"),), activation="identity")
    params = NetworkParams(arch, np.array([1.0, 0.0, 2.0, 1.0]))  # head: x -> x, trunk: 2h + 1
    assert eval_with_input_derivs(params, arch, 5.0)["y"] == pytest.approx((11.0, 2.0, 0.0))


def test_tanh_unit_at_origin():
    arch = ArchSpec((), 1, (TrunkSpec("y"),))
    params = NetworkParams(arch, np.array([1.0, 0.0, 1.0, 0.0]))
    assert eval_with_input_derivs(params, arch, 0.0)["y"] == pytest.approx((0.0, 1.0, 0.0), abs=1e-15)


def test_input_derivatives_match_finite_differences():
    arch = ArchSpec((7,), 5, (TrunkSpec("a", (4,)), TrunkSpec("b", (3,))))
    params = build_network(arch, 3)
    x, h = 0.7, 1e-4
    out = eval_with_input_derivs(params, arch, x)
    plus = eval_with_input_derivs(params, arch, x + h)
    minus = eval_with_input_derivs(params, arch, x - h)
    for lab, (v, d1, d2) in out.items():
        fd1 = (plus[lab][0] - minus[lab][0]) / (2 * h)
        fd2 = (plus[lab][0] - 2 * v + minus[lab][0]) / h**2
        assert abs(fd1 - d1) / abs(d1) < 1e-5
        assert abs(fd2 - d2) / abs(d2) < 1e-5


def test_square_gradient():
    tape = Tape()
    th = tape.param(np.array([3.0]))
    assert grad_params((th * th).sum(), np.array([3.0])) == pytest.approx([6.0])


def test_sum_gradient_is_ones():
    p = np.arange(5.0)
    tape = Tape()
    assert np.array_equal(grad_params(tape.param(p).sum(), p), np.ones(5))


def test_layout_mismatch_raises():
    tape = Tape()
    loss = (tape.param(np.ones(3)) ** 2).sum()
    with pytest.raises(LayoutError):
        grad_params(loss, np.ones(4))


def test_loss_with_second_derivatives_matches_finite_differences():
    arch = ArchSpec((5,), 4, (TrunkSpec("c", (3,)),))
    x = np.linspace(-0.8, 0.9, 7)

    def taped(theta):
        tape = Tape()
        tape.param(theta)
        c = forward_jets(theta, arch, x, tape)["c"]
        return (c.d2 * c.d2 + c.d1 * c.value).sum()

    p = build_network(arch, 7).flat
    g = grad_params(taped(p), p)
    assert finite_diff_check(lambda q: taped(q), p, h=1e-6, grad=g) < 1e-5


def test_finite_diff_check_trivial():
    assert finite_diff_check(lambda t: t * t, 3.0, h=1e-5) < 1e-8
    assert finite_diff_check(np.exp, 0.0, h=1e-4) < 1e-7


def test_finite_diff_check_rejects_bad_step():
    with pytest.raises(ValueError):
        finite_diff_check(lambda t: t, 1.0, h=0.0)


def test_jet_seed_and_const():
    s, c = Jet.seed(2.0), Jet.const(5.0)
    assert (s.d1, s.d2) == (1.0, 0.0)
    assert (c.d1, c.d2) == (0.0, 0.0)


def _jet_fd(f, x, h=1e-4):
    return (f(x + h) - f(x - h)) / (2 * h), (f(x + h) - 2 * f(x) + f(x - h)) / h**2


PRIMITIVES = {
    "exp": (lambda j: j.exp(), np.exp),
    "log": (lambda j: (j * j + 1.0).log(), lambda x: np.log(x * x + 1.0)),
    "sin": (lambda j: j.sin(), np.sin),
    "cos": (lambda j: j.cos(), np.cos),
    "tanh": (lambda j: j.tanh(), np.tanh),
    "pow": (lambda j: (j * j + 1.0) ** 1.5, lambda x: (x * x + 1.0) ** 1.5),
    "div": (lambda j: 1.0 / (j * j + 2.0), lambda x: 1.0 / (x * x + 2.0)),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
@settings(max_examples=25, deadline=None)
@given(x=finite)
def test_second_order_chain_rule(name, x):
    jet_f, plain = PRIMITIVES[name]
    inner = Jet.seed(x) * 0.7 + 0.1
    out = jet_f(inner)
    d1, d2 = _jet_fd(lambda t: plain(0.7 * t + 0.1), x)
    assert out.value == pytest.approx(plain(0.7 * x + 0.1), rel=1e-12, abs=1e-12)
    assert out.d1 == pytest.approx(d1, rel=1e-6, abs=1e-6)
    assert out.d2 == pytest.approx(d2, rel=1e-4, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(u=st.tuples(finite, finite, finite), v=st.tuples(finite, finite, finite))
def test_product_rule_is_truncated_taylor(u, v):
    a, b = Jet(*u), Jet(*v)
    p = a * b
    assert p.d2 == pytest.approx(u[2] * v[0] + 2 * u[1] * v[1] + u[0] * v[2], abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(x=finite, w=st.lists(finite, min_size=3, max_size=3))
def test_forward_input_derivative_equals_reverse_adjoint(x, w):
    """d/dx from the jet equals the reverse-mode gradient wrt the input."""

    def expr(t):
        return ((t * w[0]).tanh() * (t * w[1] + 0.5).exp()) / ((t * w[2]).cos() + 2.0)

    fwd = expr(Jet.seed(x)).d1
    tape = Tape()
    leaf = tape.param(np.array([x]))
    t = leaf[0]
    out = (np.tanh(t * w[0]) * np.exp(t * w[1] + 0.5)) / (np.cos(t * w[2]) + 2.0)
    rev = grad_params(out, np.array([x]))[0]
    assert fwd == pytest.approx(rev, rel=1e-12, abs=1e-12)
