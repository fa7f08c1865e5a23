import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlenv import linalg as la
from qlenv.classical import (
    ClassicalForm,
    classify_d1,
    commutation_residual,
    gram_vectors,
    poisson_condition,
    random_classical_coefficients,
    rebuild,
    to_classical_form,
    wiener_condition,
)
from qlenv.exceptions import NotClassical
from qlenv.fixtures import LOWERING, SIGMA_X, SIGMA_Z, brownian_d1, mixed_pair, poisson_d1, spontaneous_emission
from qlenv.model import QleCoefficients, apply_noise_change, random_coefficients, validate, derive_full

I2 = np.eye(2)


def test_gram_vectors_examples():
    U, V = gram_vectors([SIGMA_X])
    assert np.array_equal(U, V)
    U, V = gram_vectors([LOWERING])
    assert U[0, 0 * 2 + 1] == 1 and np.count_nonzero(U) == 1
    assert V[0, 1 * 2 + 0] == 1 and np.count_nonzero(V) == 1
    U, V = gram_vectors([1j * SIGMA_X])
    assert np.allclose(V, -U)


@pytest.mark.parametrize("L, expected", [(SIGMA_X, 1.0), (1j * SIGMA_X, -1.0), (LOWERING, None)])
def test_wiener_condition_d1(L, expected):
    W = wiener_condition([L])
    if expected is None:
        assert W is None
    else:
        assert np.allclose(W, [[expected]])


def test_wiener_condition_random_classical(rng):
    for _ in range(50):
        m = int(rng.integers(1, 4))
        As = [la.random_matrix(3, rng) for _ in range(m)]
        As = [(A - A.conj().T) / 2 for A in As]
        Q = la.haar_unitary(m, rng)
        Ls = [sum(Q[i, j] * As[j] for j in range(m)) for i in range(m)]
        W = wiener_condition(Ls)
        assert W is not None
        U, V = gram_vectors(Ls)
        assert la.fro(V - W @ U) < 1e-8 and la.fro(W - W.T) < 1e-9


def test_wiener_condition_rank_deficient(rng):
    A = la.random_matrix(2, rng)
    A = A - A.conj().T
    W = wiener_condition([A, A, np.zeros((2, 2))])
    assert W is not None
    assert la.is_unitary(W, 1e-9) and la.fro(W - W.T) < 1e-9


@pytest.mark.parametrize(
    "L, S, expected",
    [(2 * (SIGMA_X - I2), SIGMA_X, 2.0), (np.zeros((2, 2)), SIGMA_X, 0.0), (SIGMA_Z, SIGMA_X, None)],
)
def test_poisson_condition(L, S, expected):
    lam = poisson_condition(L, S)
    if expected is None:
        assert lam is None
    else:
        assert lam == pytest.approx(expected)


def test_mixed_pair_not_classical():
    with pytest.raises(NotClassical) as exc:
        to_classical_form(mixed_pair())
    assert exc.value.reason == "WienerGramMismatch"
    assert list(exc.value.indices) == [0]


def test_brownian_d1_classical_form():
    c = QleCoefficients(la.random_hermitian(2, np.random.default_rng(1)), (1j * SIGMA_X,), I2)
    cf = to_classical_form(c)
    assert len(cf.brownian) == 1 and not cf.poisson
    A = cf.brownian[0].A
    assert la.fro(A + A.conj().T) < 1e-12
    validate(derive_full(rebuild(cf, c.H)))


def test_poisson_d1_classical_form():
    cf = to_classical_form(poisson_d1(1.5))
    (p,) = cf.poisson
    assert p.rho == pytest.approx(1.5) and p.intensity == pytest.approx(2.25) and p.jump == pytest.approx(1 / 1.5)
    assert np.allclose(p.S, SIGMA_X)


def test_gauge_only_direction():
    c = QleCoefficients(np.zeros((2, 2)), (np.zeros((2, 2)),), SIGMA_X)
    cf = to_classical_form(c)
    assert len(cf.gauge_only) == 1 and not cf.poisson and not cf.brownian


def test_poisson_ray_mismatch():
    c = QleCoefficients(np.zeros((2, 2)), (SIGMA_Z,), SIGMA_X)
    with pytest.raises(NotClassical) as exc:
        to_classical_form(c)
    assert exc.value.reason == "PoissonRayMismatch"


def test_gauge_not_commutative():
    Z2 = np.zeros((2, 2))
    S = la.from_noise_blocks(np.array([[Z2, SIGMA_X], [1j * np.array([[0, -1], [1, 0]]), Z2]]))
    c = QleCoefficients(np.zeros((2, 2)), (Z2, Z2), S)
    with pytest.raises(NotClassical) as exc:
        to_classical_form(c)
    assert exc.value.reason == "GaugeNotCommutative"


def test_d2_from_classical_data(rng):
    c, rhos = random_classical_coefficients(2, 1, 1, rng)
    cf = to_classical_form(c)
    assert [p.rho for p in cf.poisson] == pytest.approx(rhos["rho"])
    assert rebuild(cf, c.H).distance(apply_noise_change(c, cf.noise_change)) <= 1e-9


def test_soundness_round_trip(rng):
    for _ in range(300):
        n = int(rng.integers(1, 4))
        nw, npn, ng = (int(x) for x in rng.integers(0, 3, 3))
        if nw + npn + ng == 0:
            nw = 1
        c, rhos = random_classical_coefficients(n, nw, npn, rng, n_gauge=ng)
        cf = to_classical_form(c)
        assert sorted(p.rho for p in cf.poisson) == pytest.approx(sorted(rhos["rho"]))
        back = apply_noise_change(rebuild(cf, c.H), cf.noise_change.conj().T)
        assert back.distance(c) <= 1e-9
        assert la.fro(cf.A0 - derive_full(apply_noise_change(c, cf.noise_change)).L00) < 1e-9


def test_commutation_residual_oracle(rng):
    for _ in range(50):
        c, _ = random_classical_coefficients(2, int(rng.integers(0, 3)), 1, rng)
        assert commutation_residual(c) < 1e-10
        assert commutation_residual(random_coefficients(2, 2, rng)) > 1e-3
    assert commutation_residual(spontaneous_emission()) > 1


@pytest.mark.parametrize(
    "L, S, kind, theta, lam",
    [
        (LOWERING, I2, "Quantum", None, None),
        (1j * SIGMA_X, I2, "Brownian", np.pi, None),
        (SIGMA_X, I2, "Brownian", 0.0, None),
        (SIGMA_X - I2, SIGMA_X, "Poisson", None, 1.0),
    ],
)
def test_classify_d1_examples(L, S, kind, theta, lam):
    v = classify_d1(np.zeros((2, 2)), L, S)
    assert v.kind == kind
    if theta is not None:
        assert v.theta == pytest.approx(theta)
    if lam is not None:
        assert v.lam == pytest.approx(lam)


def _random_d1(rng):
    n = int(rng.integers(1, 4))
    kind = rng.integers(0, 5)
    H = la.random_hermitian(n, rng)
    if kind == 0:
        return H, la.random_matrix(n, rng), la.haar_unitary(n, rng) if rng.random() < 0.5 else np.eye(n)
    if kind == 1:
        A = la.random_hermitian(n, rng)
        return H, np.exp(1j * rng.uniform(-np.pi, np.pi)) * A, np.eye(n)
    if kind == 2:
        S = la.haar_unitary(n, rng)
        return H, complex(rng.normal(), rng.normal()) * (S - np.eye(n)), S
    if kind == 3:
        return H, np.zeros((n, n)), la.haar_unitary(n, rng)
    A = la.random_hermitian(n, rng)
    return H, A + 1e-4 * la.random_matrix(n, rng), np.eye(n)


def test_d1_dichotomy_matches_general_classifier(rng):
    for _ in range(1000):
        H, L, S = _random_d1(rng)
        v = classify_d1(H, L, S)
        try:
            to_classical_form(QleCoefficients(H, (L,), S))
            ok = True
        except NotClassical:
            ok = False
        assert (v.kind != "Quantum") == ok


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_constructed_brownian_and_poisson_d1(seed, n):
    rng = np.random.default_rng(seed)
    th = rng.uniform(-np.pi, np.pi)
    A = la.random_hermitian(n, rng)
    L = np.exp(-0.5j * th) * A  # L^* = e^{i th} L
    assert classify_d1(np.zeros((n, n)), L, np.eye(n)).kind == "Brownian"
    S = la.haar_unitary(n, rng)
    lam = complex(rng.normal(), rng.normal())
    v = classify_d1(np.zeros((n, n)), lam * (S - np.eye(n)), S)
    assert v.kind == "Poisson" and v.lam == pytest.approx(lam, rel=1e-6)


def test_rebuild_examples():
    H = np.diag([1.0, -1.0])
    c = rebuild(ClassicalForm(np.zeros((2, 2)), [], [], [], np.zeros((0, 0))), H)
    assert np.allclose(c.H, H) and np.allclose(c.L0[0], 0) and np.allclose(c.S, np.eye(2))
    cf = to_classical_form(brownian_d1())
    assert np.allclose(rebuild(cf, np.zeros((2, 2))).S, I2)
    cf = to_classical_form(poisson_d1(2.0))
    c = rebuild(cf, np.zeros((2, 2)))
    assert np.allclose(c.L0[0], 2 * (SIGMA_X - I2)) and np.allclose(c.S, SIGMA_X)
