import numpy as np
import pytest

from qlenv import linalg as la
from qlenv.classical import ClassicalForm, to_classical_form
from qlenv.fixtures import SIGMA_X, SIGMA_Z, brownian_d1, poisson_d1
from qlenv.lindblad import generator
from qlenv.simulate import (
    SimConfig,
    compare_with_lindblad,
    estimate_semigroup,
    evolve,
    simulate_trajectory,
    step_data,
)

Z = np.zeros((2, 2))
E1 = np.exp(-1.0)


@pytest.fixture(scope="module")
def brownian_cf():
    return to_classical_form(brownian_d1())


@pytest.fixture(scope="module")
def poisson_cf():
    return to_classical_form(poisson_d1(1.0))


@pytest.mark.parametrize(
    "kw", [dict(dt=0), dict(dt=1.0, t_final=0.5), dict(n_traj=0), dict(t_final=-1)]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_no_noise_stays_identity():
    cf = ClassicalForm(Z, [], [], [], np.eye(0))
    U = simulate_trajectory(cf, Z, SimConfig(1e-2, 1.0, 1, 0))
    assert np.array_equal(U, np.eye(2))


def test_forced_single_jump_is_exact(poisson_cf):
    data = step_data(poisson_cf, Z)
    assert np.allclose(data.drift, 0)
    U = evolve(data, 1e-3, np.zeros((1, 0)), np.array([[1]]))
    assert np.array_equal(U, SIGMA_X.astype(complex))
    U = evolve(data, 1e-3, np.zeros((3, 0)), np.array([[0], [2], [0]]))
    assert np.allclose(U, np.eye(2))


def test_strong_error_on_fixed_paths(brownian_cf):
    """Pathwise error of the Euler factor vs exp(i sigma_x B_t); ratio for a 10x step change."""
    data = step_data(brownian_cf, Z)
    rng = np.random.default_rng(11)
    T, fine = 0.5, 1e-3
    nf = int(round(T / fine))
    errs = {1e-2: [], 1e-3: []}
    for _ in range(200):
        dB = rng.standard_normal(nf) * np.sqrt(fine)
        b = dB.sum()
        exact = np.cos(b) * np.eye(2) + 1j * np.sin(b) * SIGMA_X
        for dt in errs:
            agg = dB.reshape(-1, int(round(dt / fine))).sum(axis=1)
            U = evolve(data, dt, (agg / np.sqrt(dt))[:, None], np.zeros((agg.size, 0)))
            errs[dt].append(la.fro(U - exact))
    rms = {dt: np.sqrt(np.mean(np.square(e))) for dt, e in errs.items()}
    ratio = rms[1e-2] / rms[1e-3]
    assert np.sqrt(10) * 0.7 <= ratio <= np.sqrt(10) * 1.3


def test_determinism_and_worker_independence(brownian_cf):
    cfg = SimConfig(1e-2, 0.5, 5000, 42)
    a = estimate_semigroup(brownian_cf, Z, SIGMA_Z, cfg)
    b = estimate_semigroup(brownian_cf, Z, SIGMA_Z, cfg, workers=2)
    c = estimate_semigroup(brownian_cf, Z, SIGMA_Z, cfg)
    assert np.array_equal(a.mean, b.mean) and a.stderr == b.stderr
    assert np.array_equal(a.mean, c.mean)
    U1 = simulate_trajectory(brownian_cf, Z, cfg, 17)
    assert np.array_equal(U1, simulate_trajectory(brownian_cf, Z, cfg, 17))
    assert not np.array_equal(U1, simulate_trajectory(brownian_cf, Z, cfg, 18))


def test_short_time_limit(brownian_cf):
    dt = 1e-3
    est = estimate_semigroup(brownian_cf, Z, SIGMA_Z, SimConfig(dt, dt, 2000, 1))
    assert np.abs(est.mean - SIGMA_Z).max() <= 10 * dt


def test_brownian_estimate(brownian_cf):
    est = estimate_semigroup(brownian_cf, Z, SIGMA_Z, SimConfig(1e-3, 0.5, 20000, 7))
    assert np.abs(est.mean - E1 * SIGMA_Z).max() <= 3 * est.stderr + 5e-3


def test_poisson_estimate_and_jump_count(poisson_cf):
    N, t = 20000, 0.5
    est = estimate_semigroup(poisson_cf, Z, SIGMA_Z, SimConfig(1e-2, t, N, 3))
    assert np.abs(est.mean - E1 * SIGMA_Z).max() <= 3 * est.stderr + 5e-3
    assert abs(est.mean_jumps[0] - t) <= 3 * np.sqrt(t / N)
    assert est.unitarity_defect <= 1e-12


def test_weak_order(brownian_cf):
    """Weak error vs exp(tL) roughly halves with dt on the Brownian benchmark."""
    errs = []
    for dt in (0.1, 0.05):
        est = estimate_semigroup(brownian_cf, Z, SIGMA_Z, SimConfig(dt, 0.5, 400_000, 5))
        errs.append(abs(est.mean[0, 0] - E1))
    assert 2 * 0.7 <= errs[0] / errs[1] <= 2 * 1.3


def test_unitarity_defect(brownian_cf):
    defects = []
    for dt in (1e-2, 2.5e-3):
        est = estimate_semigroup(brownian_cf, Z, SIGMA_Z, SimConfig(dt, 0.5, 4000, 9))
        defects.append(est.unitarity_defect)
    # per-step defects (xi^2 - 1) dt accumulate like a random walk: O(sqrt(dt))
    assert defects[0] / defects[1] == pytest.approx(2, rel=0.3)
    c_measured = defects[0] / np.sqrt(1e-2)
    print(f"unitarity defect ~ {c_measured:.3f} * sqrt(dt)")
    assert c_measured < 5
    est = estimate_semigroup(brownian_cf, Z, SIGMA_Z, SimConfig(1e-2, 0.5, 500, 9, reunitarize=True))
    assert est.unitarity_defect <= 1e-12


def test_compare_zero_noise():
    H = np.diag([1.0, -1.0])
    cf = ClassicalForm(-1j * H, [], [], [], np.eye(0))
    r = compare_with_lindblad(cf, H, SIGMA_X, 0.3, SimConfig(1e-4, 0.3, 1, 0))
    # deterministic Euler on a rotation: only discretization error remains
    assert r["max_abs_error"] < 1e-3 and r["pass"]


def test_compare_negative_control(brownian_cf):
    cfg = SimConfig(1e-2, 0.5, 5000, 2)
    good = compare_with_lindblad(brownian_cf, Z, SIGMA_Z, 0.5, cfg)
    assert good["pass"]
    wrong = generator(Z, [np.sqrt(2) * brownian_cf.brownian[0].A])
    bad = compare_with_lindblad(brownian_cf, Z, SIGMA_Z, 0.5, cfg, reference=wrong)
    assert not bad["pass"]
    # a sign flip of the jump operator leaves the generator unchanged
    flipped = generator(Z, [-brownian_cf.brownian[0].A])
    assert compare_with_lindblad(brownian_cf, Z, SIGMA_Z, 0.5, cfg, reference=flipped)["pass"]
