import numpy as np
import pytest

from vnsim import build_basis, propagate_lie_euler
from vnsim.circuit import (
    CONTROLLED_ON_1,
    HADAMARD_ON_CONTROL,
    UNIFORM_SUPERPOSITION_ON_0,
    CircuitPlan,
    GateBlock,
    ShotResult,
    apply_block,
    build_plan,
    householder_prep,
    kickback_readout,
    probabilities,
    run_readout,
    run_statevector,
    sample,
)
from vnsim.models import preset

RHO0_SINGLE = np.array([0.5, 0.0, 0.0, -0.5])


def drive_fixture(t):
    return np.array([0.0, 0.8 * np.cos(1.1 * t), -0.3, 0.45])


# counts for the fixed plan below at seed 11 (regression pin)
GOLDEN_COUNTS = [[5968, 1297, 1783, 137], [203, 817, 458, 5721]]


def golden_state(tensor):
    plan = build_plan(RHO0_SINGLE, drive_fixture, 0.05, 3 * 0.05, tensor)
    return run_statevector(plan)


def test_householder_basic_and_pivot():
    e1 = np.zeros(4)
    e1[0] = 1.0
    u = householder_prep(e1)
    assert np.allclose(u[:, 0], e1, atol=0)
    assert np.max(np.abs(u.T @ u - np.eye(4))) <= 1e-11

    rho = np.array([1.0, 0.0, 0.0, -1.0]) / np.sqrt(2.0)
    u = householder_prep(rho)
    assert np.max(np.abs(u[:, 0] - rho)) <= 1e-11
    assert np.max(np.abs(u.T @ u - np.eye(4))) <= 1e-11


def test_householder_random_unit_vectors():
    rng = np.random.default_rng(17)
    for n in (4, 16):
        for _ in range(20):
            v = rng.normal(size=n)
            v /= np.linalg.norm(v)
            u = householder_prep(v)
            assert np.max(np.abs(u[:, 0] - v)) <= 1e-11
            assert np.max(np.abs(u.T @ u - np.eye(n))) <= 1e-11
        # nearly-degenerate direction takes the pivot branch
        v = np.zeros(n)
        v[0] = 1.0
        v[1] = 1e-9
        v /= np.linalg.norm(v)
        u = householder_prep(v)
        assert np.max(np.abs(u[:, 0] - v)) <= 1e-11
        assert np.max(np.abs(u.T @ u - np.eye(n))) <= 1e-11


def test_householder_rejects_bad_input():
    with pytest.raises(ValueError):
        householder_prep(np.zeros(4))
    with pytest.raises(ValueError):
        householder_prep(np.array([0.5, 0.5, 0.0, 0.0]))


def test_gate_block_validation():
    with pytest.raises(ValueError):
        GateBlock(CONTROLLED_ON_1, np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        GateBlock("bogus_kind", np.eye(2))
    with pytest.raises(ValueError):
        GateBlock(HADAMARD_ON_CONTROL, np.eye(2))
    with pytest.raises(ValueError):
        GateBlock(CONTROLLED_ON_1, None)


def test_plan_structure_zero_steps(tensor1):
    plan = build_plan(RHO0_SINGLE, drive_fixture, 0.05, 0.0, tensor1)
    kinds = [b.kind for b in plan.blocks]
    assert kinds == [
        HADAMARD_ON_CONTROL,
        CONTROLLED_ON_1,
        UNIFORM_SUPERPOSITION_ON_0,
        HADAMARD_ON_CONTROL,
    ]
    assert plan.n_qubits == 3
    assert plan.scale == pytest.approx(np.linalg.norm(RHO0_SINGLE))
    est = kickback_readout(probabilities(run_statevector(plan)), plan.scale)
    assert np.max(np.abs(est.physical - RHO0_SINGLE)) < 1e-12


def test_plan_single_generator_drive(tensor1):
    def a_of_t(t):
        return np.array([0.0, 0.0, 0.0, 0.7])

    plan = build_plan(RHO0_SINGLE, a_of_t, 0.01, 0.01, tensor1)
    evolution = [b for b in plan.blocks if b.step is not None]
    assert len(evolution) == 1
    assert evolution[0].k == 4
    assert evolution[0].dalpha == pytest.approx(0.007)


def test_plan_block_count_and_elision(tensor1):
    n_steps = 200
    dt = 0.004
    expected = 4
    for s in range(n_steps):
        a = drive_fixture(s * dt)
        expected += int(np.sum(a[1:] != 0.0))  # identity generator never counts
    plan = build_plan(RHO0_SINGLE, drive_fixture, dt, n_steps * dt, tensor1)
    assert len(plan.blocks) == expected
    # identity drive alone contributes no evolution blocks
    plan = build_plan(
        RHO0_SINGLE, lambda t: np.array([1.0, 0.0, 0.0, 0.0]), dt, 10 * dt, tensor1
    )
    assert len(plan.blocks) == 4


def test_plan_dump_format(tensor1):
    plan = build_plan(RHO0_SINGLE, drive_fixture, 0.05, 0.05, tensor1)
    lines = plan.dump().splitlines()
    assert lines[0] == "hadamard_on_control,,,"
    assert lines[2] == "uniform_superposition_on_0,,,"
    evolution = [l for l in lines if l.endswith(",1")]
    assert len(evolution) == 3
    kinds, ks, dalphas, steps = zip(*(l.split(",") for l in evolution))
    assert set(kinds) == {CONTROLLED_ON_1}
    assert list(ks) == ["4", "3", "2"]


def test_plan_must_start_with_control_hadamard():
    with pytest.raises(ValueError):
        CircuitPlan(3, [GateBlock(CONTROLLED_ON_1, np.eye(4))])


def test_uniform_state_stays_in_control_zero_sector(tensor1):
    u = np.full(4, 0.5)  # normalized uniform coefficient vector
    plan = build_plan(u, drive_fixture, 0.05, 0.0, tensor1)
    state = run_statevector(plan)
    p = probabilities(state)
    assert np.max(p[1]) < 1e-24
    assert np.allclose(p[0], 0.25, atol=1e-12)
    est = kickback_readout(p, plan.scale)
    assert np.allclose(est.coefficients, 0.5, atol=1e-12)


def test_reference_sector_untouched_by_evolution(tensor1):
    plan = build_plan(RHO0_SINGLE, drive_fixture, 0.02, 0.2, tensor1)
    n = plan.n
    state = np.zeros(2 * n, dtype=complex)
    state[0] = 1.0
    uniform = np.full(n, 0.5)
    seen_prep = 0
    for block in plan.blocks[:-1]:
        state = apply_block(state, block)
        seen_prep += 1
        if seen_prep >= 3:
            # after prep, the control-0 register must stay the uniform vector
            assert np.max(np.abs(state[:n] - uniform / np.sqrt(2.0))) < 1e-12
        assert abs(np.linalg.norm(state) - 1.0) < 1e-12


def test_exact_readout_matches_lie_euler(tensor1):
    spec = preset("example1")
    basis = build_basis(1)
    a_of_t = spec.coefficient_fn()
    rho0 = spec.initial_coeffs(basis)
    dt, n_steps, stride = 0.005, 100, 20
    traj = propagate_lie_euler(rho0, a_of_t, dt, n_steps * dt, tensor1, stride=stride)
    r = np.linalg.norm(rho0)
    for idx, n in enumerate(range(0, n_steps + 1, stride)):
        est = run_readout(rho0, a_of_t, dt, n, tensor1)
        assert np.max(np.abs(est.coefficients - traj.states[idx] / r)) <= 1e-9
        assert np.max(np.abs(est.physical - traj.states[idx])) <= 1e-9


def test_probability_difference_identity(tensor1):
    # p0 - p1 recovers normalized coefficients over sqrt(n) at any step count
    spec = preset("example1-alt")
    basis = build_basis(1)
    a_of_t = spec.coefficient_fn()
    rho0 = spec.initial_coeffs(basis)
    traj = propagate_lie_euler(rho0, a_of_t, 0.002, 0.1, tensor1, stride=50)
    plan = build_plan(rho0, a_of_t, 0.002, 0.1, tensor1)
    p = probabilities(run_statevector(plan))
    expected = traj.states[-1] / np.linalg.norm(rho0) / 2.0
    assert np.max(np.abs(p[0] - p[1] - expected)) <= 1e-10


def test_sample_reproducible_and_golden(tensor1):
    state = golden_state(tensor1)
    res = sample(state, 16384, seed=11)
    assert res.counts.tolist() == GOLDEN_COUNTS
    res2 = sample(state, 16384, seed=11)
    assert np.array_equal(res.counts, res2.counts)
    res3 = sample(state, 16384, seed=12)
    assert not np.array_equal(res.counts, res3.counts)
    assert res.counts.sum() == 16384


def test_sample_concentrated_state():
    state = np.zeros(8, dtype=complex)
    state[5] = 1.0
    res = sample(state, 1000, seed=0)
    assert res.counts[1, 1] == 1000
    assert res.counts.sum() == 1000


def test_sample_binomial_bound(tensor1):
    state = golden_state(tensor1)
    p = probabilities(state).ravel()
    shots = 4096
    violations = 0
    checks = 0
    for seed in range(400):
        counts = sample(state, shots, seed=seed).counts.ravel()
        sigma = np.sqrt(p * (1.0 - p) / shots)
        dev = np.abs(counts / shots - p)
        violations += int(np.sum(dev > 4.0 * sigma + 1e-12))
        checks += p.size
    assert violations <= max(3, int(2e-4 * checks))


def test_kickback_exact_values(tensor1):
    spec = preset("example1")
    basis = build_basis(1)
    rho0 = spec.initial_coeffs(basis)
    est = run_readout(rho0, spec.coefficient_fn(), 0.01, 0, tensor1)
    assert np.max(np.abs(est.physical - np.array([0.5, 0.0, 0.0, -0.5]))) < 1e-12
    assert est.stderr is None


def test_kickback_input_validation():
    with pytest.raises(ValueError):
        kickback_readout(np.full((2, 4), 0.25))  # sums to 2
    with pytest.raises(ValueError):
        kickback_readout(np.full(7, 1.0 / 7.0))
    with pytest.raises(ValueError):
        ShotResult(counts=np.ones((2, 4), dtype=int), shots=9)


def test_kickback_shots_within_stderr(tensor1):
    spec = preset("example1")
    basis = build_basis(1)
    a_of_t = spec.coefficient_fn()
    rho0 = spec.initial_coeffs(basis)
    exact = run_readout(rho0, a_of_t, 0.005, 60, tensor1)
    shots_est = run_readout(rho0, a_of_t, 0.005, 60, tensor1, shots=16384, seed=4)
    assert shots_est.stderr is not None
    assert np.all(shots_est.stderr > 0)
    dev = np.abs(shots_est.coefficients - exact.coefficients)
    assert np.all(dev <= 5.0 * shots_est.stderr)
    assert np.max(np.abs(shots_est.physical - shots_est.scale * shots_est.coefficients)) == 0.0


def test_shot_error_shrinks_with_shot_count(tensor2):
    spec = preset("example2")
    basis = build_basis(2)
    a_of_t = spec.coefficient_fn()
    rho0 = spec.initial_coeffs(basis)
    steps = list(range(0, 81, 10))
    errs = {16384: [], 262144: []}
    for shots in errs:
        for idx, n in enumerate(steps):
            exact = run_readout(rho0, a_of_t, 0.02, n, tensor2)
            est = run_readout(rho0, a_of_t, 0.02, n, tensor2, shots=shots, seed=1000 + idx)
            errs[shots].extend(np.abs(est.coefficients - exact.coefficients))
    ratio = np.median(errs[16384]) / np.median(errs[262144])
    # 16x the shots cuts the median error by about 4x
    assert 2.5 <= ratio <= 6.5


def test_run_statevector_norm_guard(tensor1):
    plan = build_plan(RHO0_SINGLE, drive_fixture, 0.05, 0.0, tensor1)
    state = run_statevector(plan)
    assert abs(np.linalg.norm(state) - 1.0) < 1e-12


def test_counts_csv_format(tensor1):
    res = sample(golden_state(tensor1), 16384, seed=11)
    lines = res.to_csv().splitlines()
    assert lines[0] == "control_bit,register_index,count"
    assert len(lines) == 1 + 8
    assert lines[1] == f"0,1,{GOLDEN_COUNTS[0][0]}"
    assert lines[5] == f"1,1,{GOLDEN_COUNTS[1][0]}"
    total = sum(int(line.split(",")[2]) for line in lines[1:])
    assert total == 16384
