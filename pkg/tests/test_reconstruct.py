import numpy as np
import pytest

from statelab import (
    GaussianParams, Grid, OperatorTriple, PhysicsParams, PotentialSpec,
    build_operators, constrained_motion_check, constraint_residuals,
    kernel_of_constraints, propagate, realize, solve_hamiltonian,
    wavepacket_trajectory,
)
from statelab.numerics import NumericalBreakdownError
from statelab.reconstruct import evolve_expectation, reference_hamiltonian


def test_ladder_matrix_elements(phys):
    # textbook entries X[j, j+1] = sqrt((j+1) hbar / (2 m omega0))
    ops = build_operators(32, phys, [0.0], omega0=1.0)
    for j in range(31):
        expected = np.sqrt((j + 1) * phys.hbar / (2 * phys.mass * 1.0))
        assert ops.X[j, j + 1] == pytest.approx(expected, rel=1e-12)
        assert ops.X[j + 1, j] == pytest.approx(expected, rel=1e-12)
    assert np.abs(np.diag(ops.X)).max() == 0.0


def test_operators_hermitian(phys):
    ops = build_operators(32, phys, [0.0, 0.0, 0.5])
    for M in (ops.X, ops.P, ops.F):
        assert np.abs(M - M.conj().T).max() < 1e-12


def test_canonical_commutator_on_leading_block(phys):
    ops = build_operators(32, phys, [0.0])
    comm = ops.X @ ops.P - ops.P @ ops.X
    target = 1j * phys.hbar * np.eye(32)
    assert np.abs((comm - target)[:28, :28]).max() < 1e-10


def test_zero_potential_zero_force(phys):
    ops = build_operators(24, phys, [0.0])
    assert np.abs(ops.F).max() == 0.0


def test_build_operators_validation(phys):
    with pytest.raises(ValueError):
        build_operators(8, phys, [0.0])
    with pytest.raises(ValueError):
        build_operators(32, phys, [0.0] * 5 + [1.0])      # degree 5
    with pytest.raises(ValueError):
        build_operators(32, phys, [0.0, 0.0, 1.0], buffer=1)


@pytest.mark.parametrize("name,coeffs", [
    ("free", [0.0]),
    ("linear", [0.0, 0.7]),
    ("harmonic", [0.0, 0.0, 0.5]),
])
def test_solve_recovers_reference_on_interior(phys, name, coeffs):
    ops = build_operators(32, phys, coeffs)
    res = solve_hamiltonian(ops, phys)
    assert res.block_error < 1e-6
    assert abs(res.gauge_constant) < 1e-8
    assert np.abs(res.H_solved - res.H_solved.conj().T).max() < 1e-10


def test_solve_gauge_invariance(phys, rng):
    ops = build_operators(32, phys, [0.0, 0.0, 0.5])
    res = solve_hamiltonian(ops, phys)
    for _ in range(5):
        c = float(rng.uniform(-10, 10))
        shifted = res.H_solved + c * np.eye(32)
        rx, rp = constraint_residuals(ops, shifted, phys)
        assert rx == pytest.approx(res.residual_x, abs=1e-9)
        assert rp == pytest.approx(res.residual_p, abs=1e-9)


def test_solve_null_test_random_force(phys, rng):
    ops = build_operators(32, phys, [0.0])
    g = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    f_bad = (g + g.conj().T) / 2
    bad = OperatorTriple(n=32, buffer=4, X=ops.X, P=ops.P, F=f_bad, v_coeffs=(0.0,))
    res = solve_hamiltonian(bad, phys)
    assert res.residual_p > 1e-2 * np.linalg.norm(f_bad)


def test_solve_detects_degenerate_pair(phys):
    ops = build_operators(16, phys, [0.0])
    degenerate = OperatorTriple(n=16, buffer=4, X=np.zeros((16, 16), complex),
                                P=np.zeros((16, 16), complex),
                                F=np.zeros((16, 16), complex), v_coeffs=(0.0,))
    with pytest.raises(NumericalBreakdownError):
        solve_hamiltonian(degenerate, phys)


@pytest.mark.parametrize("n", [16, 32, 64])
def test_kernel_of_constraints_dimension(phys, n):
    ops = build_operators(n, phys, [0.0, 0.0, 0.5])
    assert kernel_of_constraints(ops) == 1


def test_identity_always_in_kernel(phys):
    ops = build_operators(32, phys, [0.0])
    eye = np.eye(32)
    assert np.abs(eye @ ops.X - ops.X @ eye).max() == 0.0
    assert np.abs(eye @ ops.P - ops.P @ eye).max() == 0.0


def test_reconstructed_dynamics_matches_propagator(phys):
    # evolve a truncated coherent state with the recovered H; its <x>(t) must
    # track the split-step packet trajectory for the same harmonic potential
    k = 1.0
    omega0 = np.sqrt(k / phys.mass)
    sigma_c = np.sqrt(phys.hbar / (2 * phys.mass * omega0))
    ops = build_operators(40, phys, [0.0, 0.0, 0.5 * k], omega0=omega0)
    res = solve_hamiltonian(ops, phys)

    a0 = 1.0
    alpha = a0 / (2 * sigma_c)      # coherent displacement for p = 0
    times = np.linspace(0.0, 1.0, 9)
    xs_matrix = evolve_expectation(res.H_solved, alpha, phys, ops.X, times)

    g = Grid(512, -16.0, 16.0, True)
    psi = realize(GaussianParams(a0, 0.0, sigma_c), g)
    t, xs_grid, _, _ = wavepacket_trajectory(psi, PotentialSpec.harmonic(k), phys,
                                             1.0, 1e-3, n_records=8)
    xs_interp = np.interp(times, t, xs_grid)
    assert np.max(np.abs(xs_matrix - xs_interp)) < 1e-3


def test_reference_hamiltonian_is_hermitian(phys):
    ops = build_operators(32, phys, [0.1, 0.2, 0.3, 0.0, 0.01])
    href = reference_hamiltonian(ops, phys)
    assert np.abs(href - href.conj().T).max() < 1e-10
