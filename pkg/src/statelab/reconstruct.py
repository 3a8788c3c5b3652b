"""Recover the Hamiltonian from its commutators with position and momentum.

The two operator equations i[H, X] = hbar P / m and i[H, P] = hbar F (with
F = -V'(X)) determine H up to an additive constant.  We realize X and P in a
truncated harmonic-oscillator basis, where both are exactly Hermitian and
truncation artifacts are confined to the last few rows.  Because those rows
make the truncated equations inconsistent by O(N) at the corner, the least
squares is taken over the constraint entries in the trusted leading block
only; the recovered H then matches p^2/2m + V(x) on that block to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import PhysicsParams
from .numerics import NumericalBreakdownError


def ladder_lowering(n: int) -> np.ndarray:
    """Lowering operator: a |j> = sqrt(j) |j-1>."""
    a = np.zeros((n, n))
    a[np.arange(n - 1), np.arange(1, n)] = np.sqrt(np.arange(1, n))
    return a


def position_momentum(n: int, phys: PhysicsParams, omega0: float = 1.0):
    """Truncated X and P matrices for a basis oscillator of frequency omega0."""
    a = ladder_lowering(n)
    X = np.sqrt(phys.hbar / (2.0 * phys.mass * omega0)) * (a + a.T)
    P = 1j * np.sqrt(phys.mass * omega0 * phys.hbar / 2.0) * (a.T - a)
    return X.astype(complex), P


def matrix_polynomial(coeffs: Sequence[float], X: np.ndarray) -> np.ndarray:
    """Evaluate sum_k coeffs[k] X^k by Horner's scheme."""
    n = X.shape[0]
    out = np.zeros_like(X)
    for c in reversed(list(coeffs)):
        out = out @ X + c * np.eye(n)
    return out


def polynomial_derivative(coeffs: Sequence[float]) -> list[float]:
    return [k * c for k, c in enumerate(coeffs)][1:] or [0.0]


@dataclass(frozen=True, eq=False)
class OperatorTriple:
    """X, P and the force matrix F = -V'(X) in the truncated oscillator basis.

    The interior block (first n - buffer rows/columns) is where the canonical
    commutator and the reconstruction are trusted; truncation corrupts the
    last rows.
    """

    n: int
    buffer: int
    X: np.ndarray
    P: np.ndarray
    F: np.ndarray
    v_coeffs: tuple

    @property
    def interior(self) -> int:
        return self.n - self.buffer


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    H_solved: np.ndarray
    residual_x: float
    residual_p: float
    gauge_constant: float
    block_error: float
    interior: int


def build_operators(n: int, phys: PhysicsParams, v_coeffs: Sequence[float],
                    buffer: int | None = None, omega0: float = 1.0) -> OperatorTriple:
    """Assemble the operator triple for a polynomial potential (degree <= 4).

    buffer defaults to 4 + 2*deg(V) and must be at least twice the degree so
    the corrupted rows stay outside the trusted block.
    """
    if n < 16:
        raise ValueError("basis dimension must be at least 16")
    coeffs = [float(c) for c in v_coeffs] or [0.0]
    while len(coeffs) > 1 and coeffs[-1] == 0.0:
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg > 4:
        raise ValueError("potential degree must be at most 4")
    if buffer is None:
        buffer = 4 + 2 * deg
    if buffer < 2 * deg:
        raise ValueError(f"buffer {buffer} too small for degree {deg}")
    if buffer >= n:
        raise ValueError("buffer leaves no interior block")
    X, P = position_momentum(n, phys, omega0)
    F = -matrix_polynomial(polynomial_derivative(coeffs), X)
    return OperatorTriple(n=n, buffer=int(buffer), X=X, P=P, F=F, v_coeffs=tuple(coeffs))


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal (Frobenius) basis of n x n Hermitian matrices, n^2 of them."""
    mats = np.zeros((n * n, n, n), dtype=complex)
    m = 0
    for j in range(n):
        mats[m, j, j] = 1.0
        m += 1
    r = 1.0 / np.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            mats[m, j, k] = r
            mats[m, k, j] = r
            m += 1
            mats[m, j, k] = -1j * r
            mats[m, k, j] = 1j * r
            m += 1
    return mats


def reference_hamiltonian(ops: OperatorTriple, phys: PhysicsParams) -> np.ndarray:
    return ops.P @ ops.P / (2.0 * phys.mass) + matrix_polynomial(ops.v_coeffs, ops.X)


def constraint_residuals(ops: OperatorTriple, H: np.ndarray, phys: PhysicsParams):
    """Frobenius norms of the two constraint residuals over the trusted block."""
    r = ops.interior
    res_x = 1j * (H @ ops.X - ops.X @ H) - phys.hbar * ops.P / phys.mass
    res_p = 1j * (H @ ops.P - ops.P @ H) - phys.hbar * ops.F
    return (float(np.linalg.norm(res_x[:r, :r])), float(np.linalg.norm(res_p[:r, :r])))


def solve_hamiltonian(ops: OperatorTriple, phys: PhysicsParams) -> ReconstructionResult:
    """Least-squares solve of the commutator constraints for Hermitian H.

    The residual norms run over constraint entries in the trusted leading
    block (the full-matrix objective is dominated by the O(N) truncation
    inconsistency at the corner and would smear it over the whole solution).
    The solution's null freedom consists of the identity plus projectors onto
    the untrusted top basis states; the additive constant is fixed by
    matching the interior trace of p^2/2m + V(x).
    """
    n, r = ops.n, ops.interior
    basis = hermitian_basis(n)
    C1 = 1j * (np.einsum("bij,jk->bik", basis, ops.X)
               - np.einsum("ij,bjk->bik", ops.X, basis))
    C2 = 1j * (np.einsum("bij,jk->bik", basis, ops.P)
               - np.einsum("ij,bjk->bik", ops.P, basis))
    mask = np.zeros((n, n), dtype=bool)
    mask[:r, :r] = True
    A = np.concatenate([C1[:, mask].real, C1[:, mask].imag,
                        C2[:, mask].real, C2[:, mask].imag], axis=1).T
    R1 = phys.hbar * ops.P / phys.mass
    R2 = phys.hbar * ops.F
    b = np.concatenate([R1[mask].real, R1[mask].imag, R2[mask].real, R2[mask].imag])

    coef, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    # entries beyond the (r+1) block never enter the masked constraints; the
    # only reachable null directions are the identity and top-state projectors
    expected_null = n * n - (r + 1) ** 2 + 2
    if A.shape[1] - rank != expected_null:
        raise NumericalBreakdownError(
            f"singular normal equations: null dimension {A.shape[1] - rank}, "
            f"expected {expected_null} (degenerate X, P pair?)")

    H = np.einsum("b,bij->ij", coef, basis)
    href = reference_hamiltonian(ops, phys)
    shift = (np.trace(href[:r, :r]).real - np.trace(H[:r, :r]).real) / r
    H = H + shift * np.eye(n)
    H = 0.5 * (H + H.conj().T)  # symmetrize round-off

    gauge = float(np.trace(H[:r, :r] - href[:r, :r]).real / r)
    block = float(np.linalg.norm(H[:r, :r] - href[:r, :r])
                  / np.linalg.norm(href[:r, :r]))
    res_x, res_p = constraint_residuals(ops, H, phys)
    return ReconstructionResult(H_solved=H, residual_x=res_x, residual_p=res_p,
                                gauge_constant=gauge, block_error=block, interior=r)


def kernel_of_constraints(ops: OperatorTriple, tol: float = 1e-10) -> int:
    """Dimension of the Hermitian null space of H -> (i[H,X], i[H,P]) on the
    trusted block; the uniqueness statement predicts exactly 1 (multiples of
    the identity).

    Computed in two stages: matrices commuting with X form the functions of X
    (X has simple spectrum), and the surviving [., P] = 0 condition is an SVD
    on that small commutant.
    """
    r = ops.interior
    X = ops.X[:r, :r]
    P = ops.P[:r, :r]
    evals, U = np.linalg.eigh(X)
    if np.min(np.diff(evals)) <= 1e-12 * (evals[-1] - evals[0]):
        raise NumericalBreakdownError("X has a (near-)degenerate spectrum")
    cols = []
    for j in range(r):
        h = np.outer(U[:, j], U[:, j].conj())
        c = h @ P - P @ h
        cols.append(np.concatenate([c.real.ravel(), c.imag.ravel()]))
    s = np.linalg.svd(np.array(cols).T, compute_uv=False)
    return int(np.sum(s < tol * s.max()))


def evolve_expectation(H: np.ndarray, alpha: complex, phys: PhysicsParams,
                       X: np.ndarray, times: np.ndarray) -> np.ndarray:
    """<X>(t) for a truncated coherent state |alpha> evolved by H (via eigh)."""
    n = H.shape[0]
    j = np.arange(n)
    log_coef = -0.5 * abs(alpha) ** 2 + j * np.log(complex(alpha)) - 0.5 * np.array(
        [np.sum(np.log(np.arange(1, jj + 1))) if jj else 0.0 for jj in j])
    c = np.exp(log_coef)
    c = c / np.linalg.norm(c)
    evals, vecs = np.linalg.eigh(H)
    c_e = vecs.conj().T @ c
    out = np.empty(len(times))
    for i, t in enumerate(times):
        ct = vecs @ (np.exp(-1j * evals * t / phys.hbar) * c_e)
        out[i] = (ct.conj() @ (X @ ct)).real
    return out
