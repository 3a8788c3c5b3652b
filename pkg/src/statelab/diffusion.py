"""Monte Carlo engine: Brownian motion of state components and Born statistics.

A state is decomposed over a near-orthogonal lattice of embedded Gaussians;
each walker picks a component with probability given by its squared
coefficient, starts at that component's center, and random-walks for the
observation time.  The stationary arrival statistics reproduce |psi(a)|^2,
the transition density depends only on the Fubini-Study distance, and the
center-of-mass diffusion of an n-cell solid is suppressed as 1/n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import erf

from .numerics import NumericalBreakdownError, RngStream, StateVector, inner_l2, quadrature
from .geometry import KernelSpace, embed_point


@dataclass(frozen=True)
class DiffusionConfig:
    """Walker ensemble configuration; diffusion_sigma is the Brownian
    displacement std over one observation time tau (defaults to the kernel
    width so the time-tau heat kernel matches the packet density)."""

    n_walkers: int
    tau: float = 1.0
    diffusion_sigma: float = 0.5
    stream: RngStream = RngStream(0, 0)

    def __post_init__(self):
        if self.n_walkers < 1:
            raise ValueError("n_walkers must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.diffusion_sigma <= 0:
            raise ValueError("diffusion_sigma must be positive")

    @property
    def diffusion_coefficient(self) -> float:
        return self.diffusion_sigma ** 2 / (2.0 * self.tau)


@dataclass(frozen=True, eq=False)
class ComponentDecomposition:
    """Least-squares coefficients of psi over the Gaussian frame."""

    centers: np.ndarray
    coefficients: np.ndarray
    residual: float
    sum_sq: float                  # sum |C_j|^2 before renormalization
    weights: np.ndarray            # |C_j|^2 renormalized to sum to 1
    max_offdiag_overlap: float
    near_orthogonal: bool
    condition_number: float


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    reference_density: np.ndarray
    l1_error: float
    ks_statistic: float
    component_masses: np.ndarray
    expected_weights: np.ndarray
    n_walkers: int


def decompose_state(psi: StateVector, ks: KernelSpace, spacing: float,
                    centers: Optional[Sequence[float]] = None,
                    overlap_threshold: float = 0.05,
                    cond_limit: float = 1e8) -> ComponentDecomposition:
    """Least-squares decomposition of psi over embedded points on a lattice.

    The near_orthogonal flag is set when all pairwise frame overlaps stay
    below overlap_threshold; only then do the squared coefficients behave as
    probabilities (they are renormalized to sum to one, and the size of that
    correction is reported via sum_sq).
    """
    g = psi.grid
    if centers is None:
        if spacing <= 0:
            raise ValueError("lattice spacing must be positive")
        lo = g.x_min + 5.0 * ks.sigma
        hi = g.x_max - 5.0 * ks.sigma
        centers = np.arange(lo, hi, spacing)
    centers = np.asarray(centers, dtype=float)
    frame = np.column_stack([embed_point(float(b), ks).values for b in centers])
    scale = np.sqrt(g.dx)
    cond = float(np.linalg.cond(frame * scale))
    if cond > cond_limit:
        raise NumericalBreakdownError(
            f"Gaussian frame is ill-conditioned (cond {cond:.3g} > {cond_limit:.3g})")
    coef, *_ = np.linalg.lstsq(frame * scale, psi.values * scale, rcond=None)
    fit = frame @ coef
    residual = float(np.sqrt(quadrature(g, np.abs(fit - psi.values) ** 2).real))
    d = centers[:, None] - centers[None, :]
    overlaps = np.exp(-(d ** 2) / (8.0 * ks.sigma ** 2))
    np.fill_diagonal(overlaps, 0.0)
    max_ovl = float(overlaps.max()) if len(centers) > 1 else 0.0
    sumsq = float(np.sum(np.abs(coef) ** 2))
    weights = np.abs(coef) ** 2 / sumsq
    return ComponentDecomposition(
        centers=centers, coefficients=coef, residual=residual, sum_sq=sumsq,
        weights=weights, max_offdiag_overlap=max_ovl,
        near_orthogonal=max_ovl < overlap_threshold, condition_number=cond)


def brownian_walk(start: float, cfg: DiffusionConfig, n_epochs: int = 1) -> np.ndarray:
    """Final positions of the walker ensemble after n_epochs observation
    times; walker i always consumes row i of the vectorized draw, so results
    are independent of execution order."""
    rng = cfg.stream.generator()
    steps = rng.standard_normal((cfg.n_walkers, n_epochs)) * cfg.diffusion_sigma
    return start + steps.sum(axis=1)


def _bin_reference_masses(psi: StateVector, edges: np.ndarray) -> np.ndarray:
    """Probability mass of |psi|^2 per bin, from the grid cumulative density."""
    g = psi.grid
    dens = psi.density()
    cdf_x = np.concatenate([[g.x_min], g.x + 0.5 * g.dx])
    cdf = np.concatenate([[0.0], np.cumsum(dens) * g.dx])
    at_edges = np.interp(edges, cdf_x, cdf)
    return np.diff(at_edges)


def _mixture_cdf(centers: np.ndarray, weights: np.ndarray, scale: float,
                 xs: np.ndarray) -> np.ndarray:
    """CDF of the component mixture sum_j w_j Normal(b_j, scale^2)."""
    z = (xs[None, :] - centers[:, None]) / (np.sqrt(2.0) * scale)
    return weights @ (0.5 * (1.0 + erf(z)))


def simulate_state_diffusion(psi: StateVector, cfg: DiffusionConfig, ks: KernelSpace,
                             spacing: Optional[float] = None,
                             centers: Optional[Sequence[float]] = None) -> DensityEstimate:
    """Diffuse the components of psi and histogram the arrivals.

    Each walker samples component j with probability w_j, starts at center
    b_j, and takes one Brownian displacement.  The histogram (bins of width
    sigma/4 covering all centers +- 6 sigma) is compared against the
    reference density |psi(a)|^2: l1_error is the total-variation distance
    between the binned probability masses.  ks_statistic is the raw-sample
    Kolmogorov-Smirnov distance against the exact sampling law (the component
    mixture), which the 1% critical value applies to; against |psi|^2 the
    near-orthogonality cross terms alone would exceed KS resolution at 1e5
    walkers.
    """
    if spacing is None:
        spacing = 6.0 * ks.sigma
    dec = decompose_state(psi, ks, spacing, centers=centers)
    if not dec.near_orthogonal:
        raise ValueError(
            f"state decomposition is not near-orthogonal "
            f"(max overlap {dec.max_offdiag_overlap:.3f} >= 0.05)")

    cum = np.cumsum(dec.weights)
    cum[-1] = 1.0
    u = cfg.stream.child(0).generator().random(cfg.n_walkers)
    comp = np.searchsorted(cum, u)
    starts = dec.centers[comp]
    noise = cfg.stream.child(1).generator().standard_normal(cfg.n_walkers)
    finals = starts + cfg.diffusion_sigma * noise

    occupied = dec.centers[dec.weights > 1e-12]
    lo = occupied.min() - 6.0 * ks.sigma
    hi = occupied.max() + 6.0 * ks.sigma
    width = ks.sigma / 4.0
    n_bins = int(np.ceil((hi - lo) / width))
    edges = lo + width * np.arange(n_bins + 1)

    counts, _ = np.histogram(finals, bins=edges)
    n_in = counts.sum()
    density = counts / max(n_in, 1) / width
    ref_mass = _bin_reference_masses(psi, edges)
    est_mass = counts / cfg.n_walkers
    out_mismatch = abs((1.0 - est_mass.sum()) - (1.0 - ref_mass.sum()))
    l1 = 0.5 * (np.abs(est_mass - ref_mass).sum() + out_mismatch)

    xs = np.sort(finals)
    ref_cdf = _mixture_cdf(dec.centers, dec.weights, cfg.diffusion_sigma, xs)
    i = np.arange(1, cfg.n_walkers + 1)
    ks_stat = float(np.max(np.maximum(np.abs(i / cfg.n_walkers - ref_cdf),
                                      np.abs((i - 1) / cfg.n_walkers - ref_cdf))))

    masses = np.bincount(comp, minlength=len(dec.centers)) / cfg.n_walkers
    return DensityEstimate(
        bin_edges=edges, counts=counts, density=density,
        reference_density=ref_mass / width, l1_error=float(l1), ks_statistic=ks_stat,
        component_masses=masses, expected_weights=dec.weights, n_walkers=cfg.n_walkers)


def density_functional(phi: StateVector, psi: StateVector, sigma: float,
                       norm_tol: float = 1e-6) -> float:
    """Transition density |<phi, psi>|^2 / sigma between normalized states.

    Evaluated both directly and as the literal double-quadrature quadratic
    form with kernel conj(psi(x)) psi(y) / sigma; the two routes are
    algebraically identical and must agree to 1e-10, which cross-checks the
    quadrature implementation.
    """
    for s in (phi, psi):
        if abs(s.norm() - 1.0) > norm_tol:
            raise ValueError("density_functional requires normalized states")
    g = phi.grid
    direct = abs(inner_l2(phi, psi)) ** 2 / sigma

    quad_form = 0.0 + 0.0j
    chunk = 256
    pv, fv = psi.values, phi.values
    right = pv * np.conj(fv)
    for i0 in range(0, g.n_points, chunk):
        i1 = min(i0 + chunk, g.n_points)
        block = (np.conj(pv[i0:i1]) * fv[i0:i1])[:, None] * right[None, :]
        quad_form += block.sum()
    quad_form = quad_form.real * g.dx ** 2 / sigma
    if abs(quad_form - direct) > 1e-10 * max(1.0, abs(direct)):
        raise NumericalBreakdownError(
            "quadratic-form and direct transition densities disagree "
            f"({quad_form!r} vs {direct!r})")
    return float(direct)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random unitary from the QR of a complex Gaussian matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


@dataclass(frozen=True, eq=False)
class PdeCheck:
    max_sup_residual: float
    variances: np.ndarray
    expected_variances: np.ndarray


def verify_diffusion_pde(cfg: DiffusionConfig, start: float = 0.0,
                         n_epochs: int = 2) -> PdeCheck:
    """March the walker histogram through Brownian epochs and compare against
    the heat kernel with diffusion coefficient k = diffusion_sigma^2/(2 tau).

    After e epochs the analytic density is a Gaussian of variance 2*k*(e*tau);
    the sup-norm residual is taken over bin-averaged densities, and the
    per-epoch variances exhibit additivity.
    """
    rng = cfg.stream.generator()
    steps = rng.standard_normal((cfg.n_walkers, n_epochs)) * cfg.diffusion_sigma
    positions = start + np.cumsum(steps, axis=1)
    width = cfg.diffusion_sigma / 4.0
    sup = 0.0
    variances = np.empty(n_epochs)
    for e in range(1, n_epochs + 1):
        xs = positions[:, e - 1]
        s_e = cfg.diffusion_sigma * np.sqrt(e)
        lo, hi = start - 8.0 * s_e, start + 8.0 * s_e
        edges = np.arange(lo, hi + width, width)
        counts, _ = np.histogram(xs, bins=edges)
        dens = counts / cfg.n_walkers / width
        z = (edges - start) / (np.sqrt(2.0) * s_e)
        ref_mass = 0.5 * (erf(z[1:]) - erf(z[:-1]))
        sup = max(sup, float(np.max(np.abs(dens - ref_mass / width))))
        variances[e - 1] = np.var(xs)
    expected = cfg.diffusion_sigma ** 2 * np.arange(1, n_epochs + 1)
    return PdeCheck(max_sup_residual=sup, variances=variances,
                    expected_variances=expected)


def solid_com_diffusion(n_cells: int, kick_std: float, cfg: DiffusionConfig,
                        n_steps: int = 8) -> float:
    """Estimated center-of-mass diffusion coefficient of an n-cell solid.

    Every cell receives an independent Gaussian kick each step; the COM moves
    by the mean kick (equal masses).  The estimate is Var(total displacement)
    / (2 * n_steps * tau); it scales as 1/n_cells.
    """
    if n_cells < 1:
        raise ValueError("n_cells must be at least 1")
    rng = cfg.stream.generator()
    disp = np.zeros(cfg.n_walkers)
    for _ in range(n_steps):
        kicks = rng.standard_normal((cfg.n_walkers, n_cells))
        disp += kick_std * kicks.mean(axis=1)
    return float(np.var(disp) / (2.0 * n_steps * cfg.tau))


def random_superposition(ks: KernelSpace, stream: RngStream,
                         min_components: int = 2, max_components: int = 5,
                         spacing: Optional[float] = None):
    """Random near-orthogonal superposition of embedded points.

    Returns (psi, centers, weights): complex Gaussian coefficients over
    lattice centers spaced >= 6 sigma, normalized; weights are the exact
    squared coefficients of the normalized state, renormalized to sum to 1.
    """
    if spacing is None:
        spacing = 6.0 * ks.sigma
    rng = stream.generator()
    n_comp = int(rng.integers(min_components, max_components + 1))
    g = ks.grid
    lo = g.x_min + 6.0 * ks.sigma
    hi = g.x_max - 6.0 * ks.sigma
    lattice = np.arange(lo, hi, spacing)
    if len(lattice) < n_comp:
        raise ValueError("grid too small for the requested superposition")
    centers = np.sort(rng.choice(lattice, size=n_comp, replace=False))
    coef = rng.standard_normal(n_comp) + 1j * rng.standard_normal(n_comp)
    vals = np.zeros(g.n_points, dtype=complex)
    for b, c in zip(centers, coef):
        vals += c * embed_point(float(b), ks).values
    psi = StateVector(g, vals).normalized()
    dec = decompose_state(psi, ks, spacing, centers=centers)
    return psi, centers, dec.weights
