"""Wave-packet propagation, Newtonian integration and velocity-of-state analysis.

The propagator is Strang split-step spectral (exactly unitary per step,
second order in dt).  Classical trajectories use symplectic leapfrog.  The
velocity-of-state decomposition projects d(phi)/dt onto the fibre direction,
the two phase-space tangent directions and the spreading direction; the four
squared components sum to the squared speed of the state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import Grid, RngStream, StateVector, inner_l2, quadrature, spectral_derivative
from .geometry import GaussianParams, realize, tangent_basis, spread_direction


@dataclass(frozen=True)
class PhysicsParams:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be strictly positive")


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Potential V(x), optionally with reproducible per-step noise.

    kind is one of "free", "linear", "harmonic", "tabulated", "noisy".
    A noisy potential adds a random linear slope, redrawn each propagation
    step from its RngStream, so stochastic runs stay piecewise-unitary and
    bit-reproducible.
    """

    kind: str
    slope: float = 0.0
    stiffness: float = 0.0
    center: float = 0.0
    samples: Optional[np.ndarray] = None
    base: Optional["PotentialSpec"] = None
    noise_std: float = 0.0
    noise_stream: Optional[RngStream] = None

    @classmethod
    def free(cls) -> "PotentialSpec":
        return cls("free")

    @classmethod
    def linear(cls, slope: float) -> "PotentialSpec":
        return cls("linear", slope=float(slope))

    @classmethod
    def harmonic(cls, stiffness: float, center: float = 0.0) -> "PotentialSpec":
        return cls("harmonic", stiffness=float(stiffness), center=float(center))

    @classmethod
    def tabulated(cls, samples: np.ndarray) -> "PotentialSpec":
        return cls("tabulated", samples=np.asarray(samples, dtype=float))

    @classmethod
    def noisy(cls, base: "PotentialSpec", noise_std: float, stream: RngStream) -> "PotentialSpec":
        if base.kind == "noisy":
            raise ValueError("noisy potentials cannot be nested")
        return cls("noisy", base=base, noise_std=float(noise_std), noise_stream=stream)

    def values(self, grid: Grid) -> np.ndarray:
        """Static part of V sampled on the grid (noise excluded)."""
        x = grid.x
        if self.kind == "free":
            return np.zeros(grid.n_points)
        if self.kind == "linear":
            return self.slope * x
        if self.kind == "harmonic":
            return 0.5 * self.stiffness * (x - self.center) ** 2
        if self.kind == "tabulated":
            if self.samples is None or len(self.samples) != grid.n_points:
                raise ValueError("tabulated potential does not match the grid")
            v = np.asarray(self.samples, dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError("tabulated potential has non-finite samples")
            return v
        if self.kind == "noisy":
            return self.base.values(grid)
        raise ValueError(f"unknown potential kind {self.kind!r}")

    def derivative(self, grid: Grid) -> np.ndarray:
        if self.kind == "tabulated":
            return spectral_derivative(StateVector(grid, self.values(grid))).values.real
        if self.kind == "noisy":
            return self.base.derivative(grid)
        x = grid.x
        if self.kind == "free":
            return np.zeros(grid.n_points)
        if self.kind == "linear":
            return np.full(grid.n_points, self.slope)
        return self.stiffness * (x - self.center)

    def value_at(self, x, grid: Optional[Grid] = None):
        if self.kind == "free":
            return np.zeros_like(np.asarray(x, dtype=float))
        if self.kind == "linear":
            return self.slope * np.asarray(x, dtype=float)
        if self.kind == "harmonic":
            return 0.5 * self.stiffness * (np.asarray(x, dtype=float) - self.center) ** 2
        if self.kind == "noisy":
            return self.base.value_at(x, grid)
        if grid is None:
            raise ValueError("tabulated potential needs the grid for point evaluation")
        return np.interp(x, grid.x, self.values(grid))

    def derivative_at(self, x, grid: Optional[Grid] = None):
        if self.kind == "free":
            return np.zeros_like(np.asarray(x, dtype=float))
        if self.kind == "linear":
            return np.full_like(np.asarray(x, dtype=float), self.slope)
        if self.kind == "harmonic":
            return self.stiffness * (np.asarray(x, dtype=float) - self.center)
        if self.kind == "noisy":
            return self.base.derivative_at(x, grid)
        if grid is None:
            raise ValueError("tabulated potential needs the grid for point evaluation")
        return np.interp(x, grid.x, self.derivative(grid))

    def second_derivative_at(self, x, grid: Optional[Grid] = None):
        if self.kind in ("free", "linear"):
            return np.zeros_like(np.asarray(x, dtype=float))
        if self.kind == "harmonic":
            return np.full_like(np.asarray(x, dtype=float), self.stiffness)
        if self.kind == "noisy":
            return self.base.second_derivative_at(x, grid)
        if grid is None:
            raise ValueError("tabulated potential needs the grid for point evaluation")
        d2 = spectral_derivative(StateVector(grid, self.values(grid)), order=2).values.real
        return np.interp(x, grid.x, d2)

    def noise_slopes(self, n_steps: int) -> np.ndarray:
        if self.kind != "noisy":
            return np.zeros(n_steps)
        if self.noise_stream is None:
            raise ValueError("noisy potential without an RngStream")
        return self.noise_std * self.noise_stream.generator().standard_normal(n_steps)


def expect_x(psi: StateVector) -> float:
    return quadrature(psi.grid, psi.grid.x * psi.density()).real


def apply_momentum(psi: StateVector, phys: PhysicsParams) -> StateVector:
    return StateVector(psi.grid, -1j * phys.hbar * spectral_derivative(psi).values)


def expect_p(psi: StateVector, phys: PhysicsParams) -> float:
    return inner_l2(apply_momentum(psi, phys), psi).real


def apply_hamiltonian(psi: StateVector, V: PotentialSpec, phys: PhysicsParams) -> StateVector:
    """h psi with h = -hbar^2/(2m) d^2/dx^2 + V(x), kinetic part spectral."""
    g = psi.grid
    kin = -(phys.hbar ** 2) / (2.0 * phys.mass) * spectral_derivative(psi, order=2).values
    return StateVector(g, kin + V.values(g) * psi.values)


def _occupied_bandwidth(psi: StateVector, rel_floor: float = 1e-12) -> float:
    spectrum = np.abs(np.fft.fft(psi.values))
    mask = spectrum > rel_floor * spectrum.max()
    return float(np.max(np.abs(psi.grid.wavenumbers[mask])))


def _validate_step(psi: StateVector, V: PotentialSpec, phys: PhysicsParams, dt: float) -> None:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not psi.grid.periodic:
        raise ValueError("propagation requires a periodic grid")
    v = V.values(psi.grid)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential is not finite on the grid")
    # phase advance per step must stay resolvable for the occupied modes
    k_eff = _occupied_bandwidth(psi)
    kin_phase = phys.hbar * k_eff ** 2 * dt / (2.0 * phys.mass)
    pot_phase = np.max(np.abs(v)) * dt / phys.hbar
    if max(kin_phase, pot_phase) >= 0.5:
        raise ValueError(
            f"dt too large: per-step phase advance {max(kin_phase, pot_phase):.3f} rad "
            "exceeds 0.5 (refine dt or the grid)")


def propagate(psi: StateVector, V: PotentialSpec, phys: PhysicsParams,
              t_final: float, dt: float) -> StateVector:
    """Evolve psi to t_final with the Strang split-step spectral propagator.

    Each step is exactly unitary; the splitting error is second order in dt.
    Noisy potentials are piecewise constant per step, with slopes drawn from
    the potential's RngStream.
    """
    _validate_step(psi, V, phys, dt)
    n_steps = max(1, int(round(t_final / dt)))
    dt_eff = t_final / n_steps
    out, _ = _run_steps(psi, V, phys, n_steps, dt_eff)
    return out


def _run_steps(psi: StateVector, V: PotentialSpec, phys: PhysicsParams,
               n_steps: int, dt: float, record_every: int = 0):
    g = psi.grid
    k = g.wavenumbers
    exp_kin = np.exp(-1j * phys.hbar * k ** 2 * dt / (2.0 * phys.mass))
    v_static = V.values(g)
    slopes = V.noise_slopes(n_steps)
    static = V.kind != "noisy"
    if static:
        exp_v2 = np.exp(-1j * v_static * dt / (2.0 * phys.hbar))
    vals = psi.values.copy()
    records = []
    if record_every:
        records.append((0.0, expect_x(psi), expect_p(psi, phys)))
    for s in range(n_steps):
        if not static:
            exp_v2 = np.exp(-1j * (v_static + slopes[s] * g.x) * dt / (2.0 * phys.hbar))
        vals = exp_v2 * np.fft.ifft(exp_kin * np.fft.fft(exp_v2 * vals))
        if record_every and ((s + 1) % record_every == 0 or s == n_steps - 1):
            cur = StateVector(g, vals)
            records.append(((s + 1) * dt, expect_x(cur), expect_p(cur, phys)))
    return StateVector(g, vals), records


def wavepacket_trajectory(psi: StateVector, V: PotentialSpec, phys: PhysicsParams,
                          t_final: float, dt: float, n_records: int = 64):
    """Propagate while recording (t, <x>, <p>); returns (times, xs, ps, final)."""
    _validate_step(psi, V, phys, dt)
    n_steps = max(1, int(round(t_final / dt)))
    dt_eff = t_final / n_steps
    every = max(1, n_steps // n_records)
    final, recs = _run_steps(psi, V, phys, n_steps, dt_eff, record_every=every)
    t, xs, ps = (np.array(col) for col in zip(*recs))
    return t, xs, ps, final


def newton_integrate(a0: float, p0: float, V: PotentialSpec, phys: PhysicsParams,
                     t_final: float, dt: float, grid: Optional[Grid] = None):
    """Leapfrog (kick-drift-kick) trajectory; symplectic and time-reversible.

    Returns (times, positions, momenta) including the initial point.  Noisy
    potentials contribute the same per-step random slopes the propagator
    uses (piecewise-constant force), so packet and point see one noise
    realization.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = max(1, int(round(t_final / dt)))
    dt_eff = t_final / n_steps
    slopes = V.noise_slopes(n_steps)
    t = dt_eff * np.arange(n_steps + 1)
    a = np.empty(n_steps + 1)
    p = np.empty(n_steps + 1)
    a[0], p[0] = a0, p0
    force = lambda x, s: -float(V.derivative_at(x, grid)) - slopes[s]
    for s in range(n_steps):
        p_half = p[s] + 0.5 * dt_eff * force(a[s], s)
        a[s + 1] = a[s] + dt_eff * p_half / phys.mass
        p[s + 1] = p_half + 0.5 * dt_eff * force(a[s + 1], s)
    return t, a, p


def packet_width_bound(t, sigma: float, V: PotentialSpec, phys: PhysicsParams) -> np.ndarray:
    """Upper bound on the packet width along the evolution.

    Free and linear potentials spread exactly like the free packet; a
    harmonic well makes the width breathe between sigma and the coherent
    width, so the bound is their maximum.  Noise adds a linear slope only
    and does not change the width.  For other potentials the free-spreading
    curve is a heuristic, not a bound.
    """
    t = np.asarray(t, dtype=float)
    kind = V.base.kind if V.kind == "noisy" else V.kind
    stiffness = V.base.stiffness if V.kind == "noisy" else V.stiffness
    if kind == "harmonic" and stiffness > 0:
        omega = np.sqrt(stiffness / phys.mass)
        cap = max(sigma, phys.hbar / (2.0 * phys.mass * omega * sigma))
        return np.full_like(t, cap)
    return sigma * np.sqrt(1.0 + (phys.hbar * t / (2.0 * phys.mass * sigma**2)) ** 2)


@dataclass(frozen=True)
class VelocityDecomposition:
    """Named components of d(phi)/dt at a phase-space point, all in 1/time.

    total_norm^2 equals the sum of the four squared components (exactly for
    potentials at most quadratic); the projective speed sqrt(total^2 - fibre^2)
    equals energy_uncertainty/hbar.
    """

    fibre_component: float
    position_component: float
    momentum_component: float
    spread_component: float
    total_norm: float
    energy_uncertainty: float
    linearity_ok: bool = True

    @property
    def component_sum_sq(self) -> float:
        return (self.fibre_component ** 2 + self.position_component ** 2
                + self.momentum_component ** 2 + self.spread_component ** 2)

    @property
    def projective_speed(self) -> float:
        return float(np.sqrt(max(self.total_norm ** 2 - self.fibre_component ** 2, 0.0)))


def linearity_flag(q: GaussianParams, V: PotentialSpec, phys: PhysicsParams,
                   grid: Optional[Grid] = None, threshold: float = 0.05) -> bool:
    """True when V is effectively linear across the packet width at q.a."""
    v1 = abs(float(V.derivative_at(q.a, grid)))
    v2 = abs(float(V.second_derivative_at(q.a, grid)))
    return v2 * q.sigma / max(v1, 1e-6) < threshold


def velocity_decomposition(q: GaussianParams, V: PotentialSpec, phys: PhysicsParams,
                           grid: Grid) -> VelocityDecomposition:
    """Project d(phi)/dt = -(i/hbar) h phi onto the fibre, position, momentum
    and spreading unit directions at the packet realize(q).

    The projections are Riemannian (real parts of L2 inner products).  A
    violated potential-linearity precondition only clears linearity_ok; the
    computed projections are still returned.
    """
    phi = realize(q, grid, hbar=phys.hbar)
    hphi = apply_hamiltonian(phi, V, phys)
    dphi = StateVector(grid, -1j * hphi.values / phys.hbar)

    e_bar = inner_l2(hphi, phi).real
    h2 = inner_l2(hphi, hphi).real
    pos_dir, mom_dir = tangent_basis(q, grid, hbar=phys.hbar)
    sp_dir = spread_direction(q, grid, hbar=phys.hbar)

    fibre = e_bar / phys.hbar
    pos = inner_l2(dphi, pos_dir).real
    mom = inner_l2(dphi, mom_dir).real
    spread = inner_l2(dphi, sp_dir).real
    total = float(np.sqrt(h2)) / phys.hbar
    dh = float(np.sqrt(max(h2 - e_bar ** 2, 0.0)))
    return VelocityDecomposition(
        fibre_component=float(fibre), position_component=float(pos),
        momentum_component=float(mom), spread_component=float(spread),
        total_norm=total, energy_uncertainty=dh,
        linearity_ok=linearity_flag(q, V, phys, grid))


def closed_form_decomposition(q: GaussianParams, V: PotentialSpec, phys: PhysicsParams,
                              grid: Optional[Grid] = None) -> VelocityDecomposition:
    """Closed forms of the four components in the potential-linearity regime:
    Ebar/hbar, v/(2 sigma), m w sigma/hbar with m w = -V'(a), and
    sqrt(2) hbar/(8 sigma^2 m)."""
    hbar, m, s = phys.hbar, phys.mass, q.sigma
    v = q.p / m
    w = -float(V.derivative_at(q.a, grid)) / m
    e_bar = q.p ** 2 / (2 * m) + hbar ** 2 / (8 * m * s ** 2) + float(V.value_at(q.a, grid))
    comps = np.array([e_bar / hbar, v / (2 * s), m * w * s / hbar,
                      np.sqrt(2.0) * hbar / (8 * s ** 2 * m)])
    total = float(np.sqrt(np.sum(comps[1:] ** 2) + comps[0] ** 2))
    dh = float(np.sqrt(np.sum(comps[1:] ** 2))) * hbar
    return VelocityDecomposition(*comps, total, dh,
                                 linearity_ok=linearity_flag(q, V, phys, grid))


def projective_speed(psi: StateVector, V: PotentialSpec, phys: PhysicsParams):
    """Speed of the ray {psi} under Schroedinger evolution and the energy
    uncertainty; the two are related by speed = Delta_h / hbar."""
    hpsi = apply_hamiltonian(psi, V, phys)
    e_bar = inner_l2(hpsi, psi).real
    h2 = inner_l2(hpsi, hpsi).real
    total_sq = h2 / phys.hbar ** 2
    speed = float(np.sqrt(max(total_sq - (e_bar / phys.hbar) ** 2, 0.0)))
    dh = float(np.sqrt(max(h2 - e_bar ** 2, 0.0)))
    return speed, dh


def ehrenfest_check(psi: StateVector, V: PotentialSpec, phys: PhysicsParams,
                    dt: float = 1e-3):
    """Residuals |d<x>/dt - <p>/m| and |d<p>/dt + <V'>| from one centered
    propagation step each way."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    _validate_step(psi, V, phys, dt)
    plus, _ = _run_steps(psi, V, phys, 1, dt)
    minus, _ = _run_steps(psi, V, phys, 1, -dt)
    dx_dt = (expect_x(plus) - expect_x(minus)) / (2.0 * dt)
    dp_dt = (expect_p(plus, phys) - expect_p(minus, phys)) / (2.0 * dt)
    vprime = quadrature(psi.grid, V.derivative(psi.grid) * psi.density()).real
    res1 = abs(dx_dt - expect_p(psi, phys) / phys.mass)
    res2 = abs(dp_dt + vprime)
    return res1, res2


_OBSERVABLES = ("position", "momentum", "identity")


def anticommutator_identity_check(psi: StateVector, observable: str,
                                  V: PotentialSpec, phys: PhysicsParams) -> float:
    """Residual of 2 hbar (dpsi/dt, -i A psi) = (psi, {A,h} psi) - (psi, [A,h] psi)
    with dpsi/dt = -(i/hbar) h psi evaluated spectrally."""
    if observable not in _OBSERVABLES:
        raise ValueError(f"observable must be one of {_OBSERVABLES}")

    def apply_a(f: StateVector) -> StateVector:
        if observable == "position":
            return StateVector(f.grid, f.grid.x * f.values)
        if observable == "momentum":
            return apply_momentum(f, phys)
        return f

    hpsi = apply_hamiltonian(psi, V, phys)
    dpsi = StateVector(psi.grid, -1j * hpsi.values / phys.hbar)
    a_psi = apply_a(psi)
    lhs = 2.0 * phys.hbar * inner_l2(dpsi, StateVector(psi.grid, -1j * a_psi.values))
    a_h = apply_a(hpsi)
    h_a = apply_hamiltonian(a_psi, V, phys)
    anti = StateVector(psi.grid, a_h.values + h_a.values)
    comm = StateVector(psi.grid, a_h.values - h_a.values)
    rhs = inner_l2(psi, anti) - inner_l2(psi, comm)
    return abs(lhs - rhs)


def constrained_motion_check(q0: GaussianParams, V: PotentialSpec, phys: PhysicsParams,
                             grid: Grid, t_final: float, dt: float = 1e-3,
                             n_records: int = 64):
    """Max deviation of the packet's (<x>, <p>) from the Newtonian trajectory
    started at the same phase-space point.  Exact up to solver error for
    potentials at most quadratic."""
    psi = realize(q0, grid, hbar=phys.hbar)
    t, xs, ps, _ = wavepacket_trajectory(psi, V, phys, t_final, dt, n_records)
    n_steps = max(1, int(round(t_final / dt)))
    dt_eff = t_final / n_steps
    _, aa, pp = newton_integrate(q0.a, q0.p, V, phys, t_final, dt_eff, grid)
    idx = np.rint(t / dt_eff).astype(int)
    dev_x = float(np.max(np.abs(xs - aa[idx])))
    dev_p = float(np.max(np.abs(ps - pp[idx])))
    return dev_x, dev_p
