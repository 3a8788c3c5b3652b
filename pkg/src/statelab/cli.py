"""Experiment runner: every verification suite as a reproducible subcommand.

Subcommands mirror the library's sections: geometry-identities,
dynamics-checks, reconstruct, born-diffusion, solid-com, and all.  Runs are
fully deterministic: equal configs produce byte-identical report.json and CSV
tables.  Exit codes: 0 all checks pass, 1 a check failed, 2 config error,
3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .numerics import Grid, NumericalBreakdownError, RngStream, StateVector
from . import geometry as geo
from .geometry import GaussianParams, KernelSpace
from . import dynamics as dyn
from .dynamics import PhysicsParams, PotentialSpec
from . import reconstruct as rec
from . import diffusion as diff
from .reports import Report, check_abs, check_rel, check_upper, CheckRecord, print_report


class ValidationError(ValueError):
    """Configuration rejected before any computation."""


UNIT_SCHEMA = {
    "grid.x_min": "length",
    "grid.x_max": "length",
    "physics.hbar": "action",
    "physics.mass": "mass",
    "kernel.sigma": "length",
    "potential.slope": "energy/length",
    "potential.stiffness": "energy/length^2",
    "potential.center": "length",
    "potential.noise_std": "energy/length",
    "diffusion.tau": "time",
    "diffusion.diffusion_sigma": "length",
}

DEFAULT_CONFIG = {
    "grid": {"n_points": 512, "x_min": -16.0, "x_max": 16.0, "periodic": True},
    "physics": {"hbar": 1.0, "mass": 1.0},
    "kernel": {"sigma": 0.5},
    "potential": {"kind": "harmonic", "stiffness": 1.0, "center": 0.0},
    "diffusion": {"n_walkers": 100000, "tau": 1.0, "diffusion_sigma": 0.5},
    "seed": 20250809,
    "out_dir": None,
    "units": {
        "grid.x_min": "length",
        "grid.x_max": "length",
        "physics.hbar": "action",
        "physics.mass": "mass",
        "kernel.sigma": "length",
        "potential.stiffness": "energy/length^2",
        "potential.center": "length",
        "diffusion.tau": "time",
        "diffusion.diffusion_sigma": "length",
    },
}

_TOP_KEYS = set(DEFAULT_CONFIG)


def _validate_units(cfg: dict) -> None:
    units = cfg.get("units")
    if not isinstance(units, dict):
        raise ValidationError("config must carry a 'units' block annotating physical quantities")
    present = []
    for section in ("grid", "physics", "kernel", "potential", "diffusion"):
        for key in cfg.get(section, {}):
            path = f"{section}.{key}"
            if path in UNIT_SCHEMA:
                present.append(path)
    for path in present:
        if path not in units:
            raise ValidationError(f"missing unit annotation for {path!r} "
                                  f"(expected {UNIT_SCHEMA[path]!r})")
        if units[path] != UNIT_SCHEMA[path]:
            raise ValidationError(
                f"unit for {path!r} is {units[path]!r}, expected {UNIT_SCHEMA[path]!r}")
    for path in units:
        if path not in UNIT_SCHEMA:
            raise ValidationError(f"unknown unit annotation {path!r}")


def _potential_from_config(d: dict, seed: int) -> PotentialSpec:
    kind = d.get("kind", "free")
    if kind == "free":
        return PotentialSpec.free()
    if kind == "linear":
        return PotentialSpec.linear(d["slope"])
    if kind == "harmonic":
        return PotentialSpec.harmonic(d["stiffness"], d.get("center", 0.0))
    if kind == "noisy":
        base = _potential_from_config(d["base"], seed)
        return PotentialSpec.noisy(base, d["noise_std"], RngStream(seed, 15))
    raise ValidationError(
        f"config potential kind {kind!r} not supported (use the library API "
        "for tabulated potentials)")


class ExperimentConfig:
    """Validated configuration bundle; fully determines every run."""

    def __init__(self, data: dict):
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        merged = {k: (dict(DEFAULT_CONFIG[k]) if isinstance(DEFAULT_CONFIG[k], dict) else DEFAULT_CONFIG[k])
                  for k in DEFAULT_CONFIG}
        for k, v in data.items():
            if k == "potential":
                merged[k] = dict(v)   # kinds carry disjoint fields: replace
            elif isinstance(v, dict) and isinstance(merged.get(k), dict):
                merged[k].update(v)
            else:
                merged[k] = v
        _validate_units(merged)
        g = merged["grid"]
        try:
            self.grid = Grid(int(g["n_points"]), float(g["x_min"]), float(g["x_max"]),
                             bool(g.get("periodic", True)))
        except ValueError as exc:
            raise ValidationError(f"invalid grid: {exc}") from exc
        if self.grid.n_points < 64:
            raise ValidationError("acceptance runs need n_points >= 64")
        ph = merged["physics"]
        try:
            self.physics = PhysicsParams(float(ph["hbar"]), float(ph["mass"]))
        except ValueError as exc:
            raise ValidationError(f"invalid physics params: {exc}") from exc
        sigma = float(merged["kernel"]["sigma"])
        if sigma <= 0:
            raise ValidationError("kernel.sigma must be positive")
        if self.grid.length < 20.0 * sigma:
            raise ValidationError(
                "grid must span at least 20 kernel widths (10 sigma margins)")
        self.kernel = KernelSpace(self.grid, sigma)
        self.seed = int(merged["seed"])
        self.potential = _potential_from_config(merged["potential"], self.seed)
        d = merged["diffusion"]
        try:
            self.diffusion = diff.DiffusionConfig(
                int(d["n_walkers"]), float(d["tau"]), float(d["diffusion_sigma"]),
                RngStream(self.seed, 10))
        except ValueError as exc:
            raise ValidationError(f"invalid diffusion config: {exc}") from exc
        self.out_dir = merged.get("out_dir")
        self.echo = merged

    def stream(self, stream_id: int) -> RngStream:
        return RngStream(self.seed, stream_id)


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ValidationError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config root must be a JSON object")
    if overrides.get("seed") is not None:
        data["seed"] = overrides["seed"]
    if overrides.get("walkers") is not None:
        data.setdefault("diffusion", {})
        data["diffusion"]["n_walkers"] = overrides["walkers"]
    if overrides.get("grid") is not None:
        data.setdefault("grid", {})
        data["grid"]["n_points"] = overrides["grid"]
    return ExperimentConfig(data)


def write_csv(path: Path, header: list[str], rows) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path.name


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


# ---------------------------------------------------------------- sections

def run_geometry(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("geometry-identities", cfg.echo)
    ks = cfg.kernel
    sigma = ks.sigma

    ident_grid = cfg.grid if cfg.grid.n_points <= 512 else Grid(
        512, cfg.grid.x_min, cfg.grid.x_max, True)
    ks_id = KernelSpace(ident_grid, sigma)
    R = ks_id.smoothing_matrix()
    K = ks_id.kernel_matrix()
    comp = (R.T @ R) * ident_grid.dx
    rep.add(check_upper("kernel-composition-max-entry", float(np.abs(comp - K).max()),
                        1e-8, note="rho*rho vs kernel, operator max-entry norm"))

    seps = np.array([0.5, 1.0, 2.0, 4.0]) * sigma
    rows = []
    worst = 0.0
    for s in seps:
        f = geo.embed_point(-s / 2.0, ks)
        g = geo.embed_point(+s / 2.0, ks)
        c2 = np.cos(geo.fs_distance(f, g)) ** 2
        ref = np.exp(-s ** 2 / (4.0 * sigma ** 2))
        worst = max(worst, abs(c2 - ref))
        rows.append((s / sigma, c2, ref, abs(c2 - ref)))
    rep.add(check_upper("overlap-distance-identity-max-dev", worst, 1e-8))
    rep.artifacts.append(write_csv(out / "overlap_distance.csv",
                                   ["separation_over_sigma", "cos2_fs_distance",
                                    "closed_form", "deviation"], rows))

    speed = geo.h_norm_velocity(lambda t: 1.0 * t, ks)
    rep.add(check_rel("isometry-unit-speed", speed, 1.0, 1e-4))
    rng = cfg.stream(20).generator()
    worst_rel = 0.0
    for _ in range(20):
        v = float(rng.uniform(0.2, 3.0)) * (1 if rng.random() < 0.5 else -1)
        a0 = float(rng.uniform(-2.0, 2.0))
        got = geo.h_norm_velocity(lambda t: a0 + v * t, ks)
        worst_rel = max(worst_rel, abs(got - abs(v)) / abs(v))
    rep.add(check_upper("isometry-random-paths-max-rel-dev", worst_rel, 1e-4))

    v0, g0 = 0.8, 1.7
    path = lambda t: 0.3 + v0 * t + 0.5 * g0 * t * t
    rep.add(check_abs("path-projection-velocity",
                      geo.delta_path_projection(path, 1, ks), v0, 1e-3))
    rep.add(check_abs("path-projection-acceleration",
                      geo.delta_path_projection(path, 2, ks), g0, 1e-3))
    rep.add(check_abs("path-projection-uniform-acceleration-zero",
                      geo.delta_path_projection(lambda t: 0.1 + 1.3 * t, 2, ks), 0.0, 1e-3))

    q = GaussianParams(0.5, 0.7, sigma)
    eps_a = 1e-3 * 2.0 * sigma
    eps_p = 1e-3 * cfg.physics.hbar / sigma
    worst_rel = 0.0
    stencil_rows = []
    for ia in (-1, 0, 1):
        for ip in (-1, 0, 1):
            lhs, rhs = geo.fs_metric_restriction_check(
                q, ia * eps_a, ip * eps_p, cfg.grid, hbar=cfg.physics.hbar)
            dev = 0.0 if rhs == 0.0 else abs(lhs - rhs) / rhs
            worst_rel = max(worst_rel, dev)
            stencil_rows.append((ia * eps_a, ip * eps_p, lhs, rhs, dev))
    rep.add(check_upper("fs-metric-restriction-max-rel-dev", worst_rel, 1e-3))
    rep.artifacts.append(write_csv(out / "fs_metric_stencil.csv",
                                   ["da", "dp", "fd_distance_sq", "closed_form", "rel_dev"],
                                   stencil_rows))

    rank, m = geo.completeness_rank(ks)
    rep.add(check_upper("completeness-rank-deficit", 1.0 - rank / m, 0.1,
                        note=f"rank {rank} of {m} sigma-spaced centers"))
    return rep


def run_dynamics(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("dynamics-checks", cfg.echo)
    grid, phys, sigma = cfg.grid, cfg.physics, cfg.kernel.sigma
    hbar, m = phys.hbar, phys.mass

    # velocity decomposition: closure + closed forms over a 5x5 phase-space sample
    pots = [("free", PotentialSpec.free()),
            ("linear", PotentialSpec.linear(0.7)),
            ("harmonic-far", PotentialSpec.harmonic(1e-3, center=-40.0))]
    a_vals = np.linspace(-2.0, 2.0, 5)
    p_vals = np.linspace(-1.0, 1.0, 5)
    worst_closure = 0.0
    worst_comp = 0.0
    dec_rows = []
    for name, V in pots:
        for a in a_vals:
            for p in p_vals:
                q = GaussianParams(float(a), float(p), sigma)
                d = dyn.velocity_decomposition(q, V, phys, grid)
                ref = dyn.closed_form_decomposition(q, V, phys, grid)
                closure = abs(d.total_norm ** 2 - d.component_sum_sq) / d.total_norm ** 2
                worst_closure = max(worst_closure, closure)
                scale = max(abs(ref.total_norm), 1.0)
                comp_dev = max(
                    abs(d.fibre_component - ref.fibre_component),
                    abs(d.position_component - ref.position_component),
                    abs(d.momentum_component - ref.momentum_component),
                    abs(d.spread_component - ref.spread_component)) / scale
                worst_comp = max(worst_comp, comp_dev)
                dec_rows.append((name, a, p, d.fibre_component, d.position_component,
                                 d.momentum_component, d.spread_component,
                                 d.total_norm, closure, int(d.linearity_ok)))
    rep.add(check_upper("decomposition-closure-max-rel-dev", worst_closure, 1e-3))
    rep.add(check_upper("decomposition-closed-form-max-rel-dev", worst_comp, 1e-3))
    rep.artifacts.append(write_csv(out / "decomposition.csv",
                                   ["potential", "a", "p", "fibre", "position", "momentum",
                                    "spread", "total_norm", "closure_rel_dev", "linearity_ok"],
                                   dec_rows))

    d = dyn.velocity_decomposition(GaussianParams(0.0, 1.0, 0.5), PotentialSpec.free(),
                                   PhysicsParams(1.0, 1.0), grid)
    rep.add(check_abs("free-packet-position-component", d.position_component, 1.0, 1e-3))
    rep.add(check_abs("free-packet-momentum-component", d.momentum_component, 0.0, 1e-3))
    rep.add(check_abs("free-packet-spread-component", d.spread_component,
                      np.sqrt(2.0) / 2.0, 1e-3))
    rep.add(check_abs("free-packet-fibre-component", d.fibre_component, 1.0, 1e-3))
    rep.add(check_abs("free-packet-total-norm-sq", d.total_norm ** 2, 2.5, 1e-3))

    # Ehrenfest residuals
    psi_h = geo.realize(GaussianParams(1.0, 0.0, sigma), grid, hbar=hbar)
    r1, r2 = dyn.ehrenfest_check(psi_h, PotentialSpec.harmonic(1.0), phys, dt=1e-3)
    rep.add(check_upper("ehrenfest-harmonic-residual-x", r1, 1e-5))
    rep.add(check_upper("ehrenfest-harmonic-residual-p", r2, 1e-5))
    rf1, rf2 = dyn.ehrenfest_check(psi_h, PotentialSpec.free(), phys, dt=1e-3)
    rep.add(check_upper("ehrenfest-free-residual-x", rf1, 1e-8))
    rep.add(check_upper("ehrenfest-free-residual-p", rf2, 1e-8))
    qgrid = Grid(512, -10.0, 10.0, True)
    quartic = PotentialSpec.tabulated(qgrid.x ** 4)
    psi_q = geo.realize(GaussianParams(0.0, 0.0, 1.0), qgrid, hbar=hbar)
    rq1, _ = dyn.ehrenfest_check(psi_q, quartic, phys, dt=2e-5)
    rep.add(check_upper("ehrenfest-quartic-residual-x", rq1, 1e-5))

    # anticommutator identity, spectral route
    agrid = Grid(64, -8.0, 8.0, True)
    rng = cfg.stream(16).generator()
    vals = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    psi_r = StateVector(agrid, vals).normalized()
    Vh = PotentialSpec.harmonic(1.0)
    worst = max(dyn.anticommutator_identity_check(psi_r, "position", Vh, phys),
                dyn.anticommutator_identity_check(psi_r, "momentum", Vh, phys))
    rep.add(check_upper("anticommutator-identity-residual", worst, 1e-6))
    rep.add(check_upper("anticommutator-identity-identity-obs",
                        dyn.anticommutator_identity_check(psi_r, "identity", Vh, phys), 1e-8))

    # constrained classical motion: canonical harmonic case over one period,
    # then the configured potential over a horizon the packet actually fits
    q0 = GaussianParams(1.0, 0.0, sigma)
    dev_x, dev_p = dyn.constrained_motion_check(q0, PotentialSpec.harmonic(1.0),
                                                phys, grid, t_final=2.0 * np.pi, dt=1e-3)
    rep.add(check_upper("constrained-motion-harmonic-max-dev-x", dev_x, 1e-4))
    rep.add(check_upper("constrained-motion-harmonic-max-dev-p", dev_p, 1e-4))
    devf_x, _ = dyn.constrained_motion_check(GaussianParams(0.0, 1.0, sigma),
                                             PotentialSpec.free(), phys, grid,
                                             t_final=1.0, dt=1e-3)
    rep.add(check_upper("constrained-motion-free-max-dev-x", devf_x, 1e-6))

    horizon = _fit_horizon(q0, cfg.potential, phys, grid, sigma, t_max=2.0 * np.pi)
    dev_cx, dev_cp = dyn.constrained_motion_check(q0, cfg.potential, phys, grid,
                                                  t_final=horizon, dt=1e-3)
    rep.add(check_upper("constrained-motion-config-max-dev-x", dev_cx, 1e-4,
                        note=f"configured potential over t={horizon:.3g}"))

    t, xs, ps, _ = dyn.wavepacket_trajectory(
        geo.realize(q0, grid, hbar=hbar), cfg.potential, phys, horizon, 1e-3, 64)
    n_steps = max(1, int(round(horizon / 1e-3)))
    _, aa, pp = dyn.newton_integrate(q0.a, q0.p, cfg.potential, phys, horizon,
                                     horizon / n_steps, grid)
    idx = np.rint(t / (horizon / n_steps)).astype(int)
    rep.artifacts.append(write_csv(out / "trajectory.csv",
                                   ["t", "x_packet", "p_packet", "x_newton", "p_newton"],
                                   list(zip(t, xs, ps, aa[idx], pp[idx]))))

    # unitarity, including a noisy potential
    noisy = PotentialSpec.noisy(PotentialSpec.harmonic(1.0), 0.5, cfg.stream(15))
    psi_n = dyn.propagate(psi_h, noisy, phys, 1.0, 1e-3)
    rep.add(check_abs("unitarity-noisy-norm", psi_n.norm(), 1.0, 1e-8))

    # projective speed equals energy uncertainty / hbar
    worst = 0.0
    for _ in range(5):
        vals = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
        psi = StateVector(grid, vals).normalized()
        speed, dh = dyn.projective_speed(psi, Vh, phys)
        worst = max(worst, abs(speed - dh / hbar) / max(dh / hbar, 1e-12))
    rep.add(check_upper("projective-speed-vs-energy-uncertainty", worst, 1e-3))
    return rep


def run_reconstruct(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("reconstruct", cfg.echo)
    phys = cfg.physics
    rows = []
    for name, coeffs in [("free", [0.0]), ("linear", [0.0, 0.7]),
                         ("harmonic", [0.0, 0.0, 0.5])]:
        ops = rec.build_operators(32, phys, coeffs)
        res = rec.solve_hamiltonian(ops, phys)
        rep.add(check_upper(f"block-error-{name}", res.block_error, 1e-6))
        rep.add(check_upper(f"gauge-constant-{name}", abs(res.gauge_constant), 1e-6))
        rows.append((name, 32, res.interior, res.block_error, res.residual_x,
                     res.residual_p, res.gauge_constant))
    for n in (16, 32, 64):
        ops = rec.build_operators(n, phys, [0.0, 0.0, 0.5])
        dim = rec.kernel_of_constraints(ops)
        rep.add(check_abs(f"constraint-kernel-dimension-n{n}", dim, 1.0, 0.0))

    ops = rec.build_operators(32, phys, [0.0])
    rng = cfg.stream(21).generator()
    gmat = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    fbad = (gmat + gmat.conj().T) / 2.0
    bad_ops = rec.OperatorTriple(n=32, buffer=4, X=ops.X, P=ops.P, F=fbad,
                                 v_coeffs=(0.0,))
    res_bad = rec.solve_hamiltonian(bad_ops, phys)
    ratio = res_bad.residual_p / np.linalg.norm(fbad)
    rep.add(CheckRecord("null-test-inconsistent-force", float(ratio), 1e-2, 1e-2,
                        ratio > 1e-2, "lower",
                        "residual_p must stay away from zero for a non-gradient force"))
    rep.artifacts.append(write_csv(out / "reconstruct.csv",
                                   ["potential", "n", "interior", "block_error",
                                    "residual_x", "residual_p", "gauge_constant"], rows))
    return rep


def run_born_diffusion(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("born-diffusion", cfg.echo)
    ks, dcfg = cfg.kernel, cfg.diffusion

    pde = diff.verify_diffusion_pde(
        diff.DiffusionConfig(dcfg.n_walkers, dcfg.tau, dcfg.diffusion_sigma,
                             cfg.stream(13)), n_epochs=2)
    rep.add(check_upper("pde-heat-kernel-sup-residual", pde.max_sup_residual, 0.03))
    var_dev = float(np.max(np.abs(pde.variances / pde.expected_variances - 1.0)))
    rep.add(check_upper("pde-variance-additivity-rel-dev", var_dev, 0.05))

    ks_crit = 1.628 / np.sqrt(dcfg.n_walkers)   # Kolmogorov 1% level
    worst_l1 = worst_z = worst_ks = 0.0
    mass_rows, hist_rows = [], []
    for case in range(10):
        psi, centers, weights = diff.random_superposition(ks, cfg.stream(11).child(case))
        walk_cfg = diff.DiffusionConfig(dcfg.n_walkers, dcfg.tau, dcfg.diffusion_sigma,
                                        cfg.stream(12).child(case))
        est = diff.simulate_state_diffusion(psi, walk_cfg, ks, centers=centers)
        worst_l1 = max(worst_l1, est.l1_error)
        worst_ks = max(worst_ks, est.ks_statistic)
        for j, (w, mass) in enumerate(zip(est.expected_weights, est.component_masses)):
            sd = np.sqrt(w * (1.0 - w) / est.n_walkers)
            z = abs(mass - w) / sd if sd > 0 else 0.0
            worst_z = max(worst_z, z)
            mass_rows.append((case, j, centers[j], w, mass, sd))
        if case == 0:
            mids = 0.5 * (est.bin_edges[:-1] + est.bin_edges[1:])
            hist_rows = list(zip(est.bin_edges[:-1], est.bin_edges[1:], est.counts,
                                 est.density, est.reference_density))
    rep.add(check_upper("born-l1-error-max", worst_l1, 0.02,
                        note="total-variation distance to |psi|^2, 10 superpositions"))
    rep.add(check_upper("born-component-mass-max-z", worst_z, 3.0,
                        note="binomial standard deviations"))
    rep.add(check_upper("born-ks-statistic-max", worst_ks, ks_crit,
                        note="Kolmogorov-Smirnov at the 1% level"))
    rep.artifacts.append(write_csv(out / "born_masses.csv",
                                   ["case", "component", "center", "expected_weight",
                                    "observed_mass", "binomial_sd"], mass_rows))
    rep.artifacts.append(write_csv(out / "born_histogram.csv",
                                   ["bin_left", "bin_right", "count", "density",
                                    "reference_density"], hist_rows))

    # transition density: exchange symmetry and unitary invariance
    agrid = Grid(64, -8.0, 8.0, True)
    rng = cfg.stream(17).generator()
    worst_sym = worst_inv = 0.0
    for _ in range(20):
        fa = StateVector(agrid, rng.standard_normal(64) + 1j * rng.standard_normal(64)).normalized()
        fb = StateVector(agrid, rng.standard_normal(64) + 1j * rng.standard_normal(64)).normalized()
        d_ab = diff.density_functional(fa, fb, ks.sigma)
        d_ba = diff.density_functional(fb, fa, ks.sigma)
        worst_sym = max(worst_sym, abs(d_ab - d_ba))
        U = diff.random_unitary(64, rng)
        ua = StateVector(agrid, U @ fa.values)
        ub = StateVector(agrid, U @ fb.values)
        worst_inv = max(worst_inv, abs(diff.density_functional(ua, ub, ks.sigma) - d_ab))
    rep.add(check_upper("transition-density-exchange-symmetry", worst_sym, 0.0))
    rep.add(check_upper("transition-density-unitary-invariance", worst_inv, 1e-8))

    # single-component sanity and two-component mass split
    psi1 = geo.embed_point(0.0, ks)
    est1 = diff.simulate_state_diffusion(
        psi1, diff.DiffusionConfig(dcfg.n_walkers, dcfg.tau, dcfg.diffusion_sigma,
                                   cfg.stream(18)), ks,
        centers=np.array([0.0]))
    rep.add(check_upper("single-component-l1-error", est1.l1_error, 0.02))

    b1, b2 = -3.0 * ks.sigma, 3.0 * ks.sigma
    v2 = (0.6 * geo.embed_point(b1, ks).values + 0.8 * geo.embed_point(b2, ks).values)
    psi2 = StateVector(cfg.grid, v2).normalized()
    est2 = diff.simulate_state_diffusion(
        psi2, diff.DiffusionConfig(dcfg.n_walkers, dcfg.tau, dcfg.diffusion_sigma,
                                   cfg.stream(19)), ks,
        centers=np.array([b1, b2]))
    rep.add(check_abs("two-component-mass-split", float(est2.component_masses[0]),
                      float(est2.expected_weights[0]), 0.01))
    return rep


def run_solid_com(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("solid-com", cfg.echo)
    dcfg = cfg.diffusion
    kick = dcfg.diffusion_sigma
    k_estimates = []
    rows = []
    for i, n_cells in enumerate((1, 10, 100)):
        c = diff.DiffusionConfig(dcfg.n_walkers, dcfg.tau, dcfg.diffusion_sigma,
                                 cfg.stream(14).child(i))
        k_est = diff.solid_com_diffusion(n_cells, kick, c)
        k_estimates.append(k_est)
        rows.append((n_cells, k_est, k_est / max(k_estimates[0], 1e-300), 1.0 / n_cells))
    for (n_cells, k_est, ratio, expected) in rows:
        rep.add(check_rel(f"com-suppression-n{n_cells}", ratio, expected, 0.10))
    rep.add(check_upper("com-suppression-monotone",
                        float(max(np.diff(k_estimates))), 0.0,
                        note="diffusion coefficient decreases with n_cells"))
    zero = diff.solid_com_diffusion(
        10, 0.0, diff.DiffusionConfig(1000, dcfg.tau, dcfg.diffusion_sigma, cfg.stream(14).child(9)))
    rep.add(check_abs("com-zero-kick", zero, 0.0, 0.0))
    rep.artifacts.append(write_csv(out / "solid_scaling.csv",
                                   ["n_cells", "k_estimate", "ratio_to_single",
                                    "expected_ratio"], rows))
    return rep


SECTIONS = {
    "geometry-identities": run_geometry,
    "dynamics-checks": run_dynamics,
    "reconstruct": run_reconstruct,
    "born-diffusion": run_born_diffusion,
    "solid-com": run_solid_com,
}


def run_all(cfg: ExperimentConfig, out: Path) -> Report:
    names = list(SECTIONS)
    env = os.environ.get("STATELAB_THREADS")
    workers = int(env) if env else min(4, len(names))
    if workers < 1:
        raise ValidationError("STATELAB_THREADS must be a positive integer")
    rep = Report("all", cfg.echo)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda n: SECTIONS[n](cfg, out), names))
    for name, sub in zip(names, results):
        for c in sub.checks:
            rep.add(CheckRecord(f"{name}/{c.name}", c.value, c.reference,
                                c.tolerance, c.passed, c.mode, c.note))
        rep.artifacts.extend(sub.artifacts)
    return rep


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="statelab",
        description="Run the verification experiment suites with reproducible "
                    "configuration and machine-readable reports.")
    parser.add_argument("subcommand", choices=sorted(SECTIONS) + ["all"])
    parser.add_argument("--config", default=None, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--walkers", type=int, default=None,
                        help="override diffusion.n_walkers")
    parser.add_argument("--grid", type=int, default=None, help="override grid.n_points")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        cfg = load_config(args.config, vars(args))
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out or cfg.out_dir or "statelab-out")
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    try:
        if args.subcommand == "all":
            report = run_all(cfg, out)
        else:
            report = SECTIONS[args.subcommand](cfg, out)
    except NumericalBreakdownError as exc:
        print(f"numerical breakdown in {args.subcommand}: {exc}", file=sys.stderr)
        return 3
    elapsed = time.perf_counter() - started

    report_path = out / "report.json"
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
    report.artifacts.append(report_path.name)
    print_report(report)
    # timing goes to the console only; report files must be run-to-run identical
    print(f"wall time: {elapsed:.2f} s; outputs in {out}")
    return 0 if report.overall_pass else 1


if __name__ == "__main__":
    raise SystemExit(main())
