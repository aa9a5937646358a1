"""Acceptance suite: instance sweeps, property checks and the summary report.

Every random draw descends from ``SuiteConfig.seed`` through
``numpy.random.SeedSequence`` children, so a fixed config reproduces the
report byte for byte. Runtimes are kept out of the report and returned
separately.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import corona
from .constants import (MonotonicityConfig, _ratio, bigger_check, characterize, energy_inequality_report,
                        hardy, monotonicity_report, overlap_max)
from .disk import (InnerFunction, clark_measure, clark_residual, compactness_profile, default_z_grid,
                   default_z_samples, disk_constants, kernel_probe, nu_measure)
from .dyadic import DyadicInterval, Grid, GridParams, estimate_pbad, pbad_bound, random_partition, \
    refine_partition
from .haar import HaarSystem, analyze, split_good_bad
from .instances import (FAMILIES, admissible_grid, disk_instance, haar_instance, hardy_weights,
                        make_instance, random_blaschke, refine_split)
from .kernels import SingularPairError
from .measures import TWO_PI, Measure1D, Measure2D

DEFAULT_TOLERANCES = {
    "necessity": 1e-9,   # t <= N + tol
    "haar": 1e-10,       # orthonormality, mean zero, Parseval
    "clark": 1e-8,       # Poisson identity residual
    "clark_mass": 1e-10, # recovered atoms and masses
    "hardy": 1e-9,       # direct >= B - tol
    "strip": 1e-12,      # mu strip bound, relative
    "profile": 1e-9,     # compactness profiles at the end of the grid
}


@dataclass
class SuiteConfig:
    seed: int = 0
    n_instances: int = 200
    families: tuple = FAMILIES
    atoms_min: int = 8
    atoms_max: int = 64
    epsilon: float = 0.25
    r: int = 3
    k_min: int = -12
    k_max: int = 1
    n_shift: int = 8
    norm_tol: float = 1e-12
    # grid statistics
    pbad_epsilon: float = 0.25
    pbad_rs: tuple = (12, 14, 16)
    pbad_trials: int = 10_000
    pbad_window: int = 40
    pbad_grids: int = 200
    pbad_haar_window: int = 28
    pbad_atoms: int = 32
    # Haar, energy, monotonicity, Hardy
    haar_instances: int = 50
    energy_instances: int = 50
    mono_samples: int = 10_000
    mono_family: int = 50
    mono_constant: float = 64.0
    overlap_samples: int = 10_000
    hardy_instances: int = 50
    # corona
    corona_instances: int = 20
    corona_epsilon: float = 0.75
    corona_r: int = 2
    corona_k_min: int = -14
    C0: float = 64.0
    c_select: float = 0.5
    # disk
    disk_instances: int = 10
    clark_degrees: tuple = (1, 2, 3, 4, 5, 6, 7, 8)
    tolerance: float | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    workers: int = 1

    def __post_init__(self):
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    def tol(self, key: str) -> float:
        return float(self.tolerance) if self.tolerance is not None else float(self.tolerances[key])

    @property
    def params(self) -> GridParams:
        return GridParams(self.epsilon, self.r, self.k_min, self.k_max)

    @property
    def corona_params(self) -> GridParams:
        return GridParams(self.corona_epsilon, self.corona_r, self.corona_k_min, self.k_max)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for k in ("families", "pbad_rs", "clark_degrees"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SuiteConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    observed: dict
    witness: dict | None = None

    def line(self) -> str:
        return f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] {self.name}"

    def to_dict(self) -> dict:
        return {"criterion": self.number, "name": self.name, "verdict": "pass" if self.passed else "fail",
                "observed": self.observed, "witness": self.witness}


def _streams(seed: int, n: int) -> list:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _component_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([seed, tag]).generate_state(1)[0])


# ---------------------------------------------------------------- one instance


def instance_recipe(config: SuiteConfig, index: int) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1, index]))
    family = config.families[index % len(config.families)]
    n = int(rng.integers(config.atoms_min, config.atoms_max + 1))
    return {"index": index, "family": family, "n_atoms": n, "rng": rng}


def build_instance(config: SuiteConfig, index: int) -> tuple:
    recipe = instance_recipe(config, index)
    sigma, tau = make_instance(recipe["family"], recipe["n_atoms"], recipe["rng"])
    return recipe, sigma, tau


def verify_instance(config: SuiteConfig, sigma: Measure1D, tau: Measure2D, rng=None,
                    energies: bool = True) -> dict:
    """Constants, necessity verdicts, N/R and spot checks for one pair of measures."""
    rng = rng or np.random.default_rng(config.seed)
    tol = config.tol("necessity")
    try:
        rep = characterize(sigma, tau, config.params, config.n_shift, config.seed, config.norm_tol)
    except SingularPairError as exc:
        return {"flagged": str(exc), "verdict": "flagged"}
    n = rep.n_direct
    checks = {
        "t_forward_le_N": bool(rep.t_forward <= n + tol),
        "t_backward_le_N": bool(rep.t_backward <= n + tol),
        "a2_le_16N2": bool(rep.a2 <= 16 * n ** 2 + tol),
    }
    out = {"constants": rep.to_dict(), "n_over_r": rep.n_over_r, "checks": checks,
           "a2_over_N2": _ratio(rep.a2, n ** 2)}
    if energies and len(sigma) and len(tau):
        grid = Grid.standard(config.params)
        I0 = grid.interval_containing(0.5, config.k_max)
        part = random_partition(I0, rng, 0.6, config.k_min + config.r + 2)
        e1 = energy_inequality_report(sigma, tau, I0, part, "I", rep.r_char)
        e2 = energy_inequality_report(sigma, tau, I0, part, "II", rep.r_char)
        out["energy_I"] = e1.ratio
        out["energy_II"] = e2.ratio
        J = grid.interval(config.k_min + 4, int(grid.locate(0.5, config.k_min + 4)))
        t = J.left + J.length * rng.random(64)
        side = np.where(rng.random(64) < 0.5, I0.left - 2 * rng.random(64), I0.right + 2 * rng.random(64))
        d = np.maximum(I0.left - side, side - I0.right)
        x = np.column_stack([side, d * rng.random(64)])
        bc = bigger_check(I0, J, t, x)
        checks["bigger_sign"] = bc.all_nonnegative
    out["verdict"] = "pass" if all(checks.values()) else "fail"
    return out


def _run_instance(args) -> dict:
    config, index = args
    recipe, sigma, tau = build_instance(config, index)
    res = verify_instance(config, sigma, tau, recipe["rng"])
    fine = config.params.k_min - 2
    delta = 2.0 ** fine
    try:
        ref = characterize(refine_split(sigma, delta), refine_split(tau, delta), config.params,
                           config.n_shift, config.seed, config.norm_tol)
        res["n_over_r_refined"] = ref.n_over_r
    except SingularPairError as exc:
        res["n_over_r_refined"] = None
        res["flagged_refined"] = str(exc)
    res.update(index=index, family=recipe["family"], n_atoms=recipe["n_atoms"])
    return res


def run_instances(config: SuiteConfig) -> list:
    jobs = [(config, i) for i in range(config.n_instances)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            return list(ex.map(_run_instance, jobs))
    return [_run_instance(j) for j in jobs]


# ---------------------------------------------------------------- criteria


def criterion_necessity(config: SuiteConfig, rows: list) -> CriterionResult:
    ok = [r for r in rows if r.get("verdict") != "flagged"]
    fails = [r["index"] for r in ok if not all(r["checks"][k] for k in
                                               ("t_forward_le_N", "t_backward_le_N", "a2_le_16N2"))]
    slack = max((max(r["constants"]["t_forward"], r["constants"]["t_backward"]) - r["constants"]["n_direct"]
                 for r in ok), default=0.0)
    a2n = max((r["a2_over_N2"] for r in ok), default=0.0)
    return CriterionResult(1, "necessity: t <= N and A2 <= 16 N^2", not fails and len(ok) > 0,
                           {"instances": len(rows), "flagged": len(rows) - len(ok), "max_t_minus_N": slack,
                            "max_a2_over_N2": a2n, "failures": fails})


def criterion_ratio(config: SuiteConfig, rows: list) -> CriterionResult:
    ok = [r for r in rows if r.get("verdict") != "flagged" and r.get("n_over_r_refined") is not None]
    if not ok:
        return CriterionResult(2, "N/(A2^1/2 + T) stable under atom splitting", False, {"instances": 0})
    a = max(ok, key=lambda r: r["n_over_r"])
    b = max(ok, key=lambda r: r["n_over_r_refined"])
    m0, m1 = a["n_over_r"], b["n_over_r_refined"]
    change = max(_ratio(m0, m1), _ratio(m1, m0))
    passed = bool(np.isfinite(m0) and np.isfinite(m1) and change < 2.0)
    return CriterionResult(2, "N/(A2^1/2 + T) stable under atom splitting", passed,
                           {"max_ratio": m0, "max_ratio_refined": m1, "change_factor": change},
                           {"instance": a["index"], "family": a["family"],
                            "refined_instance": b["index"]})


def _multiscale_instance(rng, n: int, params: GridParams) -> tuple:
    """Clustered atoms whose Haar nodes reach the fine scales where badness lives."""
    centers = rng.random(max(1, n // 8))
    depth = params.k_max - params.k_min - 8
    pos = np.mod(centers[rng.integers(0, len(centers), n)] + 2.0 ** (-depth * rng.random(n)) * rng.random(n), 1.0)
    sigma = Measure1D(pos, 0.1 + rng.random(n))
    return sigma, rng.standard_normal(n), admissible_grid(rng, params, sigma)


def criterion_grid(config: SuiteConfig) -> CriterionResult:
    eps = config.pbad_epsilon
    obs, passed = {}, True
    for i, r in enumerate(config.pbad_rs):
        k_max = 0
        p = GridParams(eps, r, k_max - config.pbad_window, k_max)
        pb = estimate_pbad(p, config.pbad_trials, _component_seed(config.seed, 30 + i))
        bound = pbad_bound(eps, r, 4.0)
        # E ||P_bad f||^2 / ||f||^2 over random grids
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 31, i]))
        hp = GridParams(eps, r, k_max - config.pbad_haar_window, k_max)
        fracs = []
        for _ in range(config.pbad_grids):
            sigma, f, grid = _multiscale_instance(rng, config.pbad_atoms, hp)
            ex = analyze(sigma, f, grid)
            _, bad = split_good_bad(ex)
            fracs.append(_ratio(float(np.sum(bad.coeffs ** 2)), float(np.sum(f ** 2 * sigma.masses))))
        mean_bad = float(np.mean(fracs))
        bound2 = 2.0 * bound
        ok = pb <= bound and mean_bad <= bound2
        passed &= ok
        obs[f"r={r}"] = {"p_bad": pb, "p_bad_bound": bound, "mean_bad_energy": mean_bad,
                         "bad_energy_bound": bound2, "pass": ok}
    return CriterionResult(3, "grid statistics: p_bad and bad-part energy", passed, obs)


def criterion_haar(config: SuiteConfig) -> CriterionResult:
    tol = config.tol("haar")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 4]))
    params = GridParams(config.epsilon, config.r, -24, config.k_max)
    worst = {"orthonormality": 0.0, "mean_zero": 0.0, "parseval": 0.0, "reconstruction": 0.0}
    for _ in range(config.haar_instances):
        sigma, f, grid = haar_instance(rng, int(rng.integers(16, 65)), params)
        hs = HaarSystem(sigma, grid)
        H = hs.matrix()
        w = sigma.masses
        gram = (H * w) @ H.T
        worst["orthonormality"] = max(worst["orthonormality"], float(np.abs(gram - np.eye(len(H))).max()))
        worst["mean_zero"] = max(worst["mean_zero"], float(np.abs(H @ w).max()))
        ex = analyze(sigma, f, grid)
        nf = float(np.sum(f ** 2 * w))
        worst["parseval"] = max(worst["parseval"], abs(ex.norm2() - nf) / nf)
        from .haar import synthesize
        worst["reconstruction"] = max(worst["reconstruction"], float(np.abs(synthesize(ex) - f).max()))
    passed = all(v <= tol for v in worst.values())
    return CriterionResult(4, "Haar orthonormality, mean zero, Parseval", passed,
                           {"instances": config.haar_instances, "tolerance": tol, **worst})


def criterion_energy(config: SuiteConfig) -> CriterionResult:
    # goodness-weighted energies vanish for small r at small epsilon, so use the corona window
    params = GridParams(config.corona_epsilon, config.corona_r, -16, config.k_max)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 5]))
    rows = []
    worst_overlap = 0
    for i in range(config.energy_instances):
        family = config.families[i % len(config.families)]
        sigma, tau = make_instance(family, int(rng.integers(config.atoms_min, config.atoms_max + 1)), rng)
        grid = admissible_grid(rng, params, sigma, tau, resolve=False, cover=(0.0, 1.0))
        I0 = grid.interval_containing(0.0, params.k_max)
        rc = characterize(sigma, tau, params, config.n_shift, config.seed, config.norm_tol).r_char
        part = random_partition(I0, rng, 0.6, params.k_min + params.r + 3)
        fine = refine_partition(part)
        row = {"index": i, "family": family}
        for which in ("I", "II"):
            row[which] = energy_inequality_report(sigma, tau, I0, part, which, rc).ratio
            row[which + "_refined"] = energy_inequality_report(sigma, tau, I0, fine, which, rc).ratio
        x1 = I0.left - I0.length + 3 * I0.length * rng.random(config.overlap_samples)
        x2 = I0.length / 8 * 2.0 ** (-12 * rng.random(config.overlap_samples))
        row["overlap"] = overlap_max(part, np.column_stack([x1, x2]))
        worst_overlap = max(worst_overlap, row["overlap"])
        rows.append(row)
    obs = {"instances": len(rows), "max_overlap": worst_overlap}
    passed = worst_overlap <= 2
    for which in ("I", "II"):
        vals = np.array([r[which] for r in rows])
        ref = np.array([r[which + "_refined"] for r in rows])
        finite = bool(np.all(np.isfinite(vals)) and np.all(np.isfinite(ref)))
        nonneg = bool(np.all(vals >= 0) and np.all(ref >= 0))
        c0, c1 = float(vals.max()), float(ref.max())
        change = max(_ratio(c0, c1), _ratio(c1, c0)) if max(c0, c1) > 0 else 1.0
        ok = finite and nonneg and change <= 2.0
        passed &= ok
        per = [max(_ratio(a, b), _ratio(b, a)) for a, b in zip(vals, ref) if max(a, b) > 0]
        obs[f"energy_{which}"] = {"C_obs": c0, "C_obs_refined": c1, "change_factor": change,
                                  "finite": finite, "nonnegative": nonneg,
                                  "max_instance_change": float(max(per, default=1.0)), "pass": ok}
    return CriterionResult(5, "energy inequalities: finite, nonnegative, stable; V-overlap <= 2", passed, obs)


def _mono_family(rng, grid: Grid, I: DyadicInterval, which: str):
    k = int(rng.integers(grid.params.k_min + 3, I.k - 4))
    lo, hi = I.left + 4.5 * 2.0 ** k, I.right - 5.5 * 2.0 ** k
    J = grid.interval_containing(lo + (hi - lo) * rng.random(), k)
    n = 24
    if which == "I":
        inside = J.left + J.length * rng.random(n)
        sigma = Measure1D(np.concatenate([inside, rng.random(n)]), 0.1 + rng.random(2 * n))
        side = np.where(rng.random(n) < 0.5, I.left - 2 * rng.random(n), I.right + 2 * rng.random(n))
        d = np.maximum(I.left - side, side - I.right)
        tau = Measure2D(np.column_stack([side, 0.5 * d * rng.random(n)]), 0.1 + rng.random(n))
        phi = 0.1 + rng.random(len(tau))
        return MonotonicityConfig(sigma, tau, I, J, phi=phi)
    side = np.where(rng.random(n) < 0.5, I.left - 2 * rng.random(n), I.right + 2 * rng.random(n))
    sigma = Measure1D(side, 0.1 + rng.random(n))
    x = np.column_stack([J.left + J.length * rng.random(n), J.length * rng.random(n)])
    tau = Measure2D(x, 0.1 + rng.random(n))
    return MonotonicityConfig(sigma, tau, I, J, f=0.1 + rng.random(len(sigma)))


def criterion_monotonicity(config: SuiteConfig) -> CriterionResult:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 6]))
    params = GridParams(config.epsilon, config.r, -16, 1)
    grid = Grid.standard(params)
    I = grid.interval(0, 0)
    # pointwise sign comparison
    per = 100
    n_cfg = max(1, config.mono_samples // per)
    min_signed, c_obs = np.inf, np.inf
    for _ in range(n_cfg):
        k = int(rng.integers(params.k_min + 3, -4))
        lo, hi = 4.5 * 2.0 ** k, 1 - 5.5 * 2.0 ** k
        J = grid.interval_containing(lo + (hi - lo) * rng.random(), k)
        t = J.left + J.length * rng.random(per)
        side = np.where(rng.random(per) < 0.5, -3 * rng.random(per), 1 + 3 * rng.random(per))
        d = np.maximum(-side, side - 1)
        x = np.column_stack([side, d * rng.random(per)])
        bc = bigger_check(I, J, t, x)
        min_signed = min(min_signed, bc.min_signed)
        c_obs = min(c_obs, bc.c_observed)
    bigger_ok = bool(min_signed >= 0)
    lo_r, hi_r = np.inf, 0.0
    for _ in range(config.mono_family):
        rep = monotonicity_report(_mono_family(rng, grid, I, "I"), "I")
        up, down = rep.ratios["monoI2_upper"], rep.ratios["monoI2_lower"]
        if up.size:
            lo_r = min(lo_r, float(up.min()))
            hi_r = max(hi_r, float(up.max()))
            lo_r = min(lo_r, float(1 / down.max())) if down.max() > 0 else lo_r
    c = config.mono_constant
    mono2_ok = bool(lo_r >= 1 / c and hi_r <= c)
    gt_max = 0.0
    for _ in range(config.mono_family):
        rep = monotonicity_report(_mono_family(rng, grid, I, "II"), "II")
        gt_max = max(gt_max, float(rep.ratios["monoII_gt"].max()))
    gt_ok = gt_max <= c
    return CriterionResult(6, "monotonicity: sign, two-sided ratios, lower bound", bigger_ok and mono2_ok and gt_ok,
                           {"sign_samples": n_cfg * per, "min_signed_increment": float(min_signed),
                            "c_observed": float(c_obs), "monoI2_min": lo_r, "monoI2_max": hi_r,
                            "monoII_gt_max": gt_max, "constant": c,
                            "pass": {"sign": bigger_ok, "monoI2": mono2_ok, "monoII_gt": gt_ok}})


def corona_instance(config: SuiteConfig, index: int) -> dict:
    """Stopping trees and the size/triangular/mu diagnostics for one instance."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 7, index]))
    params = config.corona_params
    family = ("nested", "boundary", "separated", "lebesgue")[index % 4]
    sigma, tau = make_instance(family, int(rng.integers(24, 65)), rng)
    grid = admissible_grid(rng, params, sigma, tau, resolve=False, cover=(0.0, 1.0))
    rc = characterize(sigma, tau, params, config.n_shift, config.seed, config.norm_tol)
    R = rc.r_char
    root = grid.interval_containing(0.0, params.k_max)
    g = np.exp(2.5 * rng.standard_normal(len(tau)))
    f = rng.standard_normal(len(sigma))
    gtree = corona.build_stopping_tree("g-side", sigma, tau, g, root, config.C0, R)
    ftree = corona.build_stopping_tree("f-side", sigma, tau, f, root, config.C0, R)
    gtree.validate()
    ftree.validate()
    out = {"index": index, "family": family, "r_char": R, "tree_nodes": len(gtree), "f_tree_nodes": len(ftree),
           "carleson_ratio": corona.carleson_ratio(gtree),
           "carleson_ratio_descendants": corona.carleson_ratio(gtree, descendants=True),
           "f_carleson_ratio": corona.carleson_ratio(ftree),
           "causes": sorted({nd.cause for nd in gtree.nodes[1:]}),
           "minimal_C0": corona.minimal_working_c0("g-side", sigma, tau, g, root, R),
           "quasi_orthogonality": corona.quasi_orthogonality_ratio(gtree, f, g, sigma, tau)}
    sizes, accretion, antichain, l0_empty = [], True, True, 0
    for node in range(len(gtree)):
        F = gtree.nodes[node].interval
        col = corona.collection_from_tree(gtree, sigma, node)
        if not col.pairs:
            continue
        rep = corona.size_functional(col, sigma, tau, F, gtree, node)
        sizes.append(_ratio(rep.size, R))
        lcol = corona.select_L_collection(col, config.c_select, sigma, tau, F, rep.size)
        accretion &= lcol.accretion_ok
        for layer in lcol.layers:
            antichain &= all(not (a.key != b.key and a.contains_interval(b)) for a in layer for b in layer)
        l0_empty += int(not lcol.layers or not lcol.layers[0])
    out.update(size_over_R=max(sizes, default=0.0), collections=len(sizes), accretion=accretion,
               antichain=antichain, L0_empty=l0_empty)
    f2 = corona.lacunary_f(sigma, f, grid)
    g2 = corona.lacunary_g(tau, g, grid)
    nf = float(np.sqrt(np.sum(f2 ** 2 * sigma.masses)))
    ng = float(np.sqrt(np.sum(g2 ** 2 * tau.masses)))
    tri = corona.triangular_forms(f2, g2, sigma, tau, grid)
    out["triangular_residual_over_R"] = _ratio(abs(tri.residual), R * nf * ng) if nf * ng > 0 else None
    out["carleson_projection_over_T"] = _ratio(corona.carleson_projection_ratio(sigma, tau, g, grid), rc.t)
    mu = corona.mu_measure(gtree, sigma)
    out["mu_strip_ratio"] = corona.mu_strip_ratio(mu, sigma, grid)
    return out


def criterion_corona(config: SuiteConfig) -> CriterionResult:
    rows = [corona_instance(config, i) for i in range(config.corona_instances)]
    tol = config.tol("strip")
    tree_ok = all(r["carleson_ratio"] <= 0.5 for r in rows)
    strip_ok = all(r["mu_strip_ratio"] <= 1 + tol for r in rows)
    struct_ok = all(r["accretion"] and r["antichain"] for r in rows)
    c_sz = max(r["size_over_R"] for r in rows)
    tri = [r["triangular_residual_over_R"] for r in rows if r["triangular_residual_over_R"] is not None]
    c_tri = max(tri, default=0.0)
    finite = bool(np.isfinite(c_sz) and np.isfinite(c_tri))
    worst = max(rows, key=lambda r: r["carleson_ratio"])
    obs = {"instances": len(rows), "max_carleson_ratio": worst["carleson_ratio"],
           "max_carleson_ratio_descendants": max(r["carleson_ratio_descendants"] for r in rows),
           "max_f_carleson_ratio": max(r["f_carleson_ratio"] for r in rows),
           "nontrivial_trees": sum(r["tree_nodes"] > 1 for r in rows),
           "minimal_C0": [r["minimal_C0"] for r in rows],
           "C_qo": max(r["quasi_orthogonality"] for r in rows),
           "C_sz": c_sz, "C_tri": c_tri, "triangular_samples": len(tri),
           "carleson_projection_over_T_max": max(r["carleson_projection_over_T"] for r in rows),
           "max_mu_strip_ratio": max(r["mu_strip_ratio"] for r in rows),
           "L0_empty": sum(r["L0_empty"] for r in rows),
           "pass": {"tau_carleson": tree_ok, "mu_strip": strip_ok, "structure": struct_ok, "finite": finite}}
    return CriterionResult(7, "corona: Carleson ratio <= 1/2, size and residual constants, mu strips",
                           tree_ok and strip_ok and struct_ok and finite, obs,
                           {"instance": worst["index"], "family": worst["family"]})


def criterion_hardy(config: SuiteConfig) -> CriterionResult:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 8]))
    tol = config.tol("hardy")
    lo, hi, ok = np.inf, 0.0, True
    for _ in range(config.hardy_instances):
        w, s = hardy_weights(rng, int(rng.integers(4, 41)))
        h = hardy(w, s)
        lo, hi = min(lo, h.ratio), max(hi, h.ratio)
        ok &= h.direct_norm >= h.B - tol
    passed = bool(ok and lo >= 1 - tol and hi <= 4)
    return CriterionResult(8, "Hardy: direct/B in [1, 4]", passed,
                           {"instances": config.hardy_instances, "min_ratio": lo, "max_ratio": hi})


def criterion_disk(config: SuiteConfig) -> CriterionResult:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 9]))
    tol_c, tol_m, tol_n = config.tol("clark"), config.tol("clark_mass"), config.tol("necessity")
    z_grid = default_z_grid(100)
    res_max = 0.0
    for d in config.clark_degrees:
        theta = InnerFunction(random_blaschke(rng, d))
        sigma = clark_measure(theta, check=False)
        res_max = max(res_max, clark_residual(theta, sigma, z_grid))
    s1 = clark_measure(InnerFunction((0,)), check=False)
    s2 = clark_measure(InnerFunction((0, 0)), check=False)
    err1 = max(abs(len(s1) - 1), abs(s1.masses[0] - 1), min(s1.positions[0], TWO_PI - s1.positions[0]))
    ang = np.sort(s2.positions)
    err2 = float(max(abs(len(s2) - 2), np.abs(s2.masses - 0.5).max(),
                     min(ang[0], TWO_PI - ang[0]), abs(ang[1] - np.pi)))
    slack, c_eq = -np.inf, 0.0
    probe_ok = True
    for _ in range(config.disk_instances):
        theta = InnerFunction(random_blaschke(rng, int(rng.integers(1, 5)), 0.8))
        sigma = clark_measure(theta)
        _, mu = disk_instance(rng, 1, int(rng.integers(4, 17)), 0.95)
        nu = nu_measure(theta, mu)
        rep = disk_constants(sigma, nu)
        slack = max(slack, rep.t_forward - rep.n_direct, rep.t_backward - rep.n_direct)
        probe = kernel_probe(theta, mu, default_z_samples(12, 48, 0.99)).value
        probe_ok = probe_ok and bool(probe <= rep.n_direct ** 2 * (1 + 1e-9) + 1e-12)
        c_eq = max(c_eq, _ratio(probe, rep.r_char ** 2))
    # boundary-separated: tau inside |z| <= 0.9, sigma a Clark measure on the circle
    prof_end = 0.0
    for _ in range(3):
        theta = InnerFunction(random_blaschke(rng, 3, 0.8))
        sigma = clark_measure(theta)
        _, tau = disk_instance(rng, 1, 12, 0.9)
        prof = compactness_profile(sigma, tau, 1 - np.geomspace(0.5, 1e-9, 12), [0.5, 0.1, 0.05, 0.01, 0.001])
        for arr in (prof.a2_tail, prof.t_forward, prof.t_backward):
            if np.any(np.diff(arr) > 1e-15 * max(1.0, arr.max())):
                probe_ok = False
        prof_end = max(prof_end, prof.a2_tail[-1], prof.t_forward[-1], prof.t_backward[-1])
    checks = {"clark_residual": bool(res_max < tol_c), "clark_z": err1 <= tol_m, "clark_z2": err2 <= tol_m,
              "necessity": slack <= tol_n, "probe_and_monotone": probe_ok,
              "profiles_reach_zero": bool(prof_end <= config.tol("profile"))}
    return CriterionResult(9, "disk: Clark identity, atoms, necessity, kernel probe, compactness",
                           all(checks.values()),
                           {"clark_residual_max": res_max, "clark_z_error": float(err1), "clark_z2_error": err2,
                            "max_t_minus_N": float(slack), "C_eq": c_eq, "profile_end_max": float(prof_end),
                            "pass": checks})


# ---------------------------------------------------------------- driver


@dataclass
class SuiteReport:
    config: dict
    criteria: list
    instances: list
    timings: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_dict(self) -> dict:
        return {"config": self.config, "passed": self.passed,
                "criteria": [c.to_dict() for c in self.criteria], "instances": self.instances}

    def csv_rows(self) -> list:
        return [(c.number, c.name, "pass" if c.passed else "fail", json.dumps(c.observed, sort_keys=True,
                                                                             default=float))
                for c in self.criteria]

    def instance_rows(self) -> list:
        out = []
        for r in self.instances:
            c = r.get("constants", {})
            out.append((r["index"], r["family"], r["n_atoms"], c.get("a2"), c.get("t_forward"),
                        c.get("t_backward"), c.get("n_direct"), r.get("n_over_r"), r.get("n_over_r_refined"),
                        r.get("energy_I"), r.get("energy_II"), r.get("verdict")))
        return out


INSTANCE_HEADER = ["index", "family", "n_atoms", "a2", "t_forward", "t_backward", "n_direct", "n_over_r",
                   "n_over_r_refined", "energy_I", "energy_II", "verdict"]

CRITERIA = {
    1: "necessity", 2: "ratio", 3: "grid", 4: "haar", 5: "energy", 6: "monotonicity", 7: "corona",
    8: "hardy", 9: "disk",
}


def run_suite(config: SuiteConfig, only=None, log=None) -> SuiteReport:
    """Run the selected acceptance criteria (all by default)."""
    only = set(only or CRITERIA)
    timings, results, rows = {}, [], []
    say = log or (lambda msg: None)
    if only & {1, 2}:
        t0 = time.perf_counter()
        rows = run_instances(config)
        timings["instances"] = time.perf_counter() - t0
        if 1 in only:
            results.append(criterion_necessity(config, rows))
            say(results[-1].line())
        if 2 in only:
            results.append(criterion_ratio(config, rows))
            say(results[-1].line())
    steps = [(3, criterion_grid), (4, criterion_haar), (5, criterion_energy), (6, criterion_monotonicity),
             (7, criterion_corona), (8, criterion_hardy), (9, criterion_disk)]
    for number, fn in steps:
        if number in only:
            t0 = time.perf_counter()
            results.append(fn(config))
            timings[CRITERIA[number]] = time.perf_counter() - t0
            say(results[-1].line())
    results.sort(key=lambda c: c.number)
    return SuiteReport(config.to_dict(), results, rows, timings)


def quick_config(**overrides) -> SuiteConfig:
    """Reduced sizes for smoke runs; the energy suite keeps its full size since
    its stability check compares maxima over the whole suite."""
    base = dict(n_instances=16, pbad_trials=2000, pbad_grids=20, haar_instances=10,
                mono_samples=1000, mono_family=10, hardy_instances=10, corona_instances=4, disk_instances=3)
    base.update(overrides)
    return replace(SuiteConfig(), **base)
