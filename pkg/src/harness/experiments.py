# src/harness/experiments.py

"""
Experiment routines behind the CLI. Each takes an ExperimentConfig and a
MonteCarloRunner and returns an ExperimentReport with rows and checks.
"""

import logging
import time
import numpy as np

from src.spectral.core import TorusGrid, dealiased_product, derivative, forward, inverse, project_modes
from src.besov.partition import build_partition, block, OUTER_RADIUS
from src.besov.paraproducts import paraproduct_decompose, paraproduct, resonant
from src.besov.norms import (
    block_lp_norms, besov_norm, holder_norm, holder_quotient_norm, lp_norm, schauder_ratio, bernstein_ratios,
    embedding_ratio,
)
from src.fields.streams import NoiseStream, TAG_SPACE_NOISE
from src.fields.gaussian import (
    WHITE_NOISE_VARIANCE, RadialProfile, sample_white_noise_ensemble, sample_potential_ensemble, ou_initial_state,
    ou_path, hermite_pair, hermite_decay, potential_response, grad_X_potential_variance, sample_fractional_ensemble,
)
from src.wick.algebra import check_product_identity, random_gram
from src.wick.trees import LEAF, CHERRY, CHAIN, CHAIN3, BALANCED, trees_of_degree, catalan, planar_multiplicities
from src.renormalization.constants import (
    SumSpec, constants_table, heat_trace_gt, heat_trace_integral, pam_counterterm_fn, ou_square_variance_partial,
    potential_block_variance, potential_grad_variance_bound, sigma_sq_eps,
)
from src.burgers.galerkin import (
    GalerkinBurgers, galerkin_grid, drift_energy_pairing, energy, ou_driven_drift, drift_cauchy_differences,
)
from src.pam.enhancement import build_pam_enhancement, resonant_increment_moments, PAM_NOISE_VARIANCE
from src.pam.solvers import (
    solve_pam_direct, solve_pam_linear_transform, solve_pam_paracontrolled, relative_sup_difference,
    enhancement_response,
)
from src.sbe.enhancement import build_sbe_enhancement, regularity_ladder
from src.sbe.solver import (
    solve_sbe_paracontrolled, closure_residual, galerkin_discrepancy, tree_expansion_residuals, matched_galerkin,
    truncated_tree_expansion,
)
from src.harness.report import ExperimentReport, BUILD_ID
from src.harness.stats import mean_stderr, within, fit_log_log, fit_log_linear, fitted_constant, log_fitted_constant
from src.harness.fixtures import check_fixtures, ensure_fixtures
from src.utils.errors import UsageError

logger = logging.getLogger(__name__)

EXPERIMENTS = {}

# CLI subcommand -> experiments it runs
SUBCOMMANDS = {
    "partition-check": ("partition-check",),
    "noise": ("noise",),
    "ou": ("ou-moments", "hermite-decay"),
    "burgers": ("burgers", "drift-cauchy"),
    "pam": ("pam",),
    "sbe": ("sbe",),
    "renorm": ("renorm-constants", "homogenization"),
    "wick": ("wick",),
}


def experiment(name):
    def register(fn):
        EXPERIMENTS[name] = fn
        return fn
    return register


def run_experiment(cfg, runner):
    """
    Dispatch cfg.name to its routine.

    Returns:
        ExperimentReport with metadata (seed, build id, wall time)
    """
    if cfg.name not in EXPERIMENTS:
        raise UsageError(f"Unknown experiment {cfg.name!r}; choose from {', '.join(sorted(EXPERIMENTS))}")
    logger.info(f"Running experiment {cfg.name} seed={cfg.seed} replicas={cfg.replicas}")
    start = time.perf_counter()
    report = EXPERIMENTS[cfg.name](cfg, runner)
    elapsed = time.perf_counter() - start
    report.metadata.update({"experiment": cfg.name, "seed": cfg.seed, "replicas": cfg.replicas,
                            "build": BUILD_ID, "wall_time": round(elapsed, 3)})
    runner.metrics.record_run(cfg.name, elapsed, len(report.rows), len(report.failures))
    logger.info(f"{cfg.name}: {len(report.rows)} rows, {len(report.failures)} failed checks in {elapsed:.1f}s")
    return report


def _levels(value):
    return [value] if np.isscalar(value) else list(value)


@experiment("partition-check")
def partition_check(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    M, d = int(cfg.get("partition_modes", 64)), int(cfg.get("partition_dim", 2))
    grid = TorusGrid(d, M)
    part = build_partition(grid)
    rng = np.random.default_rng(cfg.seed)

    defect = part.unity_defect()
    report.add(name, {"M": M, "d": d}, "unity_defect", defect)
    report.check("partition_of_unity", defect <= 1e-12, f"defect {defect:.3e}")

    pairs = int(cfg.get("partition_pairs", 20))
    f = forward(rng.standard_normal((pairs,) + grid.shape), grid)
    g = forward(rng.standard_normal((pairs,) + grid.shape), grid)
    split = paraproduct_decompose(f, g, part)
    exact = dealiased_product(f, g)
    bony = float(np.max(np.abs((split.less + split.greater + split.resonant - exact).coeffs)))
    bony /= max(1.0, float(np.max(np.abs(exact.coeffs))))
    report.add(name, {"M": M, "d": d, "pairs": pairs}, "bony_defect", bony)
    report.check("bony_decomposition", bony <= 1e-10, f"relative defect {bony:.3e}")

    # brute-force convolution on a small 1d grid
    small = TorusGrid(1, 16)
    a = forward(rng.standard_normal(small.shape), small)
    b = forward(rng.standard_normal(small.shape), small)
    prod = dealiased_product(a, b)
    band = small.band
    worst = 0.0
    for k in range(-band, band + 1):
        direct = sum(a.coefficient(l) * b.coefficient(k - l)
                     for l in range(-band, band + 1) if abs(k - l) <= band) / np.sqrt(2.0 * np.pi)
        worst = max(worst, abs(complex(prod.coefficient(k)) - direct))
    report.add(name, {"M": 16, "d": 1}, "convolution_defect", worst)
    report.check("convolution_oracle", worst <= 1e-12, f"max defect {worst:.3e}")

    delta_values = np.zeros(grid.shape)
    delta_values[(0,) * d] = 1.0 / grid.cell_volume
    sups = block_lp_norms(forward(delta_values, grid), part)
    full = [j for j in part.block_indices if j >= 1 and OUTER_RADIUS * 2.0 ** j <= grid.band]
    scaled = np.array([sups[j + 1] / 2.0 ** (j * d) for j in full])
    for j, s in zip(full, scaled):
        report.add(name, {"M": M, "d": d, "j": j}, "delta_block_sup_scaled", s)
    if scaled.size:
        spread = float(scaled.max() / scaled.min())
        report.check("delta_block_scaling", spread <= 4.0, f"max/min of sup_j / 2^(jd) = {spread:.3f}")

    wn_replicas = int(cfg.get("partition_noise_replicas", 8))
    ratios = {}
    for offset in (-0.1, 0.1):
        alpha = -d / 2.0 + offset
        norms = []
        for modes in (M, 2 * M):
            g2 = TorusGrid(d, modes)
            xi = sample_white_noise_ensemble(g2, cfg.seed, range(wn_replicas), WHITE_NOISE_VARIANCE, name)
            norms.append(float(np.mean(besov_norm(xi, alpha, np.inf, np.inf, build_partition(g2)))))
            report.add(name, {"M": modes, "d": d, "alpha": alpha}, "white_noise_besov_norm", norms[-1])
        ratios[offset] = norms[1] / norms[0]
    report.check("white_noise_besov_threshold", ratios[0.1] > ratios[-0.1],
                 f"growth under M -> 2M: {ratios[-0.1]:.3f} below, {ratios[0.1]:.3f} above -d/2")

    xi = sample_white_noise_ensemble(grid, cfg.seed, [0], WHITE_NOISE_VARIANCE, name)[0]
    schauder_bound = cfg.tolerance("schauder", 10.0)
    schauder = []
    for t in _levels(cfg.get("schauder_times", [0.01, 0.1])):
        schauder.append(float(schauder_ratio(xi, t, -d / 2.0 - 0.1, 0.5, part)))
        report.add(name, {"M": M, "d": d, "t": t}, "schauder_ratio", schauder[-1])
    report.check("schauder_bound", all(0.0 < r <= schauder_bound for r in schauder),
                 f"t^beta ||P_t xi||_(alpha+2beta) / ||xi||_alpha in {min(schauder):.3g}..{max(schauder):.3g}, "
                 f"bound {schauder_bound}")

    _inequality_battery(cfg, report)
    return report


def _inequality_battery(cfg, report):
    """Bernstein, paraproduct, Holder-equivalence and embedding constants on 1d grids at two resolutions."""
    name = cfg.name
    n_fields = int(cfg.get("battery_fields", 200))
    resolutions = _levels(cfg.get("battery_modes", [128, 256]))
    ids = range(n_fields)
    beta, alpha = -0.5, 0.7
    equivalence = float(cfg.get("holder_equivalence_constant", 10.0))
    embedding_bound = cfg.tolerance("besov_embedding", 2.0)
    constants = {"bernstein": [], "paraproduct_less": [], "paraproduct_resonant": []}
    holder_ratios, embedding = [], []

    for modes in resolutions:
        grid = TorusGrid(1, modes)
        part = build_partition(grid)
        params = {"M": modes, "d": 1, "fields": n_fields}

        f = sample_fractional_ensemble(grid, 0.5, cfg.seed, ids, name)
        _, ratios = bernstein_ratios(f, part)
        constants["bernstein"].append(log_fitted_constant(ratios, 1.0))
        report.add(name, params, "bernstein_constant", constants["bernstein"][-1])
        report.add(name, params, "bernstein_ratio_max", float(np.max(ratios)))

        smooth = sample_fractional_ensemble(grid, 1.5, cfg.seed, ids, f"{name}:smooth")
        rough = sample_fractional_ensemble(grid, beta + 0.3, cfg.seed, ids, f"{name}:rough")
        lhs = besov_norm(paraproduct(smooth, rough, part), beta, np.inf, np.inf, part)
        rhs = lp_norm(inverse(smooth), grid, np.inf) * holder_norm(rough, beta, part)
        constants["paraproduct_less"].append(log_fitted_constant(lhs, rhs))
        report.add(name, dict(params, beta=beta), "paraproduct_less_constant", constants["paraproduct_less"][-1])

        regular = sample_fractional_ensemble(grid, alpha + 0.3, cfg.seed, ids, f"{name}:regular")
        lhs = besov_norm(resonant(regular, rough, part), alpha + beta, np.inf, np.inf, part)
        rhs = holder_norm(regular, alpha, part) * holder_norm(rough, beta, part)
        constants["paraproduct_resonant"].append(log_fitted_constant(lhs, rhs))
        report.add(name, dict(params, alpha=alpha, beta=beta), "paraproduct_resonant_constant",
                   constants["paraproduct_resonant"][-1])

        for a in (0.3, 0.5, 0.7):
            h = sample_fractional_ensemble(grid, a + 0.2, cfg.seed, ids, f"{name}:holder")
            r = np.ravel(holder_norm(h, a, part) / holder_quotient_norm(h, a))
            holder_ratios.extend(r)
            report.add(name, dict(params, alpha=a), "holder_equivalence_min", float(r.min()))
            report.add(name, dict(params, alpha=a), "holder_equivalence_max", float(r.max()))

        e = np.ravel(embedding_ratio(f, 0.5, 2, np.inf, part))
        embedding.append(float(e.max()))
        report.add(name, dict(params, p1=2, p2="inf"), "besov_embedding_constant", embedding[-1])

    stability = cfg.tolerance("constant_stability", 0.1)
    for label, values in constants.items():
        drift = abs(values[-1] / values[0] - 1.0)
        report.check(f"{label}_constant_stable", drift <= stability,
                     f"C = {values[0]:.4g} at M={resolutions[0]}, {values[-1]:.4g} at M={resolutions[-1]}; "
                     f"relative change {drift:.3f}")
    lo, hi = float(np.min(holder_ratios)), float(np.max(holder_ratios))
    report.check("holder_equivalence", 1.0 / equivalence <= lo and hi <= equivalence,
                 f"Besov / quotient ratios in {lo:.3g}..{hi:.3g}, C = {equivalence}")
    report.check("besov_embedding", max(embedding) <= embedding_bound,
                 f"max ratio {max(embedding):.3g}, bound {embedding_bound}")


@experiment("noise")
def noise(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    M, d = int(cfg.get("noise_modes", 32)), int(cfg.get("noise_dim", 1))
    variance = float(cfg.get("noise_variance", WHITE_NOISE_VARIANCE))
    grid = TorusGrid(d, M)
    ks = [(k,) + (0,) * (d - 1) for k in (1, 2, 3)]

    def batch(ids):
        xi = sample_white_noise_ensemble(grid, cfg.seed, ids, variance, name)
        power = np.stack([np.abs(xi.coefficient(k)) ** 2 for k in ks], axis=-1)
        defects = np.array([xi[i].hermitian_defect() for i in range(len(ids))])
        return power, defects

    power, defects = runner.map(name, cfg.replicas, batch)
    mean, se, n = mean_stderr(power)
    for k, m, s in zip(ks, mean, se):
        report.add(name, {"M": M, "d": d, "k": k[0]}, "mode_power", m, s, n)
        report.check(f"mode_power_k{k[0]}", within(m, variance, s, cfg.z),
                     f"{m:.4f} +- {s:.4f} vs {variance}")
    report.check("hermitian_symmetry", float(np.max(defects)) <= 1e-14, f"max defect {np.max(defects):.2e}")

    a = NoiseStream(grid, cfg.seed, name, 0, TAG_SPACE_NOISE).next_block(4)
    stream = NoiseStream(grid, cfg.seed, name, 0, TAG_SPACE_NOISE)
    b = np.stack([stream.next() for _ in range(4)])
    report.check("block_size_independence", np.array_equal(a, b), "4-step block vs 4 single draws")
    return report


@experiment("ou-moments")
def ou_moments(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    M = int(cfg.get("ou_modes", 64))
    ks = _levels(cfg.get("ou_ks", [1, 2, 3]))
    times = [float(t) for t in _levels(cfg.get("ou_times", [0.1, 0.5]))]
    dt = float(cfg.get("ou_dt", 0.01))
    grid = TorusGrid(1, M)
    steps = [int(round(t / dt)) for t in times]

    def batch(ids):
        state = ou_initial_state(grid, cfg.seed, ids, name)
        path, _ = ou_path(state, dt, max(steps))
        return np.stack([np.stack([np.abs(path.at(s).coefficient(k)) ** 2 for k in ks], axis=-1) for s in steps],
                        axis=1)

    mean, se, n = mean_stderr(runner.map(name, cfg.replicas, batch))
    for i, t in enumerate(times):
        for j, k in enumerate(ks):
            target = -WHITE_NOISE_VARIANCE * np.expm1(-2.0 * k * k * t)
            report.add(name, {"M": M, "k": k, "t": t}, "mode_variance", mean[i, j], se[i, j], n)
            report.add(name, {"M": M, "k": k, "t": t}, "mode_variance_target", target)
            report.check(f"ou_variance_k{k}_t{t}", within(mean[i, j], target, se[i, j], cfg.z),
                         f"{mean[i, j]:.5f} +- {se[i, j]:.5f} vs {target:.5f}")

    partial = []
    for N in (16, 32, 64, 128):
        value = ou_square_variance_partial(1, 1.0, N) / (2.0 * np.pi)
        partial.append(value)
        report.add(name, {"k": 1, "t": 1.0, "N": N}, "square_variance_partial", value)
    report.check("square_variance_diverges", bool(np.all(np.diff(partial) > 0)), "partial sums increase with N")
    return report


@experiment("hermite-decay")
def hermite_decay_experiment(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    M = int(cfg.get("hermite_modes", 16))
    t, dt = float(cfg.get("hermite_t", 0.2)), float(cfg.get("hermite_dt", 0.05))
    pairs = [tuple(p) for p in cfg.get("hermite_pairs", [[1, 2], [1, 1], [2, -2]])]
    grid = TorusGrid(1, M)
    v = WHITE_NOISE_VARIANCE

    def batch(ids):
        state = ou_initial_state(grid, cfg.seed, ids, name, stationary=True)
        h0 = [hermite_pair(state.field, l, m) for l, m in pairs]
        _, final = ou_path(state, dt, int(round(t / dt)))
        return np.stack([np.real(hermite_pair(final.field, l, m) * np.conj(h))
                         for (l, m), h in zip(pairs, h0)], axis=-1)

    mean, se, n = mean_stderr(runner.map(name, cfg.replicas, batch))
    for (l, m), mu, s in zip(pairs, mean, se):
        target = hermite_decay(l, m, t) * v * v * (2.0 if l == m else 1.0)
        report.add(name, {"l": l, "m": m, "t": t}, "hermite_correlation", mu, s, n)
        report.check(f"hermite_decay_{l}_{m}", within(mu, target, s, cfg.z), f"{mu:.5f} +- {s:.5f} vs {target:.5f}")
    return report


@experiment("burgers")
def burgers(cfg, runner):
    name = cfg.name
    report = ExperimentReport()

    N_anti = int(cfg.get("burgers_antisymmetry_N", 32))
    grid = galerkin_grid(N_anti)
    v = project_modes(sample_white_noise_ensemble(grid, cfg.seed, range(100), WHITE_NOISE_VARIANCE,
                                                  f"{name}-antisymmetry"), N_anti)
    ratio = np.abs(drift_energy_pairing(v, N_anti)) / np.sqrt(energy(v)) ** 3
    report.add(name, {"N": N_anti, "states": 100}, "drift_pairing_ratio", float(np.max(ratio)))
    report.check("drift_antisymmetry", float(np.max(ratio)) <= 1e-10, f"max ratio {np.max(ratio):.2e}")

    N, dt = int(cfg.get("burgers_N", 16)), float(cfg.get("burgers_dt", 1e-3))
    T, kmax = float(cfg.get("burgers_t_final", 1.0)), int(cfg.get("burgers_kmax", 8))
    steps = int(round(T / dt))

    def invariance(ids):
        sim = GalerkinBurgers(N, dt, cfg.seed, ids, name)
        state = sim.initial_state(stationary=True)
        for _ in range(steps):
            state = sim.step(state)
        return np.stack([np.abs(state.v.coefficient(k)) ** 2 for k in range(1, kmax + 1)], axis=-1)

    mean, se, n = mean_stderr(runner.map(name, cfg.replicas, invariance))
    for k in range(1, kmax + 1):
        report.add(name, {"N": N, "T": T, "dt": dt, "k": k}, "stationary_mode_power", mean[k - 1], se[k - 1], n)
        report.check(f"invariance_k{k}", within(mean[k - 1], WHITE_NOISE_VARIANCE, se[k - 1], cfg.z),
                     f"{mean[k - 1]:.4f} +- {se[k - 1]:.4f} vs {WHITE_NOISE_VARIANCE}")

    N_d, dt_d = int(cfg.get("drift_N", 32)), float(cfg.get("drift_dt", 2e-3))
    t_d = float(cfg.get("drift_t", 4.0))
    ks = list(range(int(cfg.get("drift_kmin", 1)), int(cfg.get("drift_kmax", 8)) + 1))

    def drift(ids):
        acc = ou_driven_drift(N_d, dt_d, int(round(t_d / dt_d)), cfg.seed, ids, f"{name}-drift")
        inc = np.stack([np.abs(acc.final.coefficient(k)) ** 2 for k in ks], axis=-1)
        return inc, inc ** 2

    m2s, m4s = runner.map(f"{name}-drift", cfg.replicas, drift)
    m2, se2, n2 = mean_stderr(m2s)
    m4 = m4s.mean(axis=0)
    for k, a, s in zip(ks, m2, se2):
        report.add(name, {"N": N_d, "t": t_d, "k": k}, "drift_second_moment", a, s, n2)
    slope = fit_log_log(ks, m2).slope
    slope4 = fit_log_log(ks, m4).slope
    kurtosis = fitted_constant(m4, m2 ** 2)
    report.add(name, {"N": N_d, "t": t_d}, "drift_moment_slope", slope)
    report.add(name, {"N": N_d, "t": t_d}, "drift_fourth_moment_slope", slope4)
    report.add(name, {"N": N_d, "t": t_d}, "drift_kurtosis_constant", kurtosis)
    report.check("drift_moment_scaling", abs(slope - 1.0) <= cfg.tolerance("drift_slope", 0.3), f"slope {slope:.3f}")
    report.check("drift_fourth_moment_scaling", abs(slope4 - 2.0) <= cfg.tolerance("drift_slope", 0.3),
                 f"slope {slope4:.3f} over k = {ks[0]}..{ks[-1]}")
    report.check("drift_hypercontractivity", kurtosis <= 5.0, f"kurtosis constant {kurtosis:.3f}")
    return report


@experiment("drift-cauchy")
def drift_cauchy(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    levels = [int(x) for x in _levels(cfg.get("drift_levels", [4, 8, 16]))]
    dt, t = float(cfg.get("drift_dt", 2e-3)), float(cfg.get("drift_cauchy_t", 0.5))
    grid = galerkin_grid(2 * max(levels))
    state = ou_initial_state(grid, cfg.seed, range(cfg.replicas), name, stationary=True)
    path, _ = ou_path(state, dt, int(round(t / dt)))
    frame = drift_cauchy_differences(path, levels)
    for rec in frame.itertuples(index=False):
        report.add(name, {"N": int(rec.N), "t": t}, "drift_cauchy_difference", rec.difference, 0.0, cfg.replicas)
    if len(levels) >= 2:
        rate = fit_log_log(frame["N"].to_numpy(), frame["difference"].to_numpy()).slope
        report.add(name, {"t": t}, "drift_cauchy_rate", rate)
    runner.metrics.replicas.labels(experiment=name).inc(cfg.replicas)
    return report


@experiment("pam")
def pam(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    M = int(cfg.get("pam_modes", 64))
    levels = [int(x) for x in _levels(cfg.get("pam_levels", [4, 8, 16]))]
    dt, T = float(cfg.get("pam_dt", 5e-3)), float(cfg.get("pam_t_final", 0.25))
    F = cfg.get("pam_F", "linear")
    gamma = float(cfg.get("pam_gamma", 0.75))
    grid = TorusGrid(2, M)

    def cross(ids):
        enh = build_pam_enhancement(cfg.seed, list(ids), levels[0], grid, dt, T, gamma, experiment=name)
        direct = solve_pam_direct(enh, F)
        para = solve_pam_paracontrolled(enh, F)
        out = [relative_sup_difference(para.final[i], direct.final[i]) for i in range(len(ids))]
        if F.startswith("linear"):
            transform = solve_pam_linear_transform(enh, F=F)
            tr = [relative_sup_difference(transform.final[i], direct.final[i]) for i in range(len(ids))]
        else:
            tr = [np.nan] * len(ids)
        return np.array(tr), np.array(out)

    tr, para = runner.map(name, cfg.replicas, cross)
    params = {"M": M, "n": levels[0], "F": F, "T": T, "dt": dt}
    report.add(name, params, "paracontrolled_vs_direct", float(np.max(para)), 0.0, cfg.replicas)
    report.check("paracontrolled_vs_direct", float(np.max(para)) <= cfg.tolerance("pam_paracontrolled", 1e-2),
                 f"max relative sup difference {np.max(para):.3e}")
    if not np.all(np.isnan(tr)):
        report.add(name, params, "transform_vs_direct", float(np.max(tr)), 0.0, cfg.replicas)
        report.check("transform_vs_direct", float(np.max(tr)) <= cfg.tolerance("pam_transform", 1e-3),
                     f"max relative sup difference {np.max(tr):.3e}")

    deltas = [float(x) for x in _levels(cfg.get("pam_deltas", [1e-2, 1e-3, 1e-4]))]
    n_cont = int(cfg.get("pam_continuity_replicas", 4))

    def continuity(ids):
        enh = build_pam_enhancement(cfg.seed, list(ids), levels[0], grid, dt, T, gamma, experiment=name)
        return enhancement_response(enh, F, deltas).T

    response = runner.map(f"{name}-continuity", n_cont, continuity)
    consts = response.mean(axis=0)
    for delta, c in zip(deltas, consts):
        report.add(name, dict(params, delta=delta), "continuity_constant", c, 0.0, n_cont)
    spread = float(np.max(np.abs(consts / consts[0] - 1.0)))
    report.check("enhancement_continuity", spread <= cfg.tolerance("pam_continuity", 0.1),
                 f"fitted C over deltas {[round(float(c), 4) for c in consts]}")

    n_kol = int(cfg.get("pam_kolmogorov_n", levels[-1]))
    lags = [int(x) for x in _levels(cfg.get("pam_kolmogorov_lags", [2, 4, 8, 16]))]

    def kolmogorov(ids):
        enh = build_pam_enhancement(cfg.seed, list(ids), n_kol, grid, dt, T, gamma, experiment=name)
        return resonant_increment_moments(enh, lags)[1].T

    moments, mse, count = mean_stderr(runner.map(f"{name}-kolmogorov", cfg.replicas, kolmogorov))
    hs = dt * np.array(lags)
    for h, m, s in zip(hs, moments, mse):
        report.add(name, {"M": M, "n": n_kol, "gamma": gamma, "h": float(h)}, "resonant_increment_moment", m, s, count)
    exponent = fit_log_log(hs, moments).slope
    report.add(name, {"M": M, "n": n_kol, "gamma": gamma}, "resonant_increment_exponent", exponent)
    target = 2.0 * (1.0 - gamma)
    report.check("resonant_time_regularity", abs(exponent - target) <= cfg.tolerance("pam_kolmogorov", 0.2),
                 f"exponent {exponent:.3f} vs {target:.3f}")

    if len(levels) < 2:
        return report
    means = {True: [], False: []}
    for renormalize in (True, False):
        for n in levels:
            def level(ids, n=n, renormalize=renormalize):
                enh = build_pam_enhancement(cfg.seed, list(ids), n, grid, dt, T, gamma, renormalize=renormalize,
                                            experiment=name)
                return solve_pam_direct(enh, F).final.spatial_mean()

            mean, se, count = mean_stderr(runner.map(name, cfg.replicas, level))
            means[renormalize].append((float(mean), float(se)))
            report.add(name, {"M": M, "n": n, "renormalized": renormalize}, "final_spatial_mean", mean, se, count)
    raw = np.array([m for m, _ in means[False]])
    report.check("raw_mean_drifts", bool(np.all(np.diff(raw) > 0)), f"raw means {np.round(raw, 4).tolist()}")
    ren = means[True]
    overlap = all(abs(a[0] - b[0]) <= cfg.z * np.hypot(a[1], b[1]) for a in ren for b in ren)
    report.check("renormalized_means_stable", overlap, f"renormalized means {[round(m, 4) for m, _ in ren]}")
    return report


@experiment("sbe")
def sbe(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    M, n = int(cfg.get("sbe_modes", 128)), int(cfg.get("sbe_n", 8))
    dt, T = float(cfg.get("sbe_dt", 2.5e-3)), float(cfg.get("sbe_t_final", 0.25))
    gamma = float(cfg.get("sbe_gamma", 0.4))
    grid = TorusGrid(1, M)
    replicas = list(range(cfg.replicas))

    discrepancies = []
    for step in (dt, dt / 2):
        value = galerkin_discrepancy(cfg.seed, replicas, n, grid, step, T, gamma, experiment=name)
        discrepancies.append(value)
        report.add(name, {"M": M, "n": n, "T": T, "dt": step}, "galerkin_discrepancy", value, 0.0, len(replicas))
    report.check("galerkin_agreement", discrepancies[0] <= cfg.tolerance("sbe_galerkin", 5e-2),
                 f"relative L2 {discrepancies[0]:.3e}")
    report.check("discrepancy_decreases", discrepancies[1] < discrepancies[0],
                 f"{discrepancies[0]:.3e} -> {discrepancies[1]:.3e}")

    enh = build_sbe_enhancement(cfg.seed, replicas, n, grid, dt, T, gamma, experiment=name)
    residual = closure_residual(enh, solve_sbe_paracontrolled(enh))
    report.add(name, {"M": M, "n": n}, "closure_residual", residual)
    report.check("closure", residual <= 1e-10, f"residual {residual:.2e}")
    for rec in regularity_ladder(enh).itertuples(index=False):
        report.add(name, {"M": M, "n": n, "component": rec.component, "alpha": rec.alpha}, "besov_norm", rec.norm)

    lambdas = [float(x) for x in _levels(cfg.get("sbe_lambdas", [0.5, 0.25, 0.125]))]
    order = int(cfg.get("sbe_order", 2))
    frame, fitted = tree_expansion_residuals(cfg.seed, 0, n, grid, dt, T, lambdas, order, experiment=f"{name}-trees")
    for rec in frame.to_dict("records"):
        report.add(name, {"n_max": order, "lambda": rec["lambda"]}, "tree_residual", rec["residual"])
    report.add(name, {"n_max": order}, "tree_residual_order", fitted)
    report.check("tree_expansion_order", abs(fitted - (order + 1)) <= 0.3, f"fitted order {fitted:.3f}")
    runner.metrics.replicas.labels(experiment=name).inc(len(replicas))
    return report


@experiment("renorm-constants")
def renorm_constants(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    for label, params, result in constants_table():
        report.add(name, params, label, result.value, result.tail_bound)
    generated = ensure_fixtures(cfg.fixtures_dir)
    report.metadata["fixtures_generated"] = generated
    for c in check_fixtures(cfg.fixtures_dir):
        report.check(f"fixture:{c.name}", c.passed, c.detail)

    for t in (0.1, 1.0):
        spec = SumSpec(int(cfg.get("renorm_cutoff", 16)), 2)
        a, b = heat_trace_gt(t, spec), heat_trace_gt(t, spec.doubled())
        report.add(name, {"t": t, "K": spec.cutoff}, "heat_trace_gt", a.value, a.tail_bound)
        report.check(f"heat_trace_doubling_t{t}", abs(a.value - b.value) <= a.tail_bound + 1e-15,
                     f"|g(K) - g(2K)| = {abs(a.value - b.value):.2e}, bound {a.tail_bound:.2e}")

    deltas = [float(x) for x in _levels(cfg.get("heat_trace_deltas", [2.0 ** -e for e in range(4, 11)]))]
    spec = SumSpec(int(cfg.get("renorm_integral_cutoff", 256)), 2)
    integrals = [heat_trace_integral(dl, 1.0, spec).value for dl in deltas]
    for dl, value in zip(deltas, integrals):
        report.add(name, {"d": 2, "K": spec.cutoff, "delta": dl}, "heat_trace_integral", value)
    slope = -fit_log_linear(deltas, integrals).slope
    target = 1.0 / (4.0 * np.pi)
    report.add(name, {"d": 2, "K": spec.cutoff}, "heat_trace_log_slope", slope)
    report.check("heat_trace_log_divergence", abs(slope / target - 1.0) <= cfg.tolerance("heat_trace_slope", 0.1),
                 f"slope {slope:.5f} vs {target:.5f} over {len(deltas)} deltas")

    n, t = int(cfg.get("renorm_n", 8)), float(cfg.get("renorm_t", 0.5))
    grid = TorusGrid(2, int(cfg.get("renorm_modes", 32)))
    partition = build_partition(grid)

    def resonant_at_origin(ids):
        enh = build_pam_enhancement(cfg.seed, list(ids), n, grid, t, t, renormalize=False, experiment=name,
                                    partition=partition)
        return inverse(enh.resonant.final)[(Ellipsis,) + (0,) * grid.dim]

    mean, se, count = mean_stderr(runner.map(name, cfg.replicas, resonant_at_origin))
    target = pam_counterterm_fn(t, n, variance=PAM_NOISE_VARIANCE, grid=grid).value
    report.add(name, {"n": n, "t": t, "M": grid.modes_per_axis}, "resonant_mean", mean, se, count)
    report.check("pam_counterterm", within(mean, target, se, cfg.z), f"{mean:.5f} +- {se:.5f} vs f_n = {target:.5f}")
    return report


@experiment("homogenization")
def homogenization(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    M = int(cfg.get("homog_modes", 64))
    eps_values = [float(e) for e in _levels(cfg.get("homog_eps", [0.25, 0.125, 0.0625]))]
    alpha, beta = float(cfg.get("homog_alpha", 0.5)), float(cfg.get("homog_beta", 1.5))
    t = float(cfg.get("homog_t", 1.0))
    grid = TorusGrid(2, M)
    d = grid.dim
    profile = RadialProfile.gaussian()
    partition = build_partition(grid)
    blocks = partition.block_indices
    constants = []

    for eps in eps_values:
        def batch(ids, eps=eps):
            V = sample_potential_ensemble(grid, eps, alpha, beta, profile, cfg.seed, ids, name)
            vals = np.stack([inverse(block(V, j, partition)) for j in blocks], axis=1)
            second = np.mean(vals ** 2, axis=grid.axes)
            cross = np.stack([np.mean(vals[:, a] * vals[:, a + 2], axis=grid.axes) for a in range(len(blocks) - 2)],
                             axis=-1)
            X = potential_response(V, t)
            g = sum(dealiased_product(derivative(X, axis), derivative(X, axis)) for axis in range(d))
            gvals = np.stack([inverse(block(g, j, partition))[(Ellipsis,) + (0,) * d] for j in blocks], axis=-1)
            return second, cross, gvals, grad_X_potential_variance(V, t)

        second, cross, gvals, grad = runner.map(name, cfg.replicas, batch)
        mean, se, count = mean_stderr(second)
        for idx, j in enumerate(blocks):
            target = potential_block_variance(j, eps, alpha, beta, profile, d, band=grid.band).value
            report.add(name, {"eps": eps, "j": j}, "block_variance", mean[idx], se[idx], count)
            report.check(f"block_variance_eps{eps}_j{j}", within(mean[idx], target, se[idx], cfg.z, abs_tol=1e-12),
                         f"{mean[idx]:.5g} +- {se[idx]:.2g} vs {target:.5g}")
        cmean, cse, _ = mean_stderr(cross)
        for a in range(len(blocks) - 2):
            report.check(f"block_covariance_eps{eps}_{blocks[a]}_{blocks[a + 2]}",
                         within(cmean[a], 0.0, cse[a], cfg.z, 1e-12), f"{cmean[a]:.3g} +- {cse[a]:.2g}")

        sigma = sigma_sq_eps(t, eps, alpha, beta, profile, d, SumSpec(grid.band, d)).value
        var = np.var(gvals, axis=0, ddof=1)
        bounds = np.array([potential_grad_variance_bound(max(j, 0), eps, alpha, beta, profile, sigma)
                           for j in blocks])
        constants.append(fitted_constant(var, bounds))
        report.add(name, {"eps": eps, "t": t}, "sigma_sq_eps", sigma)
        gmean, gse, gcount = mean_stderr(grad)
        report.add(name, {"eps": eps, "t": t}, "grad_X_mean_square", gmean, gse, gcount)
        report.check(f"grad_X_sigma_eps{eps}", within(gmean, sigma, gse, cfg.z),
                     f"{float(gmean):.5g} +- {float(gse):.2g} vs {sigma:.5g}")
        report.add(name, {"eps": eps, "t": t}, "grad_variance_constant", constants[-1], 0.0, count)

    constants = np.array(constants)
    growth = float(np.max(constants / constants[0]))
    uniform = cfg.tolerance("grad_variance_uniform", 4.0)
    report.add(name, {"eps": eps_values, "t": t}, "grad_variance_constant_growth", growth)
    report.check("grad_variance_bounded", bool(np.all(np.isfinite(constants))) and growth <= uniform,
                 f"fitted constants {[round(float(c), 4) for c in constants]} over eps {eps_values}, "
                 f"max ratio to eps={eps_values[0]} is {growth:.3f}, bound {uniform}")
    return report


@experiment("wick")
def wick(cfg, runner):
    name = cfg.name
    report = ExperimentReport()
    rng = np.random.default_rng(cfg.seed)
    tables = int(cfg.get("wick_tables", 3))
    max_total = int(cfg.get("wick_max_degree", 6))
    failures = 0
    checked = 0
    for _ in range(tables):
        cov = random_gram(2, rng)
        for m in range(1, max_total):
            for n in range(1, max_total - m + 1):
                same, lhs, rhs = check_product_identity(m, n, cov)
                checked += 1
                if not (same and lhs == rhs):
                    failures += 1
    report.add(name, {"tables": tables, "max_degree": max_total}, "product_identities", checked)
    report.check("wick_product_formula", failures == 0, f"{failures} of {checked} identities failed")

    counts = [t.count for t in (LEAF, CHERRY, CHAIN, CHAIN3, BALANCED)]
    report.check("tree_multiplicities", counts == [1, 1, 2, 4, 1], f"c(tau) = {counts}")
    max_degree = int(cfg.get("tree_max_degree", 12))
    for n in range(max_degree + 1):
        total = sum(t.count for t in trees_of_degree(n))
        report.add(name, {"degree": n}, "planar_tree_total", total)
        report.check(f"catalan_{n}", total == catalan(n), f"{total} vs {catalan(n)}")
    for n in range(min(max_degree, 6) + 1):
        brute = planar_multiplicities(n)
        report.check(f"brute_force_{n}", brute == {t.shape: t.count for t in trees_of_degree(n)},
                     f"{len(brute)} classes")
    return report


def _record_stride(n_times, max_rows=50):
    return max(1, (n_times - 1) // max_rows)


@experiment("pam-trajectory")
def pam_trajectory(cfg, runner):
    """Per-time diagnostics of one PAM solver: sup norm, spatial mean and the C^gamma norm."""
    name = cfg.name
    report = ExperimentReport()
    M = int(cfg.get("pam_modes", 64))
    n = int(_levels(cfg.get("pam_levels", [4]))[0])
    dt, T = float(cfg.get("pam_dt", 5e-3)), float(cfg.get("pam_t_final", 0.25))
    F, method = cfg.get("pam_F", "linear"), cfg.get("pam_method", "direct")
    gamma = float(cfg.get("pam_gamma", 0.75))
    renormalize = bool(cfg.get("pam_renormalize", True))
    solvers = {
        "direct": lambda enh: solve_pam_direct(enh, F),
        "transform": lambda enh: solve_pam_linear_transform(enh, F=F),
        "paracontrolled": lambda enh: solve_pam_paracontrolled(enh, F),
    }
    if method not in solvers:
        raise UsageError(f"Unknown PAM method {method!r}; choose from {', '.join(solvers)}")
    enh = build_pam_enhancement(cfg.seed, list(range(cfg.replicas)), n, TorusGrid(2, M), dt, T, gamma,
                                renormalize=renormalize, experiment="pam")
    solution = solvers[method](enh)
    path = solution.path
    for i in range(0, len(path), _record_stride(len(path))):
        u = path.at(i)
        params = {"method": method, "n": n, "t": float(path.times[i])}
        for statistic, samples in (("sup_norm", u.sup_norm()), ("spatial_mean", u.spatial_mean()),
                                   ("holder_norm", besov_norm(u, gamma, np.inf, np.inf, enh.partition))):
            mean, se, count = mean_stderr(np.atleast_1d(samples))
            report.add(name, params, statistic, mean, se, count)
    report.check("no_explosion", not solution.exploded, f"explosion time {solution.explosion_time}")
    runner.metrics.replicas.labels(experiment=name).inc(cfg.replicas)
    return report


@experiment("sbe-trajectory")
def sbe_trajectory(cfg, runner):
    """Per-time mode powers and C^(gamma - 1) norm of one SBE method (galerkin, paracontrolled or tree:k)."""
    name = cfg.name
    report = ExperimentReport()
    M, n = int(cfg.get("sbe_modes", 128)), int(cfg.get("sbe_n", 8))
    dt, T = float(cfg.get("sbe_dt", 2.5e-3)), float(cfg.get("sbe_t_final", 0.25))
    gamma = float(cfg.get("sbe_gamma", 0.4))
    method = str(cfg.get("sbe_method", "paracontrolled"))
    enh = build_sbe_enhancement(cfg.seed, list(range(cfg.replicas)), n, TorusGrid(1, M), dt, T, gamma,
                                experiment="sbe")
    if method == "paracontrolled":
        path = solve_sbe_paracontrolled(enh).path
    elif method == "galerkin":
        path = matched_galerkin(enh)
    elif method.startswith("tree:"):
        try:
            order = int(method.split(":", 1)[1])
        except ValueError as e:
            raise UsageError(f"Bad tree order in {method!r}") from e
        path = truncated_tree_expansion(enh, order)
    else:
        raise UsageError(f"Unknown SBE method {method!r}; choose galerkin, paracontrolled or tree:k")
    for i in range(0, len(path), _record_stride(len(path))):
        u = path.at(i)
        params = {"method": method, "n": n, "t": float(path.times[i])}
        for k in (1, 2, 3):
            mean, se, count = mean_stderr(np.atleast_1d(np.abs(u.coefficient(k)) ** 2))
            report.add(name, dict(params, k=k), "mode_power", mean, se, count)
        mean, se, count = mean_stderr(np.atleast_1d(besov_norm(u, gamma - 1.0, np.inf, np.inf, enh.partition)))
        report.add(name, params, "besov_norm", mean, se, count)
    runner.metrics.replicas.labels(experiment=name).inc(cfg.replicas)
    return report
