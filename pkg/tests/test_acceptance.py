"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with its elapsed time and enforces
the stated runtime budget.  Tolerances appear inline next to each check.
"""

import json
import math
import time

import numpy as np
from scipy.integrate import quad

from stochmann.bounds import (BoundParams, envelope_sequence,
                              min_iterations_for_confidence, product_bound,
                              series_S1_detail, series_S2_detail)
from stochmann.cli import main
from stochmann.montecarlo import (ExperimentPlan, coverage_experiment,
                                  dominance_failures, empirical_tail,
                                  error_table, rate_diagnostic,
                                  replica_errors, replica_seeds)
from stochmann.noise import bounded_uniform, default_cramer_params, gaussian, \
    sample_many
from stochmann.schemes import SchemeConfig, StepSequences, step
from stochmann.spaces import (INVERSE_QUADRATIC_C, affine, estimate_contraction,
                              inverse_quadratic, norm, reference_fixed_point)

X_STAR_CLOSED_FORM = 0.682327803828019  # real root of x^3 + x = 1
REFERENCE_REALIZED_ERROR = 1.441924e-4  # published single-run value at n=10^4


def report(num, ok, detail, t0, budget):
    elapsed = time.perf_counter() - t0
    line = (f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail} "
            f"[{elapsed:.1f}s/{budget:.0f}s]")
    print(line)
    assert ok, line
    assert elapsed < budget, f"criterion {num} over budget: {elapsed:.1f}s"


def reference_scheme(horizon, seed=0, a=0.5):
    return SchemeConfig(kind="stochastic_mann", map_spec=inverse_quadratic(),
                        x0=np.array([0.5]), steps=StepSequences(a=a),
                        noise=gaussian(scale=2.0), horizon=horizon, seed=seed)


def reference_params(rho_scale_of=2.0):
    # rho = 0.5 * rho_scale_of * a * (1-c); 2.0 halves the tail exponent,
    # 1.0 halves the rate exponent
    a, c = 0.5, INVERSE_QUADRATIC_C
    sigma, L, mnb = default_cramer_params("gaussian", 2.0, dim=1)
    x_star = reference_fixed_point(inverse_quadratic(), tol=1e-14)
    return BoundParams(N=abs(0.5 - float(x_star[0])), a=a, c=c, sigma=sigma,
                       L=L, mean_norm_bound=mnb,
                       rho=0.5 * rho_scale_of * a * (1.0 - c))


ART_PARAMS = BoundParams(N=0.7, a=0.9, c=0.0, sigma=0.1, L=0.1,
                         mean_norm_bound=0.1, rho=0.9)


def artificial_scheme(horizon=10**4):
    return SchemeConfig(
        kind="stochastic_mann",
        map_spec=affine(np.array([[0.0]]), np.array([0.7]), declared_c=0.0),
        x0=np.array([0.0]), steps=StepSequences(a=0.9),
        noise=bounded_uniform(half_width=0.1), horizon=horizon, seed=0)


def test_criterion_01_fixed_point_reference():
    t0 = time.perf_counter()
    x = reference_fixed_point(inverse_quadratic(), tol=1e-14)
    err = abs(float(x[0]) - X_STAR_CLOSED_FORM)
    report(1, err < 1e-12, f"fixed point error {err:.2e} < 1e-12", t0, 1.0)


def test_criterion_02_contraction_estimate_band():
    t0 = time.perf_counter()
    est = estimate_contraction(inverse_quadratic(),
                               domain_box=np.array([[-10.0, 10.0]]),
                               samples=10**5, seed=0)
    ok = 0.60 < est <= 0.6496 and est <= 9.0 / (8.0 * math.sqrt(3.0)) + 1e-9
    report(2, ok, f"estimate {est:.6f} in (0.60, 0.6496]", t0, 5.0)


def test_criterion_03_product_bound_randomized():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    violations = 0
    for _ in range(10**4):
        n = int(rng.integers(1, 10**4 + 1))
        i = int(rng.integers(1, n + 1))
        a = float(rng.uniform(1e-6, 1.0 - 1e-6))
        c = float(rng.uniform(0.0, 1.0 - 1e-9))
        lhs, rhs = product_bound(i, n, a, c)
        if lhs > rhs * (1.0 + 1e-14):
            violations += 1
    report(3, violations == 0,
           f"{violations} violations in 10^4 trials at 1e-14 slack", t0, 10.0)


def test_criterion_04_pathwise_envelope():
    t0 = time.perf_counter()
    R, H = 10**3, 10**3
    cfg = reference_scheme(horizon=H)
    x_star = reference_fixed_point(cfg.map_spec, tol=1e-14)
    seeds = replica_seeds(31337, R)
    X = np.tile(cfg.x0, (R, 1))
    errs = np.empty((R, H))
    norms = np.empty((R, H))
    for n in range(1, H + 1):
        draws = sample_many(cfg.noise, 1, seeds, n)
        X = step("stochastic_mann", X, n, cfg, draws)
        norms[:, n - 1] = norm(draws)
        errs[:, n - 1] = norm(X - x_star)
    params = reference_params()
    env = envelope_sequence(params, norms)
    slack = np.arange(1, H + 1) * 1e-12
    violations = int(np.sum(errs > env + slack))
    report(4, violations == 0,
           f"{violations} envelope violations over {R} trajectories", t0, 30.0)


def _tail_integral_bracket(p, q, M):
    def tail_int(t):
        val, err = quad(lambda u: (1.0 + u) ** p, 0.0, 1.0 / t,
                        weight="alg", wvar=(q - p - 2.0, 0.0), limit=200)
        return val, err
    f_next = (M + 2.0) ** p / (M + 1.0) ** q
    lo_i, lo_e = tail_int(M + 1.0)
    hi_i, hi_e = tail_int(M + 0.5)
    return lo_i + 0.5 * f_next - lo_e, hi_i + hi_e


def _brute_with_certified_tail(p, q, terms=10**7):
    partial = 0.0
    for lo in range(1, terms + 1, 4 * 10**6):
        hi = min(terms, lo + 4 * 10**6 - 1)
        x = np.arange(lo, hi + 1, dtype=np.float64)
        partial += float(np.sum((x + 1.0) ** p / x ** q))
    lo_t, hi_t = _tail_integral_bracket(p, q, terms)
    return partial + lo_t, partial + hi_t


def test_criterion_05_series_against_brute_force():
    t0 = time.perf_counter()
    worst = 0.0
    for a in (0.1, 0.5, 0.9):
        for c in (0.0, 0.5, 0.65, 0.9):
            est = series_S1_detail(a, c, 1e-10)
            lo, hi = _brute_with_certified_tail(a * (1 - c), 2.0)
            gap = max(lo - est.value, est.value - hi, 0.0)
            worst = max(worst, gap)
            est2 = series_S2_detail(a, c, 2.0, 1e-10)
            scale = 4.0 * a * a * 4.0
            lo2, hi2 = _brute_with_certified_tail(2 * a * (1 - c), 4.0)
            gap2 = max(scale * lo2 - est2.value, est2.value - scale * hi2, 0.0)
            worst = max(worst, gap2)
    report(5, worst <= 2e-10,
           f"worst series deviation {worst:.2e} <= 2e-10 over 12 cells",
           t0, 60.0)


def test_criterion_06_tail_bound_dominance_grid():
    t0 = time.perf_counter()
    cfg = reference_scheme(horizon=10**4)
    x_star = reference_fixed_point(cfg.map_spec, tol=1e-14)
    plan = ExperimentPlan(scheme=cfg, checkpoints=(10**2, 10**3, 10**4),
                          eps_grid=(0.05, 0.1, 0.2), replicas=10**4,
                          base_seed=20240814)
    cells = empirical_tail(plan, x_star, reference_params(rho_scale_of=2.0))
    failures = dominance_failures(cells)
    vacuous = [f"(n={c.n},eps={c.eps:g})" for c in cells if c.vacuous]
    detail = (f"{len(cells) - len(failures)}/{len(cells)} cells dominated; "
              f"vacuous: {len(vacuous)}/{len(cells)} "
              f"{' '.join(vacuous) if vacuous else ''}")
    report(6, not failures, detail, t0, 300.0)


def test_criterion_07_confidence_coverage():
    t0 = time.perf_counter()
    desk_cap = 10**6
    ref = reference_params(rho_scale_of=2.0)
    infeasible = []
    for alpha in (0.05, 0.1):
        for eps in (0.1, 0.2):
            n_alpha = min_iterations_for_confidence(eps, alpha, ref,
                                                    n_cap=desk_cap)
            if n_alpha is None:
                infeasible.append(f"(alpha={alpha:g},eps={eps:g})")
    # enormous K1 makes every reference cell infeasible at desk scale; the
    # mechanism is then validated on the small-K1 artificial parameter set
    coverages = []
    ok = len(infeasible) == 4
    for alpha in (0.05, 0.1):
        for eps in (0.1, 0.2):
            n_alpha = min_iterations_for_confidence(eps, alpha, ART_PARAMS,
                                                    n_cap=desk_cap)
            ok = ok and n_alpha is not None and n_alpha <= 10**4
            plan = ExperimentPlan(scheme=artificial_scheme(),
                                  checkpoints=(10,), eps_grid=(eps,),
                                  replicas=10**4, base_seed=7)
            cov = coverage_experiment(plan, eps=eps, alpha=alpha,
                                      params=ART_PARAMS, n_cap=desk_cap)
            slack = 3.0 * math.sqrt(alpha * (1 - alpha) / 10**4)
            ok = ok and cov >= 1.0 - alpha - slack
            coverages.append(f"{cov:.4f}@n={n_alpha}")
    detail = (f"reference cells infeasible-at-desk-scale: {len(infeasible)}/4 "
              f"{' '.join(infeasible)}; artificial coverage "
              f"{' '.join(coverages)}")
    report(7, ok, detail, t0, 600.0)


def test_criterion_08_error_table_shape():
    t0 = time.perf_counter()
    cfg = reference_scheme(horizon=10**6, seed=20240814)
    x_star = reference_fixed_point(cfg.map_spec, tol=1e-14)
    cps = (10, 10**2, 10**3, 10**4, 10**5, 10**6)
    rows = error_table(cfg, cps, x_star)
    errs = [r.absolute_error for r in rows]
    monotone = all(errs[k] > errs[k + 1] for k in range(1, len(errs) - 1))
    band_cfg = reference_scheme(horizon=10**4)
    seeds = replica_seeds(20240814, 200)
    # checkpoint 9999 records the error of iterate 10^4, matching the table
    e4 = replica_errors(band_cfg, x_star, seeds, (9999,))[:, 0]
    in_band = float(np.mean((e4 >= 1e-6) & (e4 <= 1e-2)))
    anchored = 1e-6 <= REFERENCE_REALIZED_ERROR <= 1e-2
    ok = monotone and in_band >= 0.95 and anchored
    report(8, ok,
           f"monotone from n=10^2: {monotone}; band fraction {in_band:.3f} "
           f">= 0.95; published value inside band: {anchored}", t0, 300.0)


def test_criterion_09_rate_diagnostic_stability():
    t0 = time.perf_counter()
    params = reference_params(rho_scale_of=1.0)  # rho = 0.5 a (1-c)
    from stochmann.bounds import canonical_eps0
    eps0 = canonical_eps0(params, d=1)
    sups = {}
    for horizon in (10**4, 10**5):
        cps = tuple(10**k for k in range(1, int(math.log10(horizon)) + 1))
        cfg = reference_scheme(horizon=horizon)
        plan = ExperimentPlan(scheme=cfg, checkpoints=cps, eps_grid=(0.1,),
                              replicas=200, base_seed=99)
        sups[horizon] = rate_diagnostic(plan, params, eps0).sup_ratio
    ratio = sups[10**5] / sups[10**4]
    ok = 0.5 <= ratio <= 2.0
    report(9, ok,
           f"sup_ratio {sups[10**4]:.4f} -> {sups[10**5]:.4f}, "
           f"ratio {ratio:.3f} within [0.5, 2]", t0, 300.0)


def test_criterion_10_byte_identical_reruns(tmp_path):
    t0 = time.perf_counter()
    ref_cfg = {
        "map": {"family": "inverse_quadratic"},
        "scheme": {"kind": "stochastic_mann", "x0": [0.5], "a": 0.5,
                   "horizon": 300, "seed": 3},
        "noise": {"family": "gaussian", "scale": 2.0},
        "experiment": {"checkpoints": [10, 100, 300],
                       "eps_grid": [0.1, 0.2], "replicas": 200},
        "base_seed": 11,
    }
    demo_cfg = {
        "map": {"family": "affine", "matrix": [[0.0]], "offset": [0.7],
                "declared_c": 0.0},
        "scheme": {"kind": "stochastic_mann", "x0": [0.0], "a": 0.9,
                   "horizon": 10000, "seed": 1},
        "noise": {"family": "bounded_uniform", "half_width": 0.1},
        "bounds": {"rho": 0.9},
        "base_seed": 7,
    }
    ref_path = tmp_path / "ref.json"
    ref_path.write_text(json.dumps(ref_cfg))
    demo_path = tmp_path / "demo.json"
    demo_path.write_text(json.dumps(demo_cfg))
    commands = [
        ["iterate", "--config", str(ref_path)],
        ["bound", "--config", str(ref_path), "--n", "100", "--eps", "0.1"],
        ["confidence", "--config", str(demo_path), "--eps", "0.1",
         "--alpha", "0.05"],
        ["montecarlo", "--config", str(ref_path)],
        ["cramer-check", "--config", str(ref_path), "--draws", "5000"],
    ]
    identical = True
    for k, argv in enumerate(commands):
        dirs = (tmp_path / f"run{k}a", tmp_path / f"run{k}b")
        for d in dirs:
            rc = main(argv + ["--out", str(d)])
            identical = identical and rc == 0
        names = sorted(p.name for p in dirs[0].iterdir())
        identical = identical and names \
            == sorted(p.name for p in dirs[1].iterdir())
        for name in names:
            identical = identical and (dirs[0] / name).read_bytes() \
                == (dirs[1] / name).read_bytes()
    report(10, identical, "all five commands byte-identical on rerun",
           t0, 120.0)
