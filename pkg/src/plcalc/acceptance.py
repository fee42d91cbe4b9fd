"""The acceptance battery: every norm-equivalence property the package
promises, runnable as one suite with a pass/fail line per criterion.

Each criterion function returns a CriterionResult; run_all executes the
battery in order.  The pytest acceptance module asserts each result, the
CLI subcommand ``suite acceptance`` prints them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .calculus import (
    apply_contour,
    apply_spectral,
    bisectorial_projections,
    default_contour_spec,
    even_multiplier_direct,
    even_multiplier_via_projections,
    log_operator,
)
from .experiments import (
    make_mcintosh_symbol,
    mcintosh_check,
    multiplier_bound_check,
    resolvent_scan,
    run_equivalence,
)
from .measure import lp_norm
from .norms import (
    QuadratureSpec,
    RandomEnsemble,
    besov_continuous_norm,
    besov_discrete_norm,
    continuous_square_norm,
    k_functional,
    k_functional_bruteforce,
    pl_random_norm,
    pl_square_norm,
    real_interpolation_norm,
)
from .operators import (
    build_dirichlet_laplacian_1d,
    build_graph_laplacian,
    build_hermite_operator,
    build_nonnormal_sectorial,
    build_schrodinger_1d,
    uniform_grid,
)
from .partitions import build_equidistant, build_homogeneous_dyadic
from .symbols import make_symbol, window_symbol

SQRT_HALF = 2.0**-0.5


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {self.detail}"


def _hermite_grid(num_modes: int):
    # width ~ sqrt(2 lambda_max) + margin keeps the Gram defect under 1e-6
    half = np.sqrt(2.0 * (2.0 * num_modes + 1.0)) + 5.0
    return uniform_grid(-half, half, max(500, 40 * num_modes))


def criterion_1_overlap_sandwich(seed: int = 11) -> CriterionResult:
    """Square-block norm of any unit vector sits in [2^-1/2, 1] at p = 2."""
    op = build_dirichlet_laplacian_1d(256, 1.0)
    hom = build_homogeneous_dyadic()
    rng = np.random.default_rng(seed)
    lo, hi = np.inf, -np.inf
    for _ in range(100):
        x = op.random_vector(rng)
        x = x / lp_norm(x, 2, op.measure)
        r = pl_square_norm(op, hom, x, 2)
        lo, hi = min(lo, r), max(hi, r)
    ok = lo >= SQRT_HALF - 1e-9 and hi <= 1.0 + 1e-9
    return CriterionResult(1, "overlap sandwich", ok,
                           f"ratio range [{lo:.12f}, {hi:.12f}] in "
                           f"[{SQRT_HALF:.12f}, 1] (100 samples)")


def criterion_2_fractional_sandwich(seed: int = 12) -> CriterionResult:
    """Weighted blocks vs ||A^theta x||: within [2^(-|t|-1/2), 2^|t|]."""
    op = build_hermite_operator(1, 32, _hermite_grid(32))
    hom = build_homogeneous_dyadic()
    lam = np.real(op.eigenvalues_or_none())
    rng = np.random.default_rng(seed)
    details = []
    ok = True
    for theta in (-1.0, 0.5, 1.0):
        lo_b = 2.0 ** (-abs(theta)) * SQRT_HALF * (1 - 1e-9)
        hi_b = 2.0 ** abs(theta) * (1 + 1e-9)
        lo, hi = np.inf, -np.inf
        for _ in range(50):
            x = op.random_vector(rng)
            x = x / lp_norm(x, 2, op.measure)
            frac = lp_norm(op.synthesize(lam**theta * op.coefficients(x)), 2, op.measure)
            ratio = pl_square_norm(op, hom, x, 2, theta=theta) / frac
            lo, hi = min(lo, ratio), max(hi, ratio)
        ok = ok and lo >= lo_b and hi <= hi_b
        details.append(f"theta={theta:+.1f}: [{lo:.6f}, {hi:.6f}] in [{lo_b:.6f}, {hi_b:.6f}]")
    return CriterionResult(2, "fractional sandwich", ok, "; ".join(details))


def criterion_3_contour_vs_spectral(seed: int = 13) -> CriterionResult:
    """Quadrature route matches the spectral route and refines monotonically.

    The certified radii push the truncation tail to ~1e-12 so node error
    dominates at 64 nodes/decade; the contour angle 0.12 puts that error
    near 1e-9 (well under the 1e-8 gate) with three decades of headroom
    for the refinement drop.
    """
    import dataclasses

    n = 128
    xg = (np.arange(1, n + 1) - (n + 1) / 2) * (4.0 / (n + 1))
    op = build_schrodinger_1d(n, 1.0, xg**2)
    rng = np.random.default_rng(seed)
    x = op.random_vector(rng)
    x = x / lp_norm(x, 2, op.measure)
    ok = True
    details = []
    for sym in (make_symbol("rho"), make_symbol("psi_exp", a=2.0, b=1.0)):
        exact = apply_spectral(op, sym, x)
        scale = np.linalg.norm(exact)
        errs = []
        for npd in (64, 128):
            spec = default_contour_spec(op, sym, tail_tol=1e-12, nodes_per_decade=npd)
            spec = dataclasses.replace(spec, sigma=0.12)
            y, _ = apply_contour(op, sym, x, spec, tail_tol=1e-10)
            errs.append(float(np.linalg.norm(y - exact) / scale))
        e64, e128 = errs
        ok = ok and e64 <= 1e-8 and e128 < e64
        details.append(f"{sym.name}: err64={e64:.2e}, err128={e128:.2e}")
    return CriterionResult(3, "contour vs spectral", ok, "; ".join(details))


def criterion_4_continuous_square_exactness(seed: int = 14) -> CriterionResult:
    """psi(t) = t e^-t at p inner 2, theta 0: value = 0.5 ||x|| to 1e-6."""
    op = build_dirichlet_laplacian_1d(64, 1.0)
    psi = make_symbol("psi_exp", a=1.0, b=1.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        x = op.random_vector(rng)
        x = x / lp_norm(x, 2, op.measure)
        val = continuous_square_norm(op, psi, 0.0, x, 2)
        worst = max(worst, abs(val - 0.5))
    return CriterionResult(4, "continuous square exactness", worst <= 1e-6,
                           f"max |value - 1/2| = {worst:.2e} over 10 unit vectors")


def criterion_5_mcintosh(seed: int = 15) -> CriterionResult:
    """Normalized |psi|^2 scale integral reproduces x to 1e-6."""
    op = build_dirichlet_laplacian_1d(96, 1.0)
    g = make_mcintosh_symbol(make_symbol("psi_exp", a=1.0, b=1.0))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        x = op.random_vector(rng)
        worst = max(worst, mcintosh_check(op, g, x))
    return CriterionResult(5, "reproduction from scale integral", worst <= 1e-6,
                           f"max residual {worst:.2e} over 20 vectors")


def criterion_6_rademacher_square(seed: int = 16) -> CriterionResult:
    """MC mean of squared random block sums matches sum of squared block
    norms within 3 standard errors, 256 samples, 20 vectors."""
    op = build_dirichlet_laplacian_1d(128, 1.0)
    hom = build_homogeneous_dyadic()
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for k in range(20):
        x = op.random_vector(rng)
        x = x / lp_norm(x, 2, op.measure)
        res = pl_random_norm(op, hom, x, 2, RandomEnsemble(seed=seed * 1000 + k, count=256))
        sq_samples = res.samples**2
        mc_mean = float(np.mean(sq_samples))
        mc_se = float(np.std(sq_samples, ddof=1) / np.sqrt(sq_samples.size))
        exact = pl_square_norm(op, hom, x, 2) ** 2
        z = abs(mc_mean - exact) / mc_se
        worst = max(worst, z)
        ok = ok and z <= 3.0
    return CriterionResult(6, "randomized/square consistency", ok,
                           f"max |z| = {worst:.2f} (3 sigma gate, 20 vectors)")


def criterion_7_besov_continuous_discrete(seed: int = 17) -> CriterionResult:
    """Continuous Besov norm: substitution identity on eigenvectors and a
    size-stable ratio bracket against the discrete block norm."""
    hom = build_homogeneous_dyadic()
    f0 = window_symbol(hom, 0)
    theta, q = 0.5, 2
    # eigenvector substitution identity across lambda in {1, 3, 9, 27}
    op16 = build_hermite_operator(1, 16, _hermite_grid(16))
    lam = np.real(op16.eigenvalues_or_none())
    base = QuadratureSpec.cover(op16)
    consts = []
    for target in (1.0, 3.0, 9.0, 27.0):
        k = int(np.argmin(np.abs(lam - target)))
        x = op16.form.eigenvectors[:, k]
        val = besov_continuous_norm(op16, x, theta, q, f0, 2, base.scaled(1.0 / lam[k]))
        consts.append(val / lam[k] ** theta)
    spread = (max(consts) - min(consts)) / max(consts)
    ok = spread <= 1e-6
    # random-vector bracket across mode counts
    med = {}
    brackets = {}
    for modes in (8, 16, 32):
        op = build_hermite_operator(1, modes, _hermite_grid(modes))
        rng = np.random.default_rng(seed + modes)
        ratios = []
        for _ in range(15):
            x = op.random_vector(rng)
            x = x / lp_norm(x, 2, op.measure)
            num = besov_continuous_norm(op, x, theta, q, f0, 2, QuadratureSpec.cover(op))
            den = besov_discrete_norm(op, hom, x, theta, q, 2)
            ratios.append(num / den)
        med[modes] = float(np.median(ratios))
        brackets[modes] = (float(np.min(ratios)), float(np.max(ratios)))
    stable = max(med.values()) / min(med.values()) <= 2.0
    ok = ok and stable
    return CriterionResult(
        7, "continuous vs discrete Besov", ok,
        f"substitution spread {spread:.2e}; median ratios "
        + ", ".join(f"K={m}: {v:.4f}" for m, v in med.items()))


def criterion_8_k_functional(seed: int = 18) -> CriterionResult:
    """Scalar closed form, brute-force oracle at n <= 6, concavity."""
    # scalar case: K(t) = min(1, t lambda) |x|
    op1 = build_nonnormal_sectorial([2.0 + 0j], 1.0, seed)
    x1 = np.array([1.0 + 0j])
    worst_scalar = 0.0
    for t in np.logspace(-3, 3, 25):
        k = k_functional(op1, x1, t, 0.0, 1.0)
        worst_scalar = max(worst_scalar, abs(k - min(1.0, t * 2.0)))
    ok = worst_scalar <= 1e-10
    # brute force agreement in the balanced regime (see the oracle docstring)
    op6 = build_dirichlet_laplacian_1d(6, 1.0)
    lam6 = np.real(op6.eigenvalues_or_none())
    rng = np.random.default_rng(seed)
    worst_bf = 0.0
    for _ in range(5):
        x = op6.random_vector(rng)
        x = x / lp_norm(x, 2, op6.measure)
        n1 = float(np.sqrt(np.sum(np.abs(lam6 * op6.coefficients(x)) ** 2)))
        for t in (0.3 / n1, 0.5 / n1, 1.0 / n1):
            ka = k_functional(op6, x, t, 0.0, 1.0)
            kb = k_functional_bruteforce(op6, x, t, 0.0, 1.0)
            worst_bf = max(worst_bf, abs(ka - kb) / max(kb, 1e-300))
    ok = ok and worst_bf <= 1e-6
    # monotone nondecreasing and concave on a 50-point log grid
    op = build_dirichlet_laplacian_1d(32, 1.0)
    x = op.random_vector(np.random.default_rng(seed + 1))
    x = x / lp_norm(x, 2, op.measure)
    ts = np.logspace(-4, 4, 50)
    ks = np.array([k_functional(op, x, t, 0.0, 1.0) for t in ts])
    mono = bool(np.all(np.diff(ks) >= -1e-9 * ks[:-1]))
    # concavity in t: second divided differences nonpositive
    dd = np.diff(ks) / np.diff(ts)
    concave = bool(np.all(np.diff(dd) <= 1e-9 * max(ks)))
    ok = ok and mono and concave
    return CriterionResult(
        8, "K-functional", ok,
        f"scalar err {worst_scalar:.1e}; brute-force rel err {worst_bf:.1e}; "
        f"monotone={mono}, concave={concave}")


def criterion_9_interpolation_identification(seed: int = 19) -> CriterionResult:
    """Interpolation norm vs discrete Besov norm: bracket stable in size."""
    hom = build_homogeneous_dyadic()
    med = {}
    for n in (64, 128, 256):
        op = build_dirichlet_laplacian_1d(n, 1.0)
        rng = np.random.default_rng(seed + n)
        ratios = []
        for _ in range(10):
            x = op.random_vector(rng)
            x = x / lp_norm(x, 2, op.measure)
            num = real_interpolation_norm(op, x, 0.5, 2, 0.0, 1.0)
            den = besov_discrete_norm(op, hom, x, 0.5, 2, 2)
            ratios.append(num / den)
        med[n] = float(np.median(ratios))
    stable = max(med.values()) / min(med.values()) <= 2.0
    return CriterionResult(
        9, "real interpolation identification", stable,
        "median ratios " + ", ".join(f"n={n}: {v:.4f}" for n, v in med.items()))


def criterion_10_resolvent_scan(seed: int = 20) -> CriterionResult:
    """Self-adjoint rays obey sup <= 1/sin(omega); fitted growth order ~ 1."""
    op = build_dirichlet_laplacian_1d(64, 1.0)
    omegas = np.linspace(0.01, 0.5, 9)
    scan = resolvent_scan(op, omegas)
    ok = True
    worst = -np.inf
    for row in scan["rows"]:
        bound = 1.0 / np.sin(row["omega"])
        worst = max(worst, row["sup"] - bound)
        ok = ok and row["sup"] <= bound + 1e-9
    alpha = scan["fitted_alpha"]
    ok = ok and 0.9 <= alpha <= 1.1
    return CriterionResult(10, "resolvent growth scan", ok,
                           f"max (sup - 1/sin) = {worst:.2e}, fitted alpha = {alpha:.3f}")


def criterion_11_strip_bisectorial(seed: int = 21) -> CriterionResult:
    """Equidistant blocks of log(A) obey the sandwich; double-sector
    projections resolve the identity and agree with the direct route."""
    op = build_hermite_operator(1, 24, _hermite_grid(24))
    strip = log_operator(op)
    equi = build_equidistant()
    rng = np.random.default_rng(seed)
    lo, hi = np.inf, -np.inf
    for _ in range(25):
        x = op.random_vector(rng)
        x = x / lp_norm(x, 2, op.measure)
        r = pl_square_norm(strip, equi, x, 2)
        lo, hi = min(lo, r), max(hi, r)
    ok = lo >= SQRT_HALF - 1e-9 and hi <= 1.0 + 1e-9
    # double sector
    lams = [1.0, 2.0, 4.0, -1.0, -2.0, -4.0, 1.5, -3.0]
    bis = build_nonnormal_sectorial(lams, 5.0, seed)
    p1, p2 = bisectorial_projections(bis)
    resolution = float(np.linalg.norm(p1.p + p2.p - np.eye(bis.n)))
    hom = build_homogeneous_dyadic()
    f = lambda s: hom.window(0, s)
    worst_dual = 0.0
    for _ in range(10):
        x = bis.random_vector(rng)
        x = x / np.linalg.norm(x)
        ya = even_multiplier_direct(bis, f, x)
        yb = even_multiplier_via_projections(bis, f, x)
        worst_dual = max(worst_dual, float(np.linalg.norm(ya - yb)))
    ok = ok and resolution <= 1e-10 and worst_dual <= 1e-10
    return CriterionResult(
        11, "strip and double-sector variants", ok,
        f"strip sandwich [{lo:.6f}, {hi:.6f}]; ||P1+P2-I|| = {resolution:.1e}; "
        f"even dual-path gap {worst_dual:.1e}")


def criterion_12_noninjective(seed: int = 22) -> CriterionResult:
    """Graph Laplacians: kernel split norm is a reproducible finite bracket
    and the constants really are in the kernel."""
    hom = build_homogeneous_dyadic()
    two = np.array([[1.0, 1.0], [1.0, 1.0]])
    path4 = np.eye(4) + np.diag(np.ones(3), 1) + np.diag(np.ones(3), -1)
    ok = True
    details = []
    for name, sigma in (("two-node", two), ("path-4", path4)):
        op, kp = build_graph_laplacian(sigma)
        const = np.ones(op.n, dtype=complex)
        az = op.apply(const)
        kernel_ok = float(np.max(np.abs(az))) <= 1e-13
        brackets = []
        for rep in range(2):
            rng = np.random.default_rng(seed)
            ratios = []
            for _ in range(40):
                x = op.random_vector(rng)
                x = x / lp_norm(x, 2, op.measure)
                px = kp.p @ x
                split = lp_norm(px, 2, op.measure) + pl_square_norm(op, hom, x, 2)
                ratios.append(split)
            brackets.append((float(np.min(ratios)), float(np.max(ratios))))
        reproducible = brackets[0] == brackets[1]
        lo, hi = brackets[0]
        finite = np.isfinite(lo) and np.isfinite(hi) and lo > 0
        in_theory = lo >= SQRT_HALF - 1e-9 and hi <= np.sqrt(2.0) + 1e-9
        ok = ok and kernel_ok and reproducible and finite and in_theory
        details.append(f"{name}: bracket [{lo:.6f}, {hi:.6f}], A(const)={float(np.max(np.abs(az))):.1e}")
    return CriterionResult(12, "non-injective handling", ok, "; ".join(details))


def criterion_13_multiplier_bound(seed: int = 23) -> CriterionResult:
    """Converse direction: ||f(A)|| / ||f|| stable across operator sizes."""
    maxima = {}
    for n in (64, 128, 256):
        op = build_dirichlet_laplacian_1d(n, 1.0)
        out = multiplier_bound_check(op, alpha=1.5, trials=100, seed=seed)
        maxima[n] = out["max_ratio"]
    stable = max(maxima.values()) / min(maxima.values()) <= 2.0
    return CriterionResult(
        13, "converse multiplier bound", stable,
        "max ratios " + ", ".join(f"n={n}: {v:.4f}" for n, v in maxima.items()))


def criterion_14_determinism(seed: int = 24, tmpdir: str | None = None) -> CriterionResult:
    """Same config, same seed: byte-identical experiment reports."""
    config = {
        "name": "determinism-probe",
        "operator": {"kind": "dirichlet1d", "n": 64, "h": 1.0},
        "norm_a": {"kind": "pl_square", "pnorm": 2},
        "norm_b": {"kind": "ambient", "pnorm": 2},
        "samples": 25,
        "seed": seed,
        "assert_bracket": [SQRT_HALF - 1e-9, 1.0 + 1e-9],
    }
    blob_a = json.dumps(run_equivalence(config).to_json(), sort_keys=True, indent=2)
    blob_b = json.dumps(run_equivalence(config).to_json(), sort_keys=True, indent=2)
    ok = blob_a.encode() == blob_b.encode()
    passed = ok and run_equivalence(config).passed
    return CriterionResult(14, "determinism", passed,
                           f"byte-identical={ok}, bracket passed={passed}")


ALL_CRITERIA: list[Callable[[], CriterionResult]] = [
    criterion_1_overlap_sandwich,
    criterion_2_fractional_sandwich,
    criterion_3_contour_vs_spectral,
    criterion_4_continuous_square_exactness,
    criterion_5_mcintosh,
    criterion_6_rademacher_square,
    criterion_7_besov_continuous_discrete,
    criterion_8_k_functional,
    criterion_9_interpolation_identification,
    criterion_10_resolvent_scan,
    criterion_11_strip_bisectorial,
    criterion_12_noninjective,
    criterion_13_multiplier_bound,
    criterion_14_determinism,
]


def run_all(echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for crit in ALL_CRITERIA:
        res = crit()
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
