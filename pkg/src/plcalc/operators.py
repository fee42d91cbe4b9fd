"""Finite-dimensional sectorial model operators.

Every operator carries a measure space (hosting the L^p norms), a sector
angle for its nonzero spectrum, an injectivity flag and spectral bounds
(lambda_min over the nonzero spectrum, lambda_max).  Three forms:

  SpectralSelfAdjoint   eigenvalues >= 0 ascending with eigenvectors
                        orthonormal in the weighted inner product; the
                        eigenvector matrix may be rectangular (n x K),
                        in which case the operator lives on the K-mode
                        span inside the ambient grid space (Hermite).
  SimilarityDiagonal    A = S diag(lambda) S^{-1} with controlled cond(S);
                        complex spectrum, used for non-normal and
                        double-sector examples.
  MatrixOnly            dense matrix; resolvents go through LU solves.

Builders: 1d Dirichlet Laplacian (closed-form spectrum), weighted graph
Laplacian I - P (self-adjoint wrt the vertex measure mu(x) = sum_y

sigma(x,y), kernel = constants), Hermite expansion (eigenvalues d + 2n on
discretized Hermite functions), Schroedinger -Delta + V, and a synthetic
non-normal operator with prescribed spectrum and conditioning.

Operators that are not injective expose the projection onto their kernel;
all downstream block machinery only ever evaluates windows that vanish at
0, so the injective part needs no special casing there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measure import (
    LinAlgError,
    MeasureSpace,
    lp_norm,
    solve_complex,
    weighted_symmetric_eig,
)

ORTHO_TOL = 1e-10
SIMILARITY_TOL = 1e-10
PROJ_TOL = 1e-10
RESOLVENT_MARGIN = 1e-12   # reject lambda within this times lambda_max of spectrum
ZERO_EIG_TOL = 1e-12       # relative threshold deciding kernel membership


class OperatorError(ValueError):
    pass


class GraphError(OperatorError):
    """Invalid weight matrix or disconnected graph."""


@dataclass
class SpectralSelfAdjoint:
    eigenvalues: np.ndarray        # real, >= 0, ascending, length K
    eigenvectors: np.ndarray       # n x K, orthonormal wrt the measure

    @property
    def kind(self):
        return "spectral"


@dataclass
class SimilarityDiagonal:
    s: np.ndarray
    s_inv: np.ndarray
    eigenvalues: np.ndarray        # complex, length n

    @property
    def kind(self):
        return "similarity"


@dataclass
class MatrixOnly:
    mat: np.ndarray

    @property
    def kind(self):
        return "matrix"


@dataclass
class KernelProjection:
    """Projector onto N(A); idempotent, annihilated by A."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=complex)
        defect = np.linalg.norm(p @ p - p)
        if defect > PROJ_TOL * max(1.0, np.linalg.norm(p)):
            raise OperatorError(f"projector is not idempotent (defect {defect:.2e})")
        self.p = p


def kernel_projection_apply(kp: KernelProjection, x) -> np.ndarray:
    return kp.p @ np.asarray(x, dtype=complex)


@dataclass
class ModelOperator:
    form: SpectralSelfAdjoint | SimilarityDiagonal | MatrixOnly
    measure: MeasureSpace
    sector_angle_hint: float
    injective: bool
    spectral_bounds: tuple            # (lambda_min_positive, lambda_max), moduli
    bisectorial: bool = False         # spectrum in a double sector around R
    kernel_projection: KernelProjection | None = None
    spec: dict = field(default_factory=dict)   # construction echo for reports

    def __post_init__(self):
        if not (0.0 <= self.sector_angle_hint < np.pi / 2):
            raise OperatorError("sector angle hint must lie in [0, pi/2)")
        lam = self.eigenvalues_or_none()
        if lam is not None:
            nz = lam[np.abs(lam) > ZERO_EIG_TOL * max(np.max(np.abs(lam)), 1e-300)]
            if nz.size:
                ang = np.abs(np.angle(nz))
                if self.bisectorial:
                    ang = np.minimum(ang, np.pi - ang)
                if np.max(ang) > self.sector_angle_hint + 1e-12:
                    raise OperatorError(
                        f"eigenvalue outside declared sector (angle {np.max(ang):.3f} "
                        f"> hint {self.sector_angle_hint:.3f})")
            has_zero = nz.size < lam.size
            if self.injective == has_zero:
                raise OperatorError("injective flag contradicts the spectrum")
        if isinstance(self.form, SpectralSelfAdjoint):
            q = self.form.eigenvectors
            w = self.measure.weights
            gram = q.conj().T @ (w[:, None] * q)
            if np.max(np.abs(gram - np.eye(q.shape[1]))) > ORTHO_TOL:
                raise OperatorError("eigenvectors are not orthonormal wrt the measure")
        if isinstance(self.form, SimilarityDiagonal):
            s, si = self.form.s, self.form.s_inv
            if np.linalg.norm(s @ si - np.eye(s.shape[0])) > SIMILARITY_TOL * s.shape[0]:
                raise OperatorError("similarity inverse fails ||S S^-1 - I|| tolerance")

    # -- basic structure ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.measure.size

    def eigenvalues_or_none(self):
        if isinstance(self.form, SpectralSelfAdjoint):
            return self.form.eigenvalues.astype(complex)
        if isinstance(self.form, SimilarityDiagonal):
            return self.form.eigenvalues
        return None

    @property
    def lambda_min_positive(self) -> float:
        return float(self.spectral_bounds[0])

    @property
    def lambda_max(self) -> float:
        return float(self.spectral_bounds[1])

    def matrix(self) -> np.ndarray:
        """Assemble the dense matrix of A."""
        if isinstance(self.form, SpectralSelfAdjoint):
            q, lam = self.form.eigenvectors, self.form.eigenvalues
            w = self.measure.weights
            return (q * lam[None, :]) @ (q.conj().T * w[None, :])
        if isinstance(self.form, SimilarityDiagonal):
            return (self.form.s * self.form.eigenvalues[None, :]) @ self.form.s_inv
        return self.form.mat

    def coefficients(self, x) -> np.ndarray:
        """Expansion coefficients of x in the operator's eigenbasis."""
        x = np.asarray(x, dtype=complex)
        if isinstance(self.form, SpectralSelfAdjoint):
            return self.form.eigenvectors.conj().T @ (self.measure.weights * x)
        if isinstance(self.form, SimilarityDiagonal):
            return self.form.s_inv @ x
        raise OperatorError("matrix-only operator has no eigenbasis")

    def synthesize(self, coeffs) -> np.ndarray:
        if isinstance(self.form, SpectralSelfAdjoint):
            return self.form.eigenvectors @ np.asarray(coeffs, dtype=complex)
        if isinstance(self.form, SimilarityDiagonal):
            return self.form.s @ np.asarray(coeffs, dtype=complex)
        raise OperatorError("matrix-only operator has no eigenbasis")

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if isinstance(self.form, MatrixOnly):
            return self.form.mat @ x
        lam = self.eigenvalues_or_none()
        return self.synthesize(lam * self.coefficients(x))

    def random_vector(self, rng: np.random.Generator) -> np.ndarray:
        """I.i.d. complex Gaussian spectral content (span of the modes)."""
        if isinstance(self.form, MatrixOnly):
            return rng.standard_normal(self.n) + 1j * rng.standard_normal(self.n)
        k = self.eigenvalues_or_none().size
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        return self.synthesize(c)

    def kernel_dim(self) -> int:
        lam = self.eigenvalues_or_none()
        if lam is None:
            return 0
        scale = max(np.max(np.abs(lam)), 1e-300)
        return int(np.sum(np.abs(lam) <= ZERO_EIG_TOL * scale))


def _bounds_from_eigenvalues(lam) -> tuple:
    mod = np.abs(np.asarray(lam))
    scale = max(float(np.max(mod)), 1e-300)
    nz = mod[mod > ZERO_EIG_TOL * scale]
    if nz.size == 0:
        raise OperatorError("operator has no nonzero spectrum")
    return (float(np.min(nz)), float(np.max(mod)))


# -- builders ----------------------------------------------------------------

def build_dirichlet_laplacian_1d(n: int, h: float) -> ModelOperator:
    """Tridiagonal (2,-1,-1)/h^2 with closed-form spectrum.

    Eigenvalues (2 - 2 cos(k pi/(n+1)))/h^2 and sine eigenvectors,
    orthonormal wrt the grid measure w_i = h.
    """
    if n < 1 or h <= 0:
        raise OperatorError("need n >= 1 and h > 0")
    k = np.arange(1, n + 1)
    lam = (2.0 - 2.0 * np.cos(k * np.pi / (n + 1))) / h**2
    i = np.arange(1, n + 1)
    q = np.sin(np.outer(i, k) * np.pi / (n + 1)) * np.sqrt(2.0 / ((n + 1) * h))
    m = MeasureSpace(weights=np.full(n, h), points=i * h)
    return ModelOperator(
        form=SpectralSelfAdjoint(lam, q.astype(complex)),
        measure=m, sector_angle_hint=0.0, injective=True,
        spectral_bounds=_bounds_from_eigenvalues(lam),
        spec={"kind": "dirichlet1d", "n": n, "h": h},
    )


def build_graph_laplacian(sigma) -> tuple:
    """Graph Laplacian A = I - P for a symmetric weight sigma with loops.

    mu(x) = sum_y sigma(x,y), p(x,y) = sigma(x,y)/(mu(x) mu(y)) and
    P f(x) = sum_y p(x,y) f(y) mu(y).  A is self-adjoint wrt mu, has
    eigenvalue 0 on the constants (P is mu-stochastic), and is returned
    with the projection onto its kernel.  Raises GraphError for an
    asymmetric weight, nonpositive loops, or a disconnected graph
    (eigenvalue 0 of multiplicity > 1).
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    if sigma.shape != (n, n):
        raise GraphError("sigma must be square")
    if np.any(sigma < 0):
        raise GraphError("sigma must be nonnegative")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * max(np.max(sigma), 1e-300)):
        raise GraphError("sigma must be symmetric")
    if np.any(np.diag(sigma) <= 0):
        raise GraphError("sigma(x,x) must be positive")
    mu = sigma.sum(axis=1)
    m = MeasureSpace(weights=mu)
    a = np.eye(n) - sigma / mu[:, None]
    lam, q = weighted_symmetric_eig(a, m)
    lam = np.maximum(lam, 0.0) if lam.min() > -1e-12 else lam
    zero_mult = int(np.sum(np.abs(lam) <= 1e-10 * max(np.max(np.abs(lam)), 1.0)))
    if zero_mult != 1:
        raise GraphError(f"graph is disconnected (kernel multiplicity {zero_mult})")
    order = np.argsort(lam)
    lam, q = lam[order], q[:, order]
    lam[0] = 0.0
    proj = np.tile(mu / mu.sum(), (n, 1))       # mu-weighted mean onto constants
    kp = KernelProjection(proj.astype(complex))
    op = ModelOperator(
        form=SpectralSelfAdjoint(lam, q.astype(complex)),
        measure=m, sector_angle_hint=0.0, injective=False,
        spectral_bounds=_bounds_from_eigenvalues(lam),
        kernel_projection=kp,
        spec={"kind": "graph", "sigma": sigma.tolist()},
    )
    return op, kp


def hermite_functions(num: int, x: np.ndarray) -> np.ndarray:
    """First ``num`` L^2-normalized Hermite functions on the points x.

    Stable three-term recurrence
        h_0 = pi^(-1/4) e^(-x^2/2),  h_1 = sqrt(2) x h_0,
        h_{n+1} = sqrt(2/(n+1)) x h_n - sqrt(n/(n+1)) h_{n-1}.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((num, x.size))
    h0 = np.pi**-0.25 * np.exp(-0.5 * x**2)
    out[0] = h0
    if num > 1:
        out[1] = np.sqrt(2.0) * x * h0
    for n in range(1, num - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def build_hermite_operator(d: int, num_modes: int, grid: MeasureSpace,
                           gram_tol: float = 1e-6) -> ModelOperator:
    """Eigenvalues d, d+2, ..., d+2(K-1) on discretized Hermite functions.

    The grid must be wide and fine enough that the discretized Hermite
    functions are orthonormal wrt the grid weights to ``gram_tol``; they
    are then re-orthonormalized (modified Gram-Schmidt in the weighted
    inner product) so the spectral form is exact.
    """
    if d < 1 or num_modes < 1:
        raise OperatorError("need d >= 1 and num_modes >= 1")
    v = hermite_functions(num_modes, grid.points).T    # n x K
    w = grid.weights
    gram = v.T @ (w[:, None] * v)
    defect = float(np.max(np.abs(gram - np.eye(num_modes))))
    if defect > gram_tol:
        raise OperatorError(
            f"grid too coarse or narrow: Hermite Gram defect {defect:.2e} > {gram_tol:.0e}")
    q = v.astype(complex).copy()
    for k in range(num_modes):                         # modified Gram-Schmidt
        for j in range(k):
            q[:, k] -= (q[:, j].conj() @ (w * q[:, k])) * q[:, j]
        q[:, k] /= np.sqrt(np.real(q[:, k].conj() @ (w * q[:, k])))
    lam = d + 2.0 * np.arange(num_modes)
    return ModelOperator(
        form=SpectralSelfAdjoint(lam, q),
        measure=grid, sector_angle_hint=0.0, injective=True,
        spectral_bounds=_bounds_from_eigenvalues(lam),
        spec={"kind": "hermite", "d": d, "K": num_modes},
    )


def uniform_grid(lo: float, hi: float, n: int) -> MeasureSpace:
    """Midpoint-rule grid on [lo, hi]: cell centers with equal weights dx."""
    dx = (hi - lo) / n
    pts = lo + (np.arange(n) + 0.5) * dx
    return MeasureSpace(weights=np.full(n, dx), points=pts)


def build_schrodinger_1d(n: int, h: float, v) -> ModelOperator:
    """Discrete -Delta + V for entrywise nonnegative V (keeps sectoriality)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise OperatorError(f"potential must have length {n}")
    if np.any(v < 0):
        raise OperatorError("negative potential entries are out of scope")
    if n < 1 or h <= 0:
        raise OperatorError("need n >= 1 and h > 0")
    a = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1)
         - np.diag(np.ones(n - 1), -1)) / h**2 + np.diag(v)
    m = MeasureSpace(weights=np.full(n, h), points=(np.arange(1, n + 1)) * h)
    lam, q = weighted_symmetric_eig(a, m)
    return ModelOperator(
        form=SpectralSelfAdjoint(lam, q),
        measure=m, sector_angle_hint=0.0, injective=True,
        spectral_bounds=_bounds_from_eigenvalues(lam),
        spec={"kind": "schrodinger", "n": n, "h": h, "V": v.tolist()},
    )


def _blend_conditioning(n: int, kappa: float, rng: np.random.Generator):
    """S = Q (I + t N) with ||N||_2 = 1, t bisected so cond(S) ~ kappa."""
    qmat, _ = np.linalg.qr(rng.standard_normal((n, n)))
    nil = np.tril(rng.standard_normal((n, n)), -1)
    if n > 1:
        nil /= np.linalg.norm(nil, 2)

    def build(t):
        s = qmat @ (np.eye(n) + t * nil)
        return s, np.linalg.cond(s)

    if kappa == 1.0 or n == 1:
        return build(0.0)[0]
    t_lo, t_hi = 0.0, 1.0
    while build(t_hi)[1] < kappa:
        t_hi *= 2.0
        if t_hi > 1e8:
            break
    for _ in range(60):
        mid = 0.5 * (t_lo + t_hi)
        if build(mid)[1] < kappa:
            t_lo = mid
        else:
            t_hi = mid
    return build(0.5 * (t_lo + t_hi))[0]


def build_nonnormal_sectorial(lambdas, conditioning: float, seed: int) -> ModelOperator:
    """A = S diag(lambdas) S^{-1} with cond(S) ~ conditioning.

    The spectrum equals ``lambdas`` exactly by construction.  Eigenvalues
    with negative real part are admitted as a double sector (bisectorial
    flag set); otherwise all nonzero eigenvalues must satisfy
    |arg lambda| < pi/2.
    """
    lam = np.asarray(lambdas, dtype=complex)
    if conditioning < 1.0:
        raise OperatorError("conditioning must be >= 1")
    if np.any(np.abs(lam) == 0):
        raise OperatorError("zero eigenvalue not allowed in the synthetic build")
    ang = np.abs(np.angle(lam))
    bisect = bool(np.any(np.real(lam) < 0))
    if bisect:
        ang = np.minimum(ang, np.pi - ang)
        if np.any(np.abs(np.real(lam)) < 1e-14 * np.max(np.abs(lam))):
            raise OperatorError("double-sector spectrum must avoid the imaginary axis")
    hint = float(np.max(ang))
    if hint >= np.pi / 2:
        raise OperatorError("eigenvalues must lie strictly inside the (double) sector")
    rng = np.random.default_rng(seed)
    s = _blend_conditioning(lam.size, float(conditioning), rng).astype(complex)
    s_inv = np.linalg.inv(s)
    m = MeasureSpace.uniform(lam.size)
    return ModelOperator(
        form=SimilarityDiagonal(s, s_inv, lam),
        measure=m, sector_angle_hint=hint, injective=True,
        spectral_bounds=_bounds_from_eigenvalues(lam),
        bisectorial=bisect,
        spec={"kind": "nonnormal",
              "lambdas": [[z.real, z.imag] for z in lam],
              "conditioning": conditioning, "seed": seed},
    )


# -- resolvent ----------------------------------------------------------------

def resolvent_apply(op: ModelOperator, lam: complex, x) -> np.ndarray:
    """(lambda - A)^{-1} x via the spectral form when available, else LU."""
    x = np.asarray(x, dtype=complex)
    ev = op.eigenvalues_or_none()
    if ev is not None:
        gap = np.min(np.abs(lam - ev))
        if gap <= RESOLVENT_MARGIN * op.lambda_max:
            raise OperatorError(f"lambda {lam} is within tolerance of the spectrum")
        return op.synthesize(op.coefficients(x) / (lam - ev))
    a = lam * np.eye(op.n) - op.form.mat
    try:
        return solve_complex(a, x)
    except LinAlgError as exc:
        raise OperatorError(f"resolvent solve failed at lambda {lam}: {exc}") from exc


def resolvent_apply_lu(op: ModelOperator, lam: complex, x) -> np.ndarray:
    """LU-path resolvent on the assembled matrix (dual-path oracle)."""
    x = np.asarray(x, dtype=complex)
    a = lam * np.eye(op.n, dtype=complex) - op.matrix()
    return solve_complex(a, x)


# -- JSON construction ---------------------------------------------------------

def operator_from_spec(spec: dict) -> ModelOperator:
    """Build an operator from its JSON description (CLI surface)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise OperatorError("operator spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "dirichlet1d":
        return build_dirichlet_laplacian_1d(int(spec["n"]), float(spec.get("h", 1.0)))
    if kind == "graph":
        op, _ = build_graph_laplacian(spec["sigma"])
        return op
    if kind == "hermite":
        g = spec.get("grid", {})
        grid = uniform_grid(float(g.get("lo", -12.0)), float(g.get("hi", 12.0)),
                            int(g.get("n", 800)))
        return build_hermite_operator(int(spec["d"]), int(spec["K"]), grid)
    if kind == "schrodinger":
        n, h = int(spec["n"]), float(spec.get("h", 1.0))
        v = spec.get("V", 0.0)
        if isinstance(v, dict) and "quadratic" in v:
            x = (np.arange(1, n + 1) - (n + 1) / 2) * h
            v = (float(v["quadratic"]) * x) ** 2
        elif np.isscalar(v):
            v = np.full(n, float(v))
        return build_schrodinger_1d(n, h, np.asarray(v, dtype=float))
    if kind == "nonnormal":
        lam = [complex(re, im) for re, im in spec["lambdas"]]
        return build_nonnormal_sectorial(lam, float(spec.get("conditioning", 1.0)),
                                         int(spec.get("seed", 0)))
    raise OperatorError(f"unknown operator kind {kind!r}")


def ambient_norm(op: ModelOperator, x, p=2) -> float:
    return lp_norm(x, p, op.measure)
