"""
Pointwise analyses built on :class:`~centroaffine.geometry.CentroaffineData`:
the Ejiri basis, the Tchebychev check, the identities satisfied where the
covariant derivative of K is pure trace, and the classification of points
and samples against the equality cases of the inequality.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels, geometry
from .errors import CentroaffineError, OptimizerError

# verdicts
QUADRIC_CENTERED = "quadric centered at origin"
QUADRIC_OFF_CENTER = "hyperquadric without center at origin (Theorem 1.1 (i))"
PARALLEL_CUBIC = "parallel cubic form (Theorem 1.1 (ii)–(viii))"
EQUALITY_MIXED = "equality point, mixed/undetermined"
STRICT = "strict inequality"

AGG_EQUALITY = "equality at all sampled points"
AGG_STRICT = "strict inequality at all sampled points"
AGG_MIXED = "mixed: equality at some sampled points only"


@dataclass(frozen=True)
class Tolerances:
    k_zero: float = 1e-8
    ktilde_zero: float = 1e-8
    nablak_zero: float = 1e-7
    equality: float = 1e-8
    tchebychev: float = 1e-7
    inequality: float = 1e-8
    residual: float = 1e-8
    identity: float = 1e-5
    form: float = 1e-7

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive, got {value!r}")

    def scaled(self, factor):
        return Tolerances(**{k: v * factor for k, v in asdict(self).items()})


# --------------------------------------------------------------------------
# Ejiri basis


@dataclass
class EjiriBasis:
    e: np.ndarray  # rows are the basis vectors in chart coordinates
    frame_vectors: np.ndarray  # the same vectors in the orthonormal frame of data.frame
    lambdas: np.ndarray
    fmax: float
    degenerate: bool
    converged_starts: int = 0
    total_starts: int = 0


def _cubic_value(cubic, x):
    return float(np.einsum("mij,m,i,j->", cubic, x, x, x))


def _tangent_basis(x):
    n = x.shape[0]
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(n)]))
    return q[:, 1:n]


def _newton_polish(cubic, x, maxiter=100):
    """Riemannian Newton ascent for f(x) = C(x, x, x) on the unit sphere."""
    f = _cubic_value(cubic, x)
    for _ in range(maxiter):
        Q = _tangent_basis(x)
        Kx = np.einsum("mij,i->mj", cubic, x)
        grad = Q.T @ (Kx @ x)
        H = Q.T @ (2.0 * Kx - f * np.eye(x.shape[0])) @ Q
        evals = np.linalg.eigvalsh(H)
        if evals[-1] >= 0.0:
            break
        step = -np.linalg.solve(H, grad)
        x_new = x + Q @ step
        x_new /= np.linalg.norm(x_new)
        f_new = _cubic_value(cubic, x_new)
        if f_new < f - 1e-15 * (1.0 + abs(f)):
            break
        moved = np.linalg.norm(x_new - x)
        x, f = x_new, f_new
        if moved <= 1e-12:
            break
    return x, f


def _stationarity(cubic, x):
    Kxx = np.einsum("mij,i,j->m", cubic, x, x)
    return float(np.linalg.norm(Kxx - (x @ Kxx) * x))


def maximize_cubic(cubic, norm_k, seed=0, tol=1e-12, maxiter=500):
    """Global max of ``C(x, x, x)`` on the unit sphere by multi-start SS-HOPM.

    Starts: 8n seeded Gaussian directions plus the 2n signed axes; shift
    ``1 + norm_k``. Every end point is refined by Newton; a start counts as
    converged when its SS-HOPM step fell below ``tol`` or the refined point is
    stationary to ``1e-10 (1 + norm_k)``.
    Returns (best vector, best value, number converged, number of starts).
    """
    n = cubic.shape[0]
    rng = np.random.default_rng(seed)
    starts = np.vstack([rng.normal(size=(8 * n, n)), np.eye(n), -np.eye(n)])
    X, f, _, conv = _kernels.sshopm(
        np.ascontiguousarray(cubic), starts, 1.0 + norm_k, tol, maxiter
    )
    stat_tol = 1e-10 * (1.0 + norm_k)
    ok = []
    for s in range(X.shape[0]):
        x, val = _newton_polish(cubic, X[s])
        if conv[s] or _stationarity(cubic, x) <= stat_tol:
            ok.append((val, x))
    if not ok:
        raise OptimizerError(
            f"none of {X.shape[0]} SS-HOPM starts converged within {maxiter} iterations"
        )
    best = max(v for v, _ in ok)
    ties = [x for v, x in ok if v >= best - 1e-10 * (1.0 + abs(best))]
    # deterministic pick among near-equal maximizers
    x = min(ties, key=lambda v: tuple(np.round(v, 9)))
    return x, _cubic_value(cubic, x), len(ok), X.shape[0]


def ejiri_basis(data, seed=0):
    """h-orthonormal basis e_1..e_n with e_1 maximizing f(u) = h(K_u u, u)
    and K_{e_1} e_i = lambda_i e_i."""
    n = data.n
    E = data.frame
    cubic = geometry.frame_components(data)["K"]
    cubic = (
        cubic
        + cubic.transpose(0, 2, 1)
        + cubic.transpose(1, 0, 2)
        + cubic.transpose(1, 2, 0)
        + cubic.transpose(2, 0, 1)
        + cubic.transpose(2, 1, 0)
    ) / 6.0
    norm_k = data.normK
    threshold = 1e-9 * (1.0 + norm_k**1.5)

    if norm_k <= threshold:
        x, fmax, nconv, nstart = np.eye(n)[0], 0.0, 0, 0
    else:
        x, fmax, nconv, nstart = maximize_cubic(cubic, norm_k, seed=seed)
    degenerate = fmax <= threshold

    Q = _tangent_basis(x)
    M = np.einsum("mij,i->mj", cubic, x)
    if n > 1:
        w, V = np.linalg.eigh(Q.T @ M @ Q)
        order = np.argsort(-w, kind="stable")
        rest = Q @ V[:, order]
        lambdas = np.concatenate([[x @ M @ x], w[order]])
        U = np.column_stack([x, rest])
    else:
        lambdas = np.array([x @ M @ x])
        U = x[:, None]
    if degenerate:
        lambdas = np.zeros(n) if norm_k <= threshold else lambdas
    return EjiriBasis(
        e=(E @ U).T,
        frame_vectors=U.T,
        lambdas=lambdas,
        fmax=float(fmax),
        degenerate=bool(degenerate),
        converged_starts=nconv,
        total_starts=nstart,
    )


def ejiri_report(data, basis):
    """Residuals of the basis contract (orthonormality, eigen-equation, lambda_1 >= 2 lambda_i bound)."""
    norm_k = data.normK
    gram = basis.e @ data.h @ basis.e.T
    ortho = float(np.max(np.abs(gram - np.eye(data.n))))
    cubic = geometry.frame_components(data)["K"]
    U = basis.frame_vectors
    M = np.einsum("mij,i->mj", cubic, U[0])
    eig = float(np.max(np.abs(U @ M - basis.lambdas[:, None] * U))) if data.n else 0.0
    bound = float(np.min(basis.lambdas[0] - 2.0 * basis.lambdas[1:])) if data.n > 1 else 0.0
    return {
        "orthonormality": ortho,
        "eigen_residual": eig,
        "lambda1_minus_fmax": float(abs(basis.lambdas[0] - basis.fmax)),
        "min_lambda1_minus_2lambda_i": bound,
        "bound_ok": bool(basis.degenerate or bound >= -1e-7 * (1.0 + norm_k)),
    }


# --------------------------------------------------------------------------
# Tchebychev hypersurface check


@dataclass
class TchebychevCheck:
    is_tchebychev: bool
    lam: float
    residual: float


def tchebychev_check(data, tol=1e-7):
    nT = geometry.frame_components(data)["nablaT"]
    lam = float(np.trace(nT)) / data.n
    residual = float(np.max(np.abs(nT - lam * np.eye(data.n))))
    ok = residual <= tol * (1.0 + np.sqrt(data.normNablaT2))
    return TchebychevCheck(bool(ok), lam, residual)


# --------------------------------------------------------------------------
# identities along the Ejiri basis where nabla K = mu (dd + dd + dd)


def trace_form(n):
    d = np.eye(n)
    return (
        np.einsum("kl,ij->kijl", d, d)
        + np.einsum("il,jk->kijl", d, d)
        + np.einsum("jl,ik->kijl", d, d)
    )


def pure_trace_residual(data):
    """Max-abs distance of K^k_ij,l from mu (d_kl d_ij + d_il d_jk + d_jl d_ik) in an orthonormal frame."""
    nK = geometry.frame_components(data)["nablaK"]
    return float(np.max(np.abs(nK - data.mu * trace_form(data.n))))


def mu_gradient(surface, point, step=1e-4):
    """Chart gradient of mu by central differences."""
    point = np.asarray(point, dtype=float)
    grad = np.zeros(point.shape[0])
    for i in range(point.shape[0]):
        dp = np.zeros_like(point)
        dp[i] = step
        plus = geometry.centroaffine_data(surface, point + dp).mu
        minus = geometry.centroaffine_data(surface, point - dp).mu
        grad[i] = (plus - minus) / (2 * step)
    return grad


@dataclass
class IdentityReport:
    status: str  # "ok", "not applicable", "degenerate basis"
    form_residual: float
    mu: float
    directional_mu: Optional[np.ndarray] = None
    lambdas: Optional[np.ndarray] = None
    res_e_l_mu: float = float("nan")  # max_{l>=2} |e_l(mu)|
    res_e_1_mu: float = float("nan")  # max_l |e_1(mu) - (2 l_l - l_1)(l_l^2 - l_1 l_l + eps)|
    res_offdiag: float = float("nan")  # max |(2 l_k - l_1)(l_l - l_j) K^l_jk|
    res_diag: float = float("nan")  # max |(l_l^2 - l_1 l_l + eps) K^l_ll|
    rhs_e_1_mu: Optional[np.ndarray] = None

    def passed(self, tol_e_l=1e-6, tol_e_1=1e-5, tol_k=1e-6):
        if self.status != "ok":
            return True
        return (
            self.res_e_l_mu <= tol_e_l
            and self.res_e_1_mu <= tol_e_1
            and self.res_offdiag <= tol_k
            and self.res_diag <= tol_k
        )


def proof_identity_check(data, basis, directional_mu, form_tol=1e-7):
    """Residuals of the identities that hold where nabla K is pure trace.

    ``directional_mu[l]`` is the derivative of mu along ``basis.e[l]``.
    """
    form = pure_trace_residual(data)
    if form > form_tol * (1.0 + data.normNablaK):
        return IdentityReport("not applicable", form, data.mu)
    if basis.degenerate:
        return IdentityReport("degenerate basis", form, data.mu)

    n = data.n
    lam = np.asarray(basis.lambdas, dtype=float)
    dmu = np.asarray(directional_mu, dtype=float)
    eps = data.epsilon
    l1 = lam[0]
    rest = lam[1:]
    rhs = (2 * rest - l1) * (rest**2 - l1 * rest + eps)

    # K^l_jk in the Ejiri frame
    cubic = geometry.frame_components(data)["K"]
    U = basis.frame_vectors
    Ke = np.einsum("mij,am,bi,cj->abc", cubic, U, U, U)  # Ke[l, j, k] = K_jk^l

    offdiag = 0.0
    diag = 0.0
    for l in range(1, n):
        diag = max(diag, abs((lam[l] ** 2 - l1 * lam[l] + eps) * Ke[l, l, l]))
        for j in range(1, n):
            if j == l:
                continue
            for k in range(n):
                offdiag = max(offdiag, abs((2 * lam[k] - l1) * (lam[l] - lam[j]) * Ke[l, j, k]))

    return IdentityReport(
        "ok",
        form,
        data.mu,
        directional_mu=dmu,
        lambdas=lam,
        res_e_l_mu=float(np.max(np.abs(dmu[1:]))) if n > 1 else 0.0,
        res_e_1_mu=float(np.max(np.abs(dmu[0] - rhs))) if n > 1 else 0.0,
        res_offdiag=float(offdiag),
        res_diag=float(diag),
        rhs_e_1_mu=rhs,
    )


def identities_at(surface, point, step=1e-4, seed=0, form_tol=1e-7):
    """Compute data, Ejiri basis and the mu gradient, then check the identities."""
    data = geometry.centroaffine_data(surface, point)
    basis = ejiri_basis(data, seed=seed)
    grad = mu_gradient(surface, point, step)
    return proof_identity_check(data, basis, basis.e @ grad, form_tol=form_tol)


# --------------------------------------------------------------------------
# classification


@dataclass
class PointReport:
    point: np.ndarray
    predicates: dict
    verdict: str
    mu: float
    tchebychev_lambda: float


def predicates(data, tol=Tolerances()):
    nk = data.normK
    return {
        "K_zero": bool(nk <= tol.k_zero),
        "Ktilde_zero": bool(np.sqrt(data.normKtilde2) <= tol.ktilde_zero * (1 + nk)),
        "nablaK_zero": bool(data.normNablaK <= tol.nablak_zero * (1 + nk)),
        "equality_slack_zero": bool(data.slack <= tol.equality * (1 + data.normNablaK2)),
    }


def verdict_from(preds):
    if preds["K_zero"]:
        return QUADRIC_CENTERED
    if preds["Ktilde_zero"]:
        return QUADRIC_OFF_CENTER
    if preds["nablaK_zero"]:
        return PARALLEL_CUBIC
    if preds["equality_slack_zero"]:
        return EQUALITY_MIXED
    return STRICT


def classify_point(data, tol=Tolerances()):
    preds = predicates(data, tol)
    tc = tchebychev_check(data, tol.tchebychev)
    preds["tchebychev"] = tc.is_tchebychev
    return PointReport(np.array(data.point), preds, verdict_from(preds), data.mu, tc.lam)


@dataclass
class ClassificationReport:
    points: list
    verdict: str
    equality_everywhere: bool
    counts: dict
    skipped: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def common_verdict(self):
        """The pointwise verdict if every sampled point agrees, else None."""
        return next(iter(self.counts)) if len(self.counts) == 1 else None


def classify_surface(reports, skipped=0, tol=Tolerances()):
    reports = list(reports)
    if not reports:
        raise CentroaffineError(
            f"no successfully evaluated points to classify ({skipped} skipped)"
        )
    counts = {}
    for r in reports:
        counts[r.verdict] = counts.get(r.verdict, 0) + 1
    eq = [r.predicates["equality_slack_zero"] for r in reports]
    if all(eq):
        agg = AGG_EQUALITY
    elif not any(eq):
        agg = AGG_STRICT
    else:
        agg = AGG_MIXED
    return ClassificationReport(reports, agg, all(eq), counts, skipped, tol)


def with_corrupted_k(data, index=(0, 0, 0), amount=1.0):
    """Copy of ``data`` with one component of K shifted (negative-control helper)."""
    K = np.array(data.K)
    K[index] += amount
    return replace(data, K=K)
