"""
Pointwise centroaffine invariants of a parametrized hypersurface.

Everything is carried in chart coordinates. Jet-valued quantities are
``ndarray`` stacks with the coefficient axis last (see :mod:`.jets`); the
depth each one is trusted to is

    position x          degree 4
    h                   degree 2
    Gamma, GammaHat, K  degree 1
    T                   degree 1

and the remaining tensors are plain values at the base point.

Index layout of the value arrays:

    h[i, j]             Gamma[k, i, j] = Gamma^k_ij      K[k, i, j] = K^k_ij
    C[i, j, k]          T[i] = T^i                       Ktilde[k, i, j]
    nablaK[k, i, j, l] = K^k_ij,l                        nablaT[j, i] = T^j_,i
    Rhat[i, j, k, l]    fully lowered, unit sphere gives h_ik h_jl - h_il h_jk
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import jets
from .errors import DomainError, NotCentroaffineError, NotConvexError, SingularSystemError


@dataclass(frozen=True)
class ImmersionJet:
    n: int
    position: np.ndarray  # (n+1, size) jet coefficients
    base_point: np.ndarray

    @property
    def space(self):
        return jets.space(self.n)


@dataclass
class CentroaffineData:
    point: np.ndarray
    n: int
    epsilon: int
    # jets
    h_jet: np.ndarray
    Gamma_jet: np.ndarray
    GammaHat_jet: np.ndarray
    K_jet: np.ndarray
    T_jet: np.ndarray
    # values
    h: np.ndarray
    h_inv: np.ndarray
    Gamma: np.ndarray
    GammaHat: np.ndarray
    K: np.ndarray
    C: np.ndarray
    T: np.ndarray
    Tflat: np.ndarray
    Ktilde: np.ndarray
    nablaK: np.ndarray
    nablaT: np.ndarray
    Rhat: np.ndarray
    # scalars
    normK2: float = 0.0
    normKtilde2: float = 0.0
    normT2: float = 0.0
    normNablaK2: float = 0.0
    normNablaT2: float = 0.0
    slack: float = 0.0
    slack_difference: float = 0.0
    mu: float = 0.0
    scalar_curvature: float = 0.0
    normR2: float = 0.0
    frame: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def normK(self):
        return float(np.sqrt(self.normK2))

    @property
    def normNablaK(self):
        return float(np.sqrt(self.normNablaK2))

    def scalars(self):
        """Frame-independent scalar outputs, keyed by name."""
        return {
            "epsilon": float(self.epsilon),
            "normK2": self.normK2,
            "normKtilde2": self.normKtilde2,
            "normT2": self.normT2,
            "normNablaK2": self.normNablaK2,
            "normNablaT2": self.normNablaT2,
            "slack": self.slack,
            "slack_difference": self.slack_difference,
            "mu": self.mu,
            "scalar_curvature": self.scalar_curvature,
            "normR2": self.normR2,
        }


# --------------------------------------------------------------------------
# jets of the immersion


def immersion_jet(surface, point):
    """Order-4 jets of every ambient coordinate of ``surface`` at ``point``.

    ``surface`` is anything with ``n``, ``evaluate(args)`` and optionally
    ``guard_ok(point)``; both :class:`~centroaffine.dsl.SurfaceSpec` and catalog
    entries qualify.
    """
    point = np.asarray(point, dtype=float)
    n = surface.n
    if point.shape != (n,):
        raise ValueError(f"point must have {n} coordinates, got shape {point.shape}")
    guard_ok = getattr(surface, "guard_ok", None)
    if guard_ok is not None and not guard_ok(point):
        raise DomainError(f"point {point.tolist()} is outside the chart domain")
    sp = jets.space(n)
    seeds = [jets.TaylorJet(sp, sp.variable(i, p)) for i, p in enumerate(point)]
    comps = surface.evaluate(seeds)
    if len(comps) != n + 1:
        raise ValueError(f"surface returned {len(comps)} components, expected {n + 1}")
    position = np.array(
        [c.coeffs if isinstance(c, jets.TaylorJet) else sp.constant(float(c)) for c in comps]
    )
    return ImmersionJet(n, position, point)


# --------------------------------------------------------------------------
# Gauss split and connections


def gauss_split(ij):
    """Solve d_i d_j x = Gamma^k_ij d_k x + c_ij x and read off (epsilon, h, Gamma).

    ``h = -epsilon * c`` with the sign making ``h`` positive definite. Returns
    jets: ``h`` truncated at degree 2, ``Gamma`` at degree 1.
    """
    sp = ij.space
    n = ij.n
    X = ij.position
    dX = sp.grad(X)  # (n+1, n, size): dX[a, i] = d_i x_a
    ddX = sp.grad(dX)  # (n+1, n, n, size)
    A = np.concatenate([dX, X[:, None, :]], axis=1)
    rhs = ddX.reshape(n + 1, n * n, sp.size)
    try:
        sol = sp.solve(A, rhs)
    except SingularSystemError as exc:
        raise NotCentroaffineError(
            f"position vector is not transversal at {ij.base_point.tolist()}"
        ) from exc
    Gamma = sol[:n].reshape(n, n, n, sp.size)
    c = sol[n].reshape(n, n, sp.size)
    c = 0.5 * (c + c.transpose(1, 0, 2))
    Gamma = 0.5 * (Gamma + Gamma.transpose(0, 2, 1, 3))

    for eps, h in ((1, -c), (-1, c)):
        try:
            np.linalg.cholesky(h[..., 0])
        except np.linalg.LinAlgError:
            continue
        return eps, sp.truncate(h, 2), sp.truncate(Gamma, 1)
    raise NotConvexError(
        f"centroaffine metric is not definite at {ij.base_point.tolist()} "
        f"(eigenvalues of c: {np.linalg.eigvalsh(c[..., 0]).tolist()})"
    )


def levi_civita(h, sp):
    """Christoffel symbols GammaHat[k, i, j] of the jet metric ``h`` (degree 1)."""
    try:
        hinv = sp.inv(h)
    except SingularSystemError as exc:
        raise NotConvexError("metric is not invertible") from exc
    dh = sp.grad(h)  # dh[a, b, c] = d_c h_ab
    S = np.transpose(dh, (2, 0, 1, 3)) + np.transpose(dh, (0, 2, 1, 3)) - dh
    G = 0.5 * sp.mul(hinv[:, None, None, :, :], S[None]).sum(axis=3)
    return sp.truncate(G, 1)


def difference_tensor(Gamma, GammaHat, h, sp):
    """K = Gamma - GammaHat and the Tchebychev vector, both as degree-1 jets."""
    n = h.shape[0]
    K = Gamma - GammaHat
    hinv = sp.truncate(sp.inv(h), 1)
    Tflat = np.einsum("jij...->i...", K) / n  # trace of K_{d_i}
    T = sp.mul(hinv, Tflat[None, :, :]).sum(axis=1)
    return K, sp.truncate(T, 1)


def lower_ktilde(Klow, Tflat, h):
    """Ktilde_ijk = K_ijk - n/(n+2) (T_k h_ij + T_i h_jk + T_j h_ik) in lowered form."""
    n = h.shape[0]
    trace_part = (
        np.einsum("k,ij->ijk", Tflat, h)
        + np.einsum("i,jk->ijk", Tflat, h)
        + np.einsum("j,ik->ijk", Tflat, h)
    )
    return Klow - n / (n + 2) * trace_part


def covariant_derivatives(K_jet, T_jet, GammaHat, sp):
    """Values of K^k_ij,l and T^j_,i."""
    dK = sp.grad(K_jet)[..., 0]  # dK[k, i, j, l]
    K = K_jet[..., 0]
    G = GammaHat
    nablaK = (
        dK
        + np.einsum("klm,mij->kijl", G, K)
        - np.einsum("mli,kmj->kijl", G, K)
        - np.einsum("mlj,kim->kijl", G, K)
    )
    dT = sp.grad(T_jet)[..., 0]  # dT[j, i]
    nablaT = dT + np.einsum("jim,m->ji", G, T_jet[..., 0])
    return nablaK, nablaT


def curvature(GammaHat_jet, h, sp):
    """Fully lowered Riemann tensor of the metric at the base point."""
    dG = sp.grad(GammaHat_jet)[..., 0]  # dG[k, i, j, l] = d_l GammaHat^k_ij
    G = GammaHat_jet[..., 0]
    Rup = (
        np.einsum("rvsm->rsmv", dG)
        - np.einsum("rmsv->rsmv", dG)
        + np.einsum("rml,lvs->rsmv", G, G)
        - np.einsum("rvl,lms->rsmv", G, G)
    )
    return np.einsum("ar,rsmv->asmv", h, Rup)


# --------------------------------------------------------------------------
# contractions


def norm2(tensor, h, hinv, upper=()):
    """Squared h-norm of a tensor; axes listed in ``upper`` are contravariant."""
    t = np.asarray(tensor, dtype=float)
    other = t
    for ax in range(t.ndim):
        g = h if ax in upper else hinv
        other = np.moveaxis(np.tensordot(g, other, axes=([1], [ax])), 0, ax)
    return float(np.sum(t * other))


def orthonormal_frame(h):
    """Columns e_a with e^T h e = I, from the Cholesky factor of h."""
    L = np.linalg.cholesky(h)
    return np.linalg.inv(L).T


def to_frame(tensor, frame, upper=()):
    """Components of a coordinate tensor in the frame ``frame`` (columns)."""
    inv = np.linalg.inv(frame)
    t = np.asarray(tensor, dtype=float)
    for ax in range(t.ndim):
        M = inv if ax in upper else frame.T
        t = np.moveaxis(np.tensordot(M, t, axes=([1], [ax])), 0, ax)
    return t


def from_frame_vector(v, frame):
    return frame @ v


# --------------------------------------------------------------------------
# pipeline


def norms_and_slack(data):
    """Fill in the scalar norms, both slack evaluations and mu."""
    n, h, hinv = data.n, data.h, data.h_inv
    Klow = np.einsum("kl,lij->ijk", h, data.K)
    data.normK2 = norm2(Klow, h, hinv)
    Ktl = np.einsum("kl,lij->ijk", h, data.Ktilde)
    data.normKtilde2 = norm2(Ktl, h, hinv)
    data.normT2 = norm2(data.T, h, hinv, upper=(0,))
    data.normNablaK2 = norm2(data.nablaK, h, hinv, upper=(0,))
    data.normNablaT2 = norm2(data.nablaT, h, hinv, upper=(0,))

    # gradient of Ktilde, lowered: index order [i, j, k, l]
    nKlow = np.einsum("km,mijl->ijkl", h, data.nablaK)
    nTlow = h @ data.nablaT  # nTlow[k, l] = h_km T^m_,l
    trace_part = (
        np.einsum("kl,ij->ijkl", nTlow, h)
        + np.einsum("il,jk->ijkl", nTlow, h)
        + np.einsum("jl,ik->ijkl", nTlow, h)
    )
    data.slack = norm2(nKlow - n / (n + 2) * trace_part, h, hinv)
    data.slack_difference = data.normNablaK2 - 3 * n**2 / (n + 2) * data.normNablaT2
    data.mu = float(np.trace(data.nablaT)) / (n + 2)

    data.scalar_curvature = float(np.einsum("ik,jl,ijkl->", hinv, hinv, data.Rhat))
    data.normR2 = norm2(data.Rhat, h, hinv)
    return data


def centroaffine_data(surface, point):
    """Every pointwise invariant of ``surface`` at the chart point ``point``."""
    ij = immersion_jet(surface, point)
    return from_immersion_jet(ij)


def from_immersion_jet(ij):
    sp = ij.space
    n = ij.n
    eps, h_jet, Gamma_jet = gauss_split(ij)
    GammaHat_jet = levi_civita(h_jet, sp)
    K_jet, T_jet = difference_tensor(Gamma_jet, GammaHat_jet, h_jet, sp)

    h = h_jet[..., 0]
    h = 0.5 * (h + h.T)
    hinv = np.linalg.inv(h)
    K = K_jet[..., 0]
    T = T_jet[..., 0]
    Tflat = h @ T
    Klow = np.einsum("kl,lij->ijk", h, K)
    C = -2.0 * Klow
    Ktilde = np.einsum("kl,ijl->kij", hinv, lower_ktilde(Klow, Tflat, h))
    nablaK, nablaT = covariant_derivatives(K_jet, T_jet, GammaHat_jet[..., 0], sp)
    Rhat = curvature(GammaHat_jet, h, sp)

    data = CentroaffineData(
        point=np.array(ij.base_point),
        n=n,
        epsilon=eps,
        h_jet=h_jet,
        Gamma_jet=Gamma_jet,
        GammaHat_jet=GammaHat_jet,
        K_jet=K_jet,
        T_jet=T_jet,
        h=h,
        h_inv=hinv,
        Gamma=Gamma_jet[..., 0],
        GammaHat=GammaHat_jet[..., 0],
        K=K,
        C=C,
        T=T,
        Tflat=Tflat,
        Ktilde=Ktilde,
        nablaK=nablaK,
        nablaT=nablaT,
        Rhat=Rhat,
        frame=orthonormal_frame(h),
    )
    return norms_and_slack(data)


# --------------------------------------------------------------------------
# structural checks


def frame_components(data):
    """K^k_ij, K^k_ij,l, T^j_,i and R_ijkl in the h-orthonormal frame."""
    E = data.frame
    return {
        "K": to_frame(data.K, E, upper=(0,)),
        "nablaK": to_frame(data.nablaK, E, upper=(0,)),
        "nablaT": to_frame(data.nablaT, E, upper=(0,)),
        "T": to_frame(data.T, E, upper=(0,)),
        "Rhat": to_frame(data.Rhat, E),
    }


def gauss_codazzi_residuals(data):
    """Max-abs residuals of the Gauss and Codazzi equations in an orthonormal frame."""
    fc = frame_components(data)
    Kf = fc["K"]  # Kf[m, i, j] = K_ij^m
    d = np.eye(data.n)
    expected = data.epsilon * (
        np.einsum("ik,jl->ijkl", d, d) - np.einsum("il,jk->ijkl", d, d)
    ) + (np.einsum("mil,mjk->ijkl", Kf, Kf) - np.einsum("mik,mjl->ijkl", Kf, Kf))
    gauss = float(np.max(np.abs(fc["Rhat"] - expected)))
    nK = fc["nablaK"]
    codazzi = float(np.max(np.abs(nK - np.swapaxes(nK, 0, 3))))
    return gauss, codazzi


def lowered_nabla_k(data):
    """(nabla K)_ijkl = h_km K^m_ij,l."""
    return np.einsum("km,mijl->ijkl", data.h, data.nablaK)


def symmetry_defect(tensor):
    """Max-abs difference between a tensor and all its index permutations."""
    t = np.asarray(tensor)
    worst = 0.0
    for perm in itertools.permutations(range(t.ndim)):
        worst = max(worst, float(np.max(np.abs(t - np.transpose(t, perm)))))
    return worst


def trace_residuals(data):
    """(traceless defect of Ktilde, mismatch of n T_flat against trace K_X)."""
    Ktl = np.einsum("kl,lij->ijk", data.h, data.Ktilde)
    traceless = float(np.max(np.abs(np.einsum("jk,jki->i", data.h_inv, Ktl))))
    traceK = np.einsum("jij->i", data.K)
    tcheb = float(np.max(np.abs(data.n * data.Tflat - traceK)))
    return traceless, tcheb
