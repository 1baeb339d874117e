"""Numerical construction of the projection matrices behind the chi-square limits.

Everything here is a test oracle: the limiting distributions of the test
statistics rest on a handful of matrix identities, and this module builds
the matrices at a given parameter point so the identities can be checked to
floating-point accuracy on concrete designs.

With ``p`` the manifest vector, ``D = diag(p)``, ``J`` the manifest Jacobian
and ``L = D^{-1/2} J``:

* ``R = L (L'L)^{-1} L'`` projects onto the scaled parameter directions;
* ``V = D^{1/2} R D^{-1/2}`` conjugates it back to probability space;
* ``Sigma = D - p p'`` is the multinomial covariance;
* ``Q = D^{-1/2} (I - V) Sigma (I - V') D^{-1/2}`` is the covariance of the
  scaled residual ``D^{-1/2}(p_hat - p(theta_hat))``.

``Q`` must be symmetric and idempotent with trace ``2**k - (t + u) - 1`` on a
full-rank design, and the square-root-probability direction is annihilated
by the projections.  The covariance is sandwiched ``(I - V) ... (I - V')``;
writing the first factor transposed as well breaks symmetry and is a known
slip in some derivations.

For a nested pair, ``R_L`` uses all columns of ``L`` and ``R_M`` only the
columns of the coordinates kept by the submodel; then ``R_L R_M = R_M R_L =
R_M``, the traces are the free-parameter counts, and ``R_L - R_M`` is again
an orthogonal projection with trace equal to the test's degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DomainError, RankDeficiencyError
from .inference import NestedPair
from .model import ModelDesign, Theta, manifest_distribution, manifest_jacobian

_RANK_RTOL = 1e-8


@dataclass(frozen=True)
class AsymptoticBundle:
    L: np.ndarray
    Vmat: np.ndarray
    Sigma: np.ndarray
    Qmat: np.ndarray
    p: np.ndarray
    rank: int
    gram_condition: float


@dataclass(frozen=True)
class NestedProjections:
    R_L: np.ndarray
    R_M: np.ndarray
    h1: int
    h2: int
    p: np.ndarray


def _projection(L: np.ndarray, pseudo_inverse: bool, what: str) -> tuple:
    """Orthogonal projection onto the column space of L, plus rank/condition."""
    sv = np.linalg.svd(L, compute_uv=False)
    rank = int(np.sum(sv > _RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank < L.shape[1] and not pseudo_inverse:
        raise RankDeficiencyError(
            f"{what}: Gram matrix is singular (rank {rank} of {L.shape[1]}); "
            "drop redundant coordinates or pass pseudo_inverse=True",
            rank=rank,
        )
    G = L.T @ L
    if pseudo_inverse and rank < L.shape[1]:
        R = L @ np.linalg.pinv(G, rcond=_RANK_RTOL) @ L.T
        cond = np.inf
    else:
        factor = cho_factor(G)
        R = L @ cho_solve(factor, L.T)
        eig = np.linalg.eigvalsh(G)
        cond = float(eig[-1] / eig[0])
    return R, rank, cond


def build_bundle(
    design: ModelDesign, theta0: Theta, pseudo_inverse: bool = False
) -> AsymptoticBundle:
    """Construct L, V, Sigma and Q at ``theta0``.

    Refuses rank-deficient designs (naming the rank) unless
    ``pseudo_inverse`` is set, in which case the trace of Q reflects the
    identifiable parameter count rather than the nominal one.
    """
    p = manifest_distribution(design, theta0).p
    if np.any(p <= 0):
        raise DomainError("manifest distribution must be strictly positive")
    s = np.sqrt(p)
    J = manifest_jacobian(design, theta0)
    L = J / s[:, None]
    R, rank, cond = _projection(L, pseudo_inverse, "asymptotic bundle")

    Vmat = s[:, None] * R / s[None, :]
    Sigma = np.diag(p) - np.outer(p, p)
    I = np.eye(p.size)
    inv_s = 1.0 / s
    Qmat = (inv_s[:, None] * (I - Vmat)) @ Sigma @ ((I - Vmat.T) * inv_s[None, :])
    return AsymptoticBundle(
        L=L, Vmat=Vmat, Sigma=Sigma, Qmat=Qmat, p=p, rank=rank, gram_condition=cond
    )


def build_nested_projections(
    pair: NestedPair, theta0_A: Theta, pseudo_inverse: bool = False
) -> NestedProjections:
    """Projections onto the full and the submodel column spaces at ``theta0_A``.

    ``theta0_A`` should satisfy the submodel (zeroed coordinates actually
    zero) for the identities to carry their intended meaning, but the
    construction itself only needs full column rank.
    """
    design = pair.design_A
    p = manifest_distribution(design, theta0_A).p
    s = np.sqrt(p)
    L = manifest_jacobian(design, theta0_A) / s[:, None]
    M = L[:, pair.kept_column_indices()]
    R_L, _, _ = _projection(L, pseudo_inverse, "full-model projection")
    R_M, _, _ = _projection(M, pseudo_inverse, "submodel projection")
    return NestedProjections(R_L=R_L, R_M=R_M, h1=pair.h1, h2=pair.h2, p=p)


def bundle_identity_checks(bundle: AsymptoticBundle, design: ModelDesign) -> dict:
    """Measured deviations of the bundle identities, keyed by identity name."""
    Q = bundle.Qmat
    s = np.sqrt(bundle.p)
    target_trace = design.n_patterns - bundle.rank - 1
    return {
        "q_symmetry": float(np.max(np.abs(Q - Q.T))),
        "q_idempotency": float(np.max(np.abs(Q @ Q - Q))),
        "q_trace": float(np.trace(Q)),
        "q_trace_target": float(target_trace),
        "q_trace_deviation": float(abs(np.trace(Q) - target_trace)),
        "sqrtp_annihilation": float(
            max(np.max(np.abs(Q @ s)), np.max(np.abs(s @ Q)))
        ),
    }


def projection_identity_checks(proj: NestedProjections) -> dict:
    """Measured deviations of the nested-projection identities."""
    R_L, R_M = proj.R_L, proj.R_M
    diff = R_L - R_M
    s = np.sqrt(proj.p)
    return {
        "rl_idempotency": float(np.max(np.abs(R_L @ R_L - R_L))),
        "rm_idempotency": float(np.max(np.abs(R_M @ R_M - R_M))),
        "rl_trace": float(np.trace(R_L)),
        "rm_trace": float(np.trace(R_M)),
        "rl_trace_deviation": float(abs(np.trace(R_L) - proj.h1)),
        "rm_trace_deviation": float(abs(np.trace(R_M) - proj.h2)),
        "product_rl_rm": float(np.max(np.abs(R_L @ R_M - R_M))),
        "product_rm_rl": float(np.max(np.abs(R_M @ R_L - R_M))),
        "difference_idempotency": float(np.max(np.abs(diff @ diff - diff))),
        "difference_trace": float(np.trace(diff)),
        "difference_trace_deviation": float(abs(np.trace(diff) - (proj.h1 - proj.h2))),
        "sqrtp_annihilation": float(
            max(
                np.max(np.abs(R_L @ s)),
                np.max(np.abs(s @ R_L)),
                np.max(np.abs(R_M @ s)),
                np.max(np.abs(s @ R_M)),
            )
        ),
    }
