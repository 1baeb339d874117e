"""Goodness-of-fit and nested-model tests built on divergence statistics.

Statistic families
------------------
Goodness of fit of a fitted model against the empirical distribution:

    T = (2N / phi1''(1)) * D_phi1(p_hat, p(theta_hat))

with an optional increasing transform ``h`` applied to the divergence and a
matching ``1 / h'(0)`` factor.  The estimate ``theta_hat`` may come from any
member of the divergence family, not only maximum likelihood; under the model
the statistic is asymptotically chi-square with ``2**k - r - 1`` degrees of
freedom, ``r`` the number of identifiable parameters.

A model B nested in A (some coordinates fixed to zero) is tested with either

    S = (2N / phi1''(1)) * [D_phi1(p_hat, p(B)) - D_phi1(p_hat, p(A))]
    T = (2N / phi1''(1)) * D_phi1(p(A), p(B))

both asymptotically chi-square with ``h1 - h2`` degrees of freedom (the
difference in free-parameter counts).  The S difference is oriented
B-minus-A so that the classical likelihood-ratio case (both transforms at
power index 0) is nonnegative.  With unequal estimation and testing
transforms S can come out negative; it is returned raw with a warning flag,
never clamped.

Degrees-of-freedom policy
-------------------------
The default "rank" policy uses the numerical rank of the manifest Jacobian
at the estimate, which absorbs the one-dimensional softmax redundancy that
identity-style weight loadings carry.  The "nominal" policy uses the literal
parameter count ``t + u``; an explicit override is also accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincc

from .divergence import HSpec, PhiSpec, identity_h, phi_divergence
from .errors import DomainError
from .estimation import FitOptions, FitResult, fit
from .model import ModelDesign, ObservedCounts, Theta


def chi2_sf(x: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution.

    Goes through the regularized upper incomplete gamma function; absolute
    error is far below the 1e-10 the tests pin.
    """
    if dof < 1:
        raise DomainError("dof must be >= 1")
    if x < 0:
        raise DomainError("chi-square statistic must be >= 0")
    return float(gammaincc(dof / 2.0, x / 2.0))


def chi2_quantile(q: float, dof: int) -> float:
    """Value ``x`` with ``P(X <= x) = q``, by bracketed root finding on the sf."""
    if not 0.0 < q < 1.0:
        raise DomainError("quantile level must be in (0, 1)")
    if dof < 1:
        raise DomainError("dof must be >= 1")
    target = 1.0 - q
    hi = float(max(dof, 1.0))
    while chi2_sf(hi, dof) > target:
        hi *= 2.0
        if hi > 1e12:
            raise DomainError("quantile bracket expansion failed")
    return float(brentq(lambda x: chi2_sf(x, dof) - target, 0.0, hi, xtol=1e-12))


@dataclass(frozen=True)
class TestResult:
    """A single test decision with its provenance.

    ``reject`` is computed from the critical value; ``p_value`` gives the
    same decision by construction (both routes are derived from the same
    survival function).  ``warnings`` may carry ``negative_statistic`` or
    ``infinite_statistic`` flags.
    """

    statistic: float
    dof: int
    p_value: float
    alpha: float
    reject: bool
    critical: float
    phi1: PhiSpec
    phi2: Optional[PhiSpec] = None
    h: Optional[HSpec] = None
    kind: str = "gof"
    dof_policy: str = "rank"
    warnings: tuple = ()


def _decide(statistic, dof, alpha, phi1, phi2, h, kind, dof_policy, warnings=()):
    warnings = tuple(warnings)
    if dof <= 0:
        # Degenerate null: no free directions, point mass at zero.
        p_value = 1.0 if statistic <= 1e-12 else 0.0
        critical = 0.0
        reject = statistic > 1e-12
    elif math.isinf(statistic):
        p_value = 0.0
        critical = chi2_quantile(1.0 - alpha, dof)
        reject = True
        warnings = warnings + ("infinite_statistic",)
    else:
        critical = chi2_quantile(1.0 - alpha, dof)
        p_value = chi2_sf(max(statistic, 0.0), dof)
        reject = statistic > critical
    if statistic < 0 and "negative_statistic" not in warnings:
        warnings = warnings + ("negative_statistic",)
    return TestResult(
        statistic=float(statistic),
        dof=int(dof),
        p_value=float(p_value),
        alpha=float(alpha),
        reject=bool(reject),
        critical=float(critical),
        phi1=phi1,
        phi2=phi2,
        h=h,
        kind=kind,
        dof_policy=dof_policy,
        warnings=warnings,
    )


def resolve_gof_dof(
    design: ModelDesign,
    fit_result: FitResult,
    policy: str = "rank",
    override: Optional[int] = None,
) -> tuple[int, str]:
    """Degrees of freedom for a goodness-of-fit statistic, with its policy label."""
    cells = design.n_patterns
    if override is not None:
        if override < 1:
            raise DomainError("dof override must be >= 1")
        return int(override), f"override:{int(override)}"
    if policy == "rank":
        return cells - fit_result.rank - 1, "rank"
    if policy == "nominal":
        return cells - design.n_params - 1, "nominal"
    raise DomainError(f"unknown dof policy: {policy!r}")


def gof_statistic(
    design: ModelDesign,
    counts: ObservedCounts,
    phi1: PhiSpec,
    fit2: FitResult,
    alpha: float = 0.05,
    dof_policy: str = "rank",
    dof_override: Optional[int] = None,
) -> TestResult:
    """Goodness-of-fit statistic of the fitted model, tested at level ``alpha``."""
    fit2.require_converged("goodness-of-fit statistic")
    D = phi_divergence(counts.p_hat(), fit2.manifest.p, phi1)
    statistic = 2.0 * counts.N / phi1.curvature_at_one() * D
    dof, policy = resolve_gof_dof(design, fit2, dof_policy, dof_override)
    return _decide(statistic, dof, alpha, phi1, fit2.spec, None, "gof", policy)


def gof_statistic_h(
    design: ModelDesign,
    counts: ObservedCounts,
    phi1: PhiSpec,
    h: HSpec,
    fit2: FitResult,
    alpha: float = 0.05,
    dof_policy: str = "rank",
    dof_override: Optional[int] = None,
) -> TestResult:
    """Transformed goodness-of-fit statistic ``2N h(D) / (phi1''(1) h'(0))``.

    Raises ``DomainError`` when the divergence falls outside the domain of
    the transform (e.g. the bhattacharyya transform needs D < 1).
    """
    fit2.require_converged("goodness-of-fit statistic")
    D = phi_divergence(counts.p_hat(), fit2.manifest.p, phi1)
    scale = 2.0 * counts.N / (phi1.curvature_at_one() * h.deriv_at_zero())
    statistic = scale * h.value(D) if math.isfinite(D) else _h_of_inf(h)
    dof, policy = resolve_gof_dof(design, fit2, dof_policy, dof_override)
    return _decide(statistic, dof, alpha, phi1, fit2.spec, h, "gof_h", policy)


def _h_of_inf(h: HSpec) -> float:
    if h.tag == "bhattacharyya":
        raise DomainError("divergence is outside the domain of the bhattacharyya transform")
    return math.inf


# ---------------------------------------------------------------------------
# Nested models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NestedPair:
    """Model B obtained from model A by fixing listed coordinates to zero.

    ``zero_lam`` and ``zero_eta`` are 0-based coordinate indices into A's
    ``lam`` and ``eta``.  The pair with nothing zeroed is permitted (A = B,
    zero degrees of freedom) so that degenerate chains remain expressible.
    """

    design_A: ModelDesign
    zero_lam: tuple = ()
    zero_eta: tuple = ()

    def __post_init__(self):
        zl = tuple(sorted(int(i) for i in self.zero_lam))
        ze = tuple(sorted(int(i) for i in self.zero_eta))
        object.__setattr__(self, "zero_lam", zl)
        object.__setattr__(self, "zero_eta", ze)
        if len(set(zl)) != len(zl) or len(set(ze)) != len(ze):
            raise DomainError("zeroed coordinate indices must be unique")
        if zl and not (0 <= zl[0] and zl[-1] < self.design_A.t):
            raise DomainError("zeroed lambda index out of range")
        if ze and not (0 <= ze[0] and ze[-1] < self.design_A.u):
            raise DomainError("zeroed eta index out of range")
        if len(zl) == self.design_A.t:
            raise DomainError("cannot zero every lambda coordinate")
        if len(ze) == self.design_A.u:
            raise DomainError("cannot zero every eta coordinate")

    @property
    def keep_lam(self) -> tuple:
        return tuple(i for i in range(self.design_A.t) if i not in self.zero_lam)

    @property
    def keep_eta(self) -> tuple:
        return tuple(i for i in range(self.design_A.u) if i not in self.zero_eta)

    @property
    def h1(self) -> int:
        return self.design_A.n_params

    @property
    def h2(self) -> int:
        return self.h1 - len(self.zero_lam) - len(self.zero_eta)

    @property
    def dof(self) -> int:
        return self.h1 - self.h2

    def design_B(self) -> ModelDesign:
        """The restricted design (columns of the zeroed coordinates dropped)."""
        A = self.design_A
        return ModelDesign(
            Q=np.asarray(A.Q)[:, :, list(self.keep_lam)],
            C=A.C,
            V=np.asarray(A.V)[:, list(self.keep_eta)],
            d=A.d,
        )

    def embed(self, theta_B) -> "np.ndarray":
        """Parameter vector of B written in A's coordinates (zeros inserted)."""
        vec = np.zeros(self.design_A.t + self.design_A.u)
        lam_idx = list(self.keep_lam)
        eta_idx = [self.design_A.t + i for i in self.keep_eta]
        vec[lam_idx] = theta_B.lam
        vec[eta_idx] = theta_B.eta
        return Theta.from_vector(self.design_A, vec).vector()

    def kept_column_indices(self) -> list:
        """Column positions of B's free coordinates inside A's Jacobian."""
        return list(self.keep_lam) + [self.design_A.t + i for i in self.keep_eta]


def fit_pair(
    pair: NestedPair,
    counts: ObservedCounts,
    phi2: PhiSpec,
    options: FitOptions = FitOptions(),
) -> tuple[FitResult, FitResult]:
    """Fit model A and the restricted model B with the same estimator."""
    fit_A = fit(pair.design_A, counts, phi2, options)
    fit_B = fit(pair.design_B(), counts, phi2, options)
    return fit_A, fit_B


def _nested_statistic(pair, counts, phi1, h, fit_A, fit_B, kind, alpha):
    fit_A.require_converged("nested test")
    fit_B.require_converged("nested test")
    c = phi1.curvature_at_one() * h.deriv_at_zero()
    scale = 2.0 * counts.N / c
    if kind.startswith("S"):
        D_B = phi_divergence(counts.p_hat(), fit_B.manifest.p, phi1)
        D_A = phi_divergence(counts.p_hat(), fit_A.manifest.p, phi1)
        if math.isfinite(D_A) and math.isfinite(D_B):
            statistic = scale * (h.value(D_B) - h.value(D_A))
        elif math.isinf(D_B) and math.isfinite(D_A):
            statistic = _h_of_inf(h)
        else:
            # inf - inf has no usable value; report NaN with a flag.
            statistic = math.nan
    else:
        D = phi_divergence(fit_A.manifest.p, fit_B.manifest.p, phi1)
        statistic = scale * h.value(D) if math.isfinite(D) else _h_of_inf(h)
    label = kind if h.tag == "identity" else f"{kind}_h"
    return _decide(
        statistic, pair.dof, alpha, phi1, fit_A.spec, None if h.tag == "identity" else h,
        f"nested_{label}", "nominal_difference",
    )


def nested_S(
    pair: NestedPair,
    counts: ObservedCounts,
    phi1: PhiSpec,
    phi2: PhiSpec,
    options: FitOptions = FitOptions(),
    alpha: float = 0.05,
) -> TestResult:
    """Divergence-difference statistic for B nested in A.

    Equals the classical likelihood-ratio statistic ``G2`` when both
    transforms are the power member at 0.
    """
    fit_A, fit_B = fit_pair(pair, counts, phi2, options)
    return _nested_statistic(pair, counts, phi1, identity_h(), fit_A, fit_B, "S", alpha)


def nested_T(
    pair: NestedPair,
    counts: ObservedCounts,
    phi1: PhiSpec,
    phi2: PhiSpec,
    options: FitOptions = FitOptions(),
    alpha: float = 0.05,
) -> TestResult:
    """Between-fits divergence statistic for B nested in A (always >= 0)."""
    fit_A, fit_B = fit_pair(pair, counts, phi2, options)
    return _nested_statistic(pair, counts, phi1, identity_h(), fit_A, fit_B, "T", alpha)


def nested_S_h(
    pair: NestedPair,
    counts: ObservedCounts,
    phi1: PhiSpec,
    phi2: PhiSpec,
    h: HSpec,
    options: FitOptions = FitOptions(),
    alpha: float = 0.05,
) -> TestResult:
    fit_A, fit_B = fit_pair(pair, counts, phi2, options)
    return _nested_statistic(pair, counts, phi1, h, fit_A, fit_B, "S", alpha)


def nested_T_h(
    pair: NestedPair,
    counts: ObservedCounts,
    phi1: PhiSpec,
    phi2: PhiSpec,
    h: HSpec,
    options: FitOptions = FitOptions(),
    alpha: float = 0.05,
) -> TestResult:
    fit_A, fit_B = fit_pair(pair, counts, phi2, options)
    return _nested_statistic(pair, counts, phi1, h, fit_A, fit_B, "T", alpha)


# ---------------------------------------------------------------------------
# Sequential selection over a nested chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NestedChain:
    """A decreasing sequence of models over one base design.

    ``steps`` holds cumulative 0-based ``(zero_lam, zero_eta)`` masks for the
    second, third, ... model; the first model is the unrestricted design.
    Each mask must strictly contain the previous one.
    """

    design: ModelDesign
    steps: tuple

    def __post_init__(self):
        norm = []
        prev_l, prev_e = frozenset(), frozenset()
        for zl, ze in self.steps:
            zl, ze = frozenset(int(i) for i in zl), frozenset(int(i) for i in ze)
            if not (prev_l <= zl and prev_e <= ze and (zl, ze) != (prev_l, prev_e)):
                raise DomainError("chain masks must strictly grow at every step")
            norm.append((tuple(sorted(zl)), tuple(sorted(ze))))
            prev_l, prev_e = zl, ze
        object.__setattr__(self, "steps", tuple(norm))
        # Validates index ranges and the not-everything-zeroed rule.
        for zl, ze in self.steps:
            NestedPair(self.design, zl, ze)

    @property
    def n_models(self) -> int:
        return len(self.steps) + 1

    def mask(self, level: int) -> tuple:
        """Cumulative (zero_lam, zero_eta) of model ``level`` (1-based)."""
        if not 1 <= level <= self.n_models:
            raise DomainError(f"model level must be in [1, {self.n_models}]")
        return ((), ()) if level == 1 else self.steps[level - 2]

    def model_design(self, level: int) -> ModelDesign:
        zl, ze = self.mask(level)
        return NestedPair(self.design, zl, ze).design_B() if (zl or ze) else self.design

    def free_params(self, level: int) -> int:
        zl, ze = self.mask(level)
        return self.design.n_params - len(zl) - len(ze)

    def adjacent_pair(self, level: int) -> NestedPair:
        """Pair testing model ``level + 1`` (null) inside model ``level``."""
        zl_a, ze_a = self.mask(level)
        zl_b, ze_b = self.mask(level + 1)
        design_A = self.model_design(level)
        keep_l = [i for i in range(self.design.t) if i not in zl_a]
        keep_e = [i for i in range(self.design.u) if i not in ze_a]
        rel_zl = tuple(keep_l.index(i) for i in zl_b if i not in zl_a)
        rel_ze = tuple(keep_e.index(i) for i in ze_b if i not in ze_a)
        return NestedPair(design_A, rel_zl, rel_ze)


@dataclass(frozen=True)
class SelectionResult:
    selected: int
    tests: tuple
    statistic: str


def sequential_selection(
    chain: NestedChain,
    counts: ObservedCounts,
    phi1: PhiSpec,
    phi2: PhiSpec,
    alpha: float = 0.05,
    statistic: str = "S",
    h: Optional[HSpec] = None,
    options: FitOptions = FitOptions(),
) -> SelectionResult:
    """Walk the chain testing each reduction; stop at the first rejection.

    Tests model ``l+1`` (null) against model ``l`` for l = 1, 2, ...; as
    long as the null is accepted the reduction is adopted.  Returns the last
    surviving model index and the full test trail.  When nothing is rejected
    the smallest model wins.
    """
    if statistic not in ("S", "T"):
        raise DomainError("statistic must be 'S' or 'T'")
    h = h or identity_h()
    fits = {1: fit(chain.model_design(1), counts, phi2, options)}
    tests = []
    selected = chain.n_models
    for level in range(1, chain.n_models):
        pair = chain.adjacent_pair(level)
        fits.setdefault(level + 1, fit(chain.model_design(level + 1), counts, phi2, options))
        result = _nested_statistic(
            pair, counts, phi1, h, fits[level], fits[level + 1], statistic, alpha
        )
        tests.append(result)
        if result.reject:
            selected = level
            break
    return SelectionResult(selected=selected, tests=tuple(tests), statistic=statistic)
