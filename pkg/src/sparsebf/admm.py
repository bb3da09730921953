"""ADMM for the l1 / reweighted-l1 penalized sparse MVDR problem.

Solves::

    min_w  w^H Rx w + lam * ||b * w||_1   s.t.  |w^H a0|^2 >= 1

by splitting ``w = v`` and iterating, in scaled form,

1. ``wbar = shrink(v - u, lam / (rho * weight))``   (soft threshold)
2. ``w    = project(wbar)``                         (closest feasible point)
3. ``v    = rho (2 Rx + rho I)^{-1} (w + u)``
4. ``u    = u + w - v``

For the plain l1 variant ``weight = 1``; for the reweighted variant
``weight = |v_prev| + eps`` with ``v_prev`` the iterate the w-step reads.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .numerics import HermitianMatrix, HpdFactor, SingularMatrixError, ValidationError, as_vector

FEASIBILITY_TOL = 1e-9
KKT_TOL = 1e-6


class Variant(enum.Enum):
    PLAIN_L1 = "l1"
    REWEIGHTED = "reweighted"


class Termination(enum.Enum):
    RESIDUAL_MET = "residual"
    ITER_CAP = "iter_cap"


class RhoBelowBoundWarning(UserWarning):
    """Configured rho is below the value that guarantees convergence."""


@dataclass(frozen=True)
class AdmmConfig:
    """Solver settings.

    ``rho=None`` means "use :func:`rho_lower_bound` of the covariance".
    """

    lam: float
    rho: float | None = None
    epsilon: float = 1e-10
    eta: float = 1e-12
    k_max: int = 1000
    variant: Variant = Variant.REWEIGHTED
    init_seed: int = 0
    u_init: np.ndarray | None = None
    debug: bool = False
    feasibility_tol: float = FEASIBILITY_TOL
    kkt_tol: float = KKT_TOL

    def __post_init__(self):
        if isinstance(self.variant, str):
            object.__setattr__(self, "variant", Variant(self.variant))
        if not self.lam > 0:
            raise ValidationError("lambda must be positive")
        if self.rho is not None and not self.rho > 0:
            raise ValidationError("rho must be positive")
        if not (self.epsilon > 0 and self.eta > 0):
            raise ValidationError("epsilon and eta must be positive")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValidationError("k_max must be an integer >= 1")

    def with_lambda(self, lam: float) -> "AdmmConfig":
        return replace(self, lam=lam)


@dataclass(frozen=True)
class AdmmState:
    w: np.ndarray
    v: np.ndarray
    u: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class KktReport:
    stationarity_residual: float
    primal_residual: float
    feasibility_gap: float

    def satisfied(self, kkt_tol: float = KKT_TOL, feasibility_tol: float = FEASIBILITY_TOL) -> bool:
        return (
            self.stationarity_residual <= kkt_tol
            and self.primal_residual <= kkt_tol
            and self.feasibility_gap <= feasibility_tol
        )


@dataclass(frozen=True)
class AdmmResult:
    state: AdmmState
    lagrangian_trace: np.ndarray
    residual_trace: np.ndarray
    gap_trace: np.ndarray
    termination: Termination
    kkt: KktReport
    rho: float
    rho_bound: float
    config: AdmmConfig
    shrink_support: int = -1
    history: dict = field(default_factory=dict)

    @property
    def w(self) -> np.ndarray:
        return self.state.w

    @property
    def iterations(self) -> int:
        return self.state.k

    @property
    def collapsed(self) -> bool:
        """True when the last shrinkage zeroed every entry, so ``w`` is just ``a0/||a0||^2``."""
        return self.shrink_support == 0


# -- single-step operators ----------------------------------------------------


def soft_threshold(d, tau) -> np.ndarray:
    """Complex soft thresholding ``sign(d) * (|d| - tau)_+``.

    `tau` may be a scalar or a per-entry array. The phase of each surviving
    entry is kept; entries with ``|d_i| <= tau_i`` become exactly zero.
    """
    d = np.asarray(d, dtype=np.complex128)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValidationError("threshold must be non-negative")
    mag = np.abs(d)
    shrunk = np.maximum(mag - tau, 0.0)
    out = np.zeros_like(d)
    nz = shrunk > 0
    out[nz] = d[nz] / mag[nz] * shrunk[nz]
    return out


def reweighted_threshold(d, g, lam: float, rho: float, epsilon: float) -> np.ndarray:
    """Soft threshold with per-entry level ``lam / (rho * (|g_i| + epsilon))``."""
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    tau = lam / (rho * (np.abs(np.asarray(g, dtype=np.complex128)) + epsilon))
    return soft_threshold(d, tau)


def project_constraint(wbar, a0) -> np.ndarray:
    """Closest point to `wbar` in ``{w : |w^H a0| >= 1}``.

    Feasible input is returned unchanged. Otherwise the component of `wbar`
    along `a0` is rescaled so that ``|w^H a0| = 1``. If ``wbar^H a0 == 0``
    the response direction is undefined and ``a0 / ||a0||^2`` is added.
    """
    wbar = as_vector(wbar)
    a0 = as_vector(a0)
    na2 = np.vdot(a0, a0).real
    if na2 == 0:
        raise ValidationError("steering vector is zero")
    c = np.vdot(wbar, a0)
    ac = abs(c)
    if ac >= 1.0:
        return wbar
    if ac == 0.0:
        return wbar + a0 / na2
    return wbar + (1.0 - ac) / (na2 * ac) * a0 * np.conj(c)


def v_update(w, u, Rx, rho: float, factor: HpdFactor | None = None) -> np.ndarray:
    """``rho (2 Rx + rho I)^{-1} (w + u)``; pass `factor` to reuse a factorization."""
    if factor is None:
        factor = _v_factor(Rx, rho)
    return rho * factor.solve(np.asarray(w) + np.asarray(u))


def _v_factor(Rx, rho: float) -> HpdFactor:
    r = np.asarray(Rx.data if isinstance(Rx, HermitianMatrix) else Rx)
    return HpdFactor(HermitianMatrix(2.0 * r + rho * np.eye(r.shape[0])))


def augmented_lagrangian(w, v, u, Rx, lam: float, rho: float, variant=Variant.PLAIN_L1, g=None, epsilon: float = 1e-10) -> float:
    """Scaled-form augmented Lagrangian.

    ``lam*||b*w||_1 + v^H Rx v + rho/2 (||w - v + u||^2 - ||u||^2)`` with
    ``b = 1`` for plain l1 and ``b = 1 / (|g| + epsilon)`` when reweighted.
    """
    w, v, u = (np.asarray(x, dtype=np.complex128) for x in (w, v, u))
    r = np.asarray(Rx.data if isinstance(Rx, HermitianMatrix) else Rx)
    if Variant(variant) is Variant.REWEIGHTED:
        if g is None:
            raise ValidationError("reweighted Lagrangian needs g")
        penalty = np.sum(np.abs(w) / (np.abs(g) + epsilon))
    else:
        penalty = np.sum(np.abs(w))
    quad = np.vdot(v, r @ v).real
    r_ = w - v + u
    return float(lam * penalty + quad + 0.5 * rho * (np.vdot(r_, r_).real - np.vdot(u, u).real))


def rho_lower_bound(Rx: HermitianMatrix) -> float:
    """``max(2*sqrt(2)*lmax, 2*lmax^2/lmin)``, the rho that guarantees convergence."""
    if not isinstance(Rx, HermitianMatrix):
        Rx = HermitianMatrix(Rx)
    if not Rx.is_positive_definite():
        raise SingularMatrixError("covariance is not positive definite")
    ev = Rx.eigvals()
    lmin, lmax = float(ev[0]), float(ev[-1])
    return max(2.0 * math.sqrt(2.0) * lmax, 2.0 * lmax**2 / lmin)


def kkt_residuals(state: AdmmState, Rx, rho: float, a0) -> KktReport:
    r = np.asarray(Rx.data if isinstance(Rx, HermitianMatrix) else Rx)
    w, v, u = state.w, state.v, state.u
    return KktReport(
        stationarity_residual=float(np.linalg.norm(2.0 * r @ v - rho * u)),
        primal_residual=float(np.linalg.norm(w - v)),
        feasibility_gap=max(0.0, 1.0 - abs(np.vdot(w, np.asarray(a0))) ** 2),
    )


# -- solver loop --------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _admm_loop(P, R, a0, v, u, lam, rho, eps, eta, k_max, reweighted, trace_l, trace_r, trace_g, hist):
    m = a0.shape[0]
    na2 = 0.0
    for i in range(m):
        na2 += a0[i].real ** 2 + a0[i].imag ** 2
    w = np.zeros(m, dtype=np.complex128)
    s = np.zeros(m, dtype=np.complex128)
    g = np.zeros(m)
    keep = hist.shape[0] > 0
    k = 0
    nnz = 0
    while True:
        # shrinkage; per-entry weights read the previous v
        nnz = 0
        for i in range(m):
            g[i] = abs(v[i]) + eps if reweighted else 1.0
            d = v[i] - u[i]
            ad = abs(d)
            t = ad - lam / (rho * g[i])
            if t > 0.0:
                w[i] = d / ad * t
                nnz += 1
            else:
                w[i] = 0.0
        c = 0j
        for i in range(m):
            c += w[i].conjugate() * a0[i]
        ac = abs(c)
        if ac == 0.0:
            for i in range(m):
                w[i] += a0[i] / na2
        elif ac < 1.0:
            coef = (1.0 - ac) / (na2 * ac) * c.conjugate()
            for i in range(m):
                w[i] += coef * a0[i]
        for i in range(m):
            s[i] = w[i] + u[i]
        v = P @ s
        for i in range(m):
            u[i] = u[i] + w[i] - v[i]
        # diagnostics at (w, v, u) after this iteration
        pen = 0.0
        res2 = 0.0
        uu = 0.0
        c = 0j
        for i in range(m):
            pen += abs(w[i]) / g[i]
            e = w[i] - v[i]
            res2 += e.real ** 2 + e.imag ** 2
            uu += u[i].real ** 2 + u[i].imag ** 2
            c += w[i].conjugate() * a0[i]
        rv = R @ v
        quad = 0.0
        for i in range(m):
            quad += (v[i].conjugate() * rv[i]).real
        # ||w - v + u||^2 - ||u||^2 = ||w - v||^2 + 2 Re<w - v, u>
        cross = 0.0
        for i in range(m):
            cross += ((w[i] - v[i]).conjugate() * u[i]).real
        trace_l[k] = lam * pen + quad + 0.5 * rho * (res2 + 2.0 * cross)
        trace_r[k] = math.sqrt(res2)
        trace_g[k] = max(0.0, 1.0 - (c.real ** 2 + c.imag ** 2))
        if keep:
            for i in range(m):
                hist[k, 0, i] = w[i]
                hist[k, 1, i] = v[i]
                hist[k, 2, i] = u[i]
        k += 1
        if k >= k_max or trace_r[k - 1] <= eta:
            break
    return w, v, u, k, nnz


def initial_v(m: int, seed: int) -> np.ndarray:
    """Complex standard normal starting point for ``v``."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0x5EED])))
    return (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / math.sqrt(2.0)


def admm_solve(cfg: AdmmConfig, Rx: HermitianMatrix, a0, v_init=None) -> AdmmResult:
    """Run ADMM to the residual tolerance ``cfg.eta`` or ``cfg.k_max`` iterations.

    Parameters
    ----------
    cfg : AdmmConfig
    Rx : HermitianMatrix
        Data covariance (true or sample), positive definite.
    a0 : array_like
        Steering vector of the signal of interest.
    v_init : array_like, optional
        Starting ``v``; drawn from ``cfg.init_seed`` when omitted.

    Returns
    -------
    AdmmResult
        Final iterate, per-iteration traces of the augmented Lagrangian,
        ``||w - v||`` and feasibility gap, and the KKT residuals at exit.
        With ``cfg.debug`` the full ``(k, 3, M)`` iterate history is kept in
        ``result.history["wvu"]``.
    """
    if not isinstance(Rx, HermitianMatrix):
        Rx = HermitianMatrix(Rx)
    a0 = as_vector(a0)
    m = Rx.size
    if a0.shape[0] != m:
        raise ValidationError("steering vector length does not match covariance")
    bound = rho_lower_bound(Rx)
    rho = bound if cfg.rho is None else float(cfg.rho)
    if rho < bound:
        warnings.warn(f"rho={rho:g} is below the convergence bound {bound:g}", RhoBelowBoundWarning, stacklevel=2)
    v0 = initial_v(m, cfg.init_seed) if v_init is None else as_vector(v_init)
    u0 = np.zeros(m, dtype=np.complex128) if cfg.u_init is None else as_vector(cfg.u_init)
    if v0.shape[0] != m or u0.shape[0] != m:
        raise ValidationError("initial vectors have the wrong length")

    # cached once per run: P = rho (2 Rx + rho I)^{-1}
    P = np.ascontiguousarray(rho * _v_factor(Rx, rho).inverse())
    R = np.ascontiguousarray(Rx.data)
    k_max = int(cfg.k_max)
    tl, tr, tg = np.empty(k_max), np.empty(k_max), np.empty(k_max)
    hist = np.empty((k_max if cfg.debug else 0, 3, m), dtype=np.complex128)
    w, v, u, k, nnz = _admm_loop(
        P, R, a0, v0.copy(), u0.copy(), float(cfg.lam), rho, float(cfg.epsilon), float(cfg.eta), k_max,
        cfg.variant is Variant.REWEIGHTED, tl, tr, tg, hist,
    )
    state = AdmmState(w, v, u, k)
    term = Termination.RESIDUAL_MET if tr[k - 1] <= cfg.eta else Termination.ITER_CAP
    history = {"wvu": hist[:k], "v_init": v0} if cfg.debug else {}
    return AdmmResult(
        state=state,
        lagrangian_trace=tl[:k].copy(),
        residual_trace=tr[:k].copy(),
        gap_trace=tg[:k].copy(),
        termination=term,
        kkt=kkt_residuals(state, Rx, rho, a0),
        rho=rho,
        rho_bound=bound,
        config=cfg,
        shrink_support=int(nnz),
        history=history,
    )


def reference_solve(cfg: AdmmConfig, Rx: HermitianMatrix, a0, rho: float, v_init, iterations: int):
    """Step-by-step numpy loop built from the public operators.

    Slow; exists as an independent path for checking :func:`admm_solve`.
    Returns the list of ``(w, v, u)`` after each iteration.
    """
    factor = _v_factor(Rx, rho)
    v = as_vector(v_init)
    u = np.zeros_like(v)
    out = []
    for _ in range(iterations):
        d = v - u
        if cfg.variant is Variant.REWEIGHTED:
            wbar = reweighted_threshold(d, v, cfg.lam, rho, cfg.epsilon)
        else:
            wbar = soft_threshold(d, cfg.lam / rho)
        w = project_constraint(wbar, a0)
        v = v_update(w, u, Rx, rho, factor)
        u = u + w - v
        out.append((w, v, u))
    return out
