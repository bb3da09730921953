"""Turning solver weights into exact L-of-M selections, plus baselines."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .admm import AdmmConfig, AdmmResult, admm_solve, rho_lower_bound
from .beamformer import BeamformerWeight, reduced_mvdr, subarray_sinrs
from .numerics import HermitianMatrix, ValidationError
from .signal_model import Scenario, make_rng

ALPHA = 0.1
MAX_SEARCH_ITERS = 40
ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class SelectionReport:
    """Outcome of one selection method.

    For λ tuning, `search_iters` is the number of ADMM solves; for
    enumeration it is the number of candidate supports evaluated.
    """

    support: tuple[int, ...]
    lambda_used: float
    search_iters: int
    weight: BeamformerWeight | None
    sinr_db: float
    method: str = ""
    fallback: bool = False
    active_count: int = -1

    def __post_init__(self):
        sup = tuple(sorted(int(i) for i in self.support))
        if len(set(sup)) != len(sup):
            raise ValidationError("support has repeated indices")
        object.__setattr__(self, "support", sup)


def count_active(w, alpha: float = ALPHA) -> int:
    """Number of entries whose modulus exceeds `alpha` times the largest modulus.

    An all-zero vector has no active entries and yields 0.
    """
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    mag = np.abs(np.asarray(w))
    top = mag.max(initial=0.0)
    if top == 0:
        return 0
    return int(np.count_nonzero(mag > alpha * top))


def select_support(w, L: int) -> tuple[int, ...]:
    """Indices of the `L` largest-modulus entries; ties go to the lower index."""
    mag = np.abs(np.asarray(w))
    if not 1 <= L <= mag.shape[0]:
        raise ValidationError(f"L={L} outside [1, {mag.shape[0]}]")
    order = np.argsort(-mag, kind="stable")
    return tuple(sorted(int(i) for i in order[:L]))


def _active(res: AdmmResult, alpha: float) -> int:
    # a collapsed solve zeroed every entry before the feasibility step
    return 0 if res.collapsed else count_active(res.w, alpha)


def _report(support, s, R, **kw) -> SelectionReport:
    if s is None:
        return SelectionReport(support, weight=None, sinr_db=float("nan"), **kw)
    w = reduced_mvdr(support, s, R)
    sinr = float(subarray_sinrs(np.array([w.support]), s, R)[0])
    return SelectionReport(support, weight=w, sinr_db=sinr, **kw)


def tune_lambda(
    target_L: int,
    bounds: tuple[float, float] | None,
    cfg: AdmmConfig,
    Rx: HermitianMatrix,
    a0,
    scenario: Scenario | None = None,
    alpha: float = ALPHA,
    max_search_iters: int = MAX_SEARCH_ITERS,
) -> SelectionReport:
    """Bisect λ (on a log scale) until the solver activates exactly `target_L` sensors.

    Parameters
    ----------
    bounds : (lam_lo, lam_hi) or None
        Search interval. ``None`` uses ``[1e-8 rho, 10 rho]``.
    scenario : Scenario, optional
        Needed to score the selection; without it ``sinr_db`` is NaN.

    Returns
    -------
    SelectionReport
        Support of exactly `target_L` sensors and its reduced-MVDR SINR. If
        no tried λ hits `target_L`, the weight whose active count came closest
        is truncated to its `target_L` largest entries and ``fallback`` is set.
    """
    if not isinstance(Rx, HermitianMatrix):
        Rx = HermitianMatrix(Rx)
    m = Rx.size
    if not 1 <= target_L <= m:
        raise ValidationError(f"target L={target_L} outside [1, {m}]")
    if bounds is None:
        rho = cfg.rho if cfg.rho is not None else rho_lower_bound(Rx)
        bounds = (1e-8 * rho, 10.0 * rho)
    lo, hi = map(float, bounds)
    if not 0 < lo < hi:
        raise ValidationError(f"invalid lambda interval [{lo}, {hi}]")

    if target_L == m:
        res = admm_solve(cfg.with_lambda(lo), Rx, a0)
        return _report(range(m), scenario, Rx, lambda_used=lo, search_iters=1, method="ADMM",
                       active_count=_active(res, alpha))

    best = None  # (distance, prefers-denser, lam, result, count)
    for it in range(1, max_search_iters + 1):
        lam = math.sqrt(lo * hi)
        res = admm_solve(cfg.with_lambda(lam), Rx, a0)
        n = _active(res, alpha)
        if n == target_L:
            return _report(select_support(res.w, target_L), scenario, Rx, lambda_used=lam,
                           search_iters=it, method="ADMM", active_count=n)
        key = (abs(n - target_L), n < target_L)
        if not res.collapsed and (best is None or key < best[0]):
            best = (key, lam, res, n)
        if n > target_L:
            lo = lam
        else:
            hi = lam
    if best is None:
        raise ValidationError("every lambda in the interval zeroed the weight; lower the bounds")
    _, lam, res, n = best
    return _report(select_support(res.w, target_L), scenario, Rx, lambda_used=lam,
                   search_iters=max_search_iters, method="ADMM", fallback=True, active_count=n)


def enumerate_all(s: Scenario, R: HermitianMatrix, L: int, cap: int = ENUMERATION_CAP, chunk: int = 20000):
    """Score every size-`L` support by reduced-MVDR SINR.

    Returns ``(best, worst)``; ties resolve to the lexicographically first
    support. ``search_iters`` on both reports holds the number of supports
    evaluated.
    """
    m = s.m
    if not 1 <= L <= m:
        raise ValidationError(f"L={L} outside [1, {m}]")
    total = math.comb(m, L)
    if total > cap:
        raise ValidationError(f"enumeration of C({m},{L}) = {total} supports exceeds cap {cap}")
    combos = itertools.combinations(range(m), L)
    best = worst = None
    evaluated = 0
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=int).reshape(-1, L)
        if block.shape[0] == 0:
            break
        vals = subarray_sinrs(block, s, R)
        evaluated += block.shape[0]
        i, j = int(np.argmax(vals)), int(np.argmin(vals))
        if best is None or vals[i] > best[0]:
            best = (vals[i], tuple(block[i]))
        if worst is None or vals[j] < worst[0]:
            worst = (vals[j], tuple(block[j]))
    reports = []
    for (val, sup), label in ((best, "BestEnum"), (worst, "WorstEnum")):
        reports.append(SelectionReport(sup, lambda_used=float("nan"), search_iters=evaluated,
                                       weight=reduced_mvdr(sup, s, R), sinr_db=float(val), method=label))
    return reports[0], reports[1]


class Geometry(enum.Enum):
    COMPACT = "CompactULA"
    SPARSE_ULA = "SparseULA"
    NESTED = "Nested"
    COPRIME = "Coprime"
    RANDOM = "Random"


def _coprime_pair(L: int) -> tuple[int, int]:
    # p + q - 1 = L sensors with p < q coprime, as balanced as possible
    for p in range((L + 1) // 2, 0, -1):
        q = L + 1 - p
        if p < q and math.gcd(p, q) == 1:
            return p, q
    raise ValidationError(f"no coprime pair yields {L} sensors")


def fixed_geometry(kind, m: int, L: int, seed: int | None = None, spacing: int = 2) -> tuple[int, ...]:
    """0-based sensor indices of a classical L-sensor layout on an M-sensor grid.

    * ``CompactULA``: the first L sensors.
    * ``SparseULA``: every `spacing`-th sensor starting at 0.
    * ``Nested``: two-level nested array, ``N1 = ceil(L/2)`` dense sensors
      then ``N2 = L - N1`` at multiples of ``N1 + 1``.
    * ``Coprime``: union of ``{p n}_{n<q}`` and ``{q n}_{n<p}`` with
      ``p + q - 1 = L``.
    * ``Random``: uniform L-subset drawn from `seed`.
    """
    kind = Geometry(kind)
    if not 1 <= L <= m:
        raise ValidationError(f"L={L} outside [1, {m}]")
    if kind is Geometry.COMPACT:
        idx = list(range(L))
    elif kind is Geometry.SPARSE_ULA:
        idx = [spacing * i for i in range(L)]
    elif kind is Geometry.NESTED:
        n1 = math.ceil(L / 2)
        n2 = L - n1
        idx = list(range(n1)) + [(n1 + 1) * j - 1 for j in range(1, n2 + 1)]
    elif kind is Geometry.COPRIME:
        if L < 2:
            raise ValidationError("coprime layout needs L >= 2")
        p, q = _coprime_pair(L)
        idx = sorted({p * n for n in range(q)} | {q * n for n in range(p)})
    else:
        if seed is None:
            raise ValidationError("random layout needs a seed")
        idx = make_rng(seed, 0xA77A).choice(m, size=L, replace=False).tolist()
    idx = tuple(sorted(idx))
    if idx[-1] >= m:
        raise ValidationError(f"{kind.value} layout with L={L} needs more than M={m} sensors")
    return idx


def geometry_report(kind, s: Scenario, R: HermitianMatrix, L: int, seed: int | None = None) -> SelectionReport:
    kind = Geometry(kind)
    sup = fixed_geometry(kind, s.m, L, seed=seed)
    return _report(sup, s, R, lambda_used=float("nan"), search_iters=0, method=kind.value)
