"""MVDR weights, output SINR, beampatterns and subarray re-solves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import HermitianMatrix, HpdFactor, SingularMatrixError, ValidationError, as_vector
from .signal_model import Scenario, interference_noise_covariance, steering_matrix


@dataclass(frozen=True)
class BeamformerWeight:
    """Weight vector, optionally attached to a subset of the full array.

    When `support` is given, ``w[i]`` drives sensor ``support[i]``.
    """

    w: np.ndarray
    support: tuple[int, ...] | None = None

    def __post_init__(self):
        w = as_vector(self.w)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if self.support is not None:
            sup = tuple(int(i) for i in self.support)
            if len(sup) != w.shape[0]:
                raise ValidationError("weight length must equal support size")
            object.__setattr__(self, "support", sup)

    def embed(self, m: int) -> np.ndarray:
        """Full-length weight with zeros on unselected sensors."""
        if self.support is None:
            if self.w.shape[0] != m:
                raise ValidationError("weight length does not match array size")
            return self.w.copy()
        full = np.zeros(m, dtype=np.complex128)
        full[list(self.support)] = self.w
        return full


def _as_weight(w) -> BeamformerWeight:
    return w if isinstance(w, BeamformerWeight) else BeamformerWeight(w)


def mvdr_weights(R: HermitianMatrix, a0) -> BeamformerWeight:
    """``R^{-1} a0 / (a0^H R^{-1} a0)``, which satisfies ``w^H a0 = 1``."""
    a0 = as_vector(a0)
    if not np.any(a0):
        raise ValidationError("steering vector is zero")
    if not isinstance(R, HermitianMatrix):
        R = HermitianMatrix(R)
    x = HpdFactor(R).solve(a0)
    return BeamformerWeight(x / np.vdot(a0, x))


def output_sinr(w, s: Scenario) -> float:
    """Output SINR in dB evaluated with the scenario's true interference-plus-noise covariance."""
    w = _as_weight(w)
    a0 = s.steering()
    rin = interference_noise_covariance(s).data
    if w.support is not None:
        idx = list(w.support)
        if max(idx) >= s.m:
            raise ValidationError("support index out of range")
        a0 = a0[idx]
        rin = rin[np.ix_(idx, idx)]
    elif w.w.shape[0] != s.m:
        raise ValidationError("weight length does not match array size")
    signal = s.soi_power * abs(np.vdot(w.w, a0)) ** 2
    noise = np.vdot(w.w, rin @ w.w).real
    if signal == 0.0:
        return float("-inf")
    return float(10.0 * np.log10(signal / noise))


def optimal_sinr(s: Scenario) -> float:
    """``sigma_s^2 a0^H R_in^{-1} a0`` in dB."""
    a0 = s.steering()
    x = HpdFactor(interference_noise_covariance(s)).solve(a0)
    return float(10.0 * np.log10(s.soi_power * np.vdot(a0, x).real))


def beampattern(w, grid, m_full: int | None = None) -> np.ndarray:
    """Magnitude response ``20 log10 |w^H a(theta)|`` normalized to a 0 dB peak.

    Weights carrying a support are zero-padded to `m_full` sensors first.
    """
    w = _as_weight(w)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValidationError("angle grid is empty")
    if m_full is None:
        m_full = w.w.shape[0] if w.support is None else max(w.support) + 1
    full = w.embed(m_full)
    if not np.any(full):
        raise ValidationError("weight vector is all zeros")
    resp = np.abs(full.conj() @ steering_matrix(grid, m_full))
    with np.errstate(divide="ignore"):
        gain = 20.0 * np.log10(resp / resp.max())
    return gain


def reduced_mvdr(support, s: Scenario, R: HermitianMatrix) -> BeamformerWeight:
    """MVDR on the rows/columns of `R` and entries of ``a0`` picked by `support`."""
    idx = tuple(sorted(int(i) for i in support))
    if not idx:
        raise ValidationError("support is empty")
    if idx[0] < 0 or idx[-1] >= s.m or len(set(idx)) != len(idx):
        raise ValidationError(f"invalid support {idx} for M={s.m}")
    if not isinstance(R, HermitianMatrix):
        R = HermitianMatrix(R)
    sub = R.submatrix(idx)
    w = mvdr_weights(sub, s.steering()[list(idx)])
    return BeamformerWeight(w.w, idx)


def subarray_sinrs(supports: np.ndarray, s: Scenario, R: HermitianMatrix) -> np.ndarray:
    """Reduced-MVDR output SINR (dB) for every row of `supports` at once.

    `supports` is an ``(N, L)`` integer array. Weights are trained on `R` and
    scored against the true interference-plus-noise covariance.
    """
    supports = np.asarray(supports, dtype=int)
    a0 = s.steering()
    rfull = np.asarray(R.data if isinstance(R, HermitianMatrix) else R)
    rin = interference_noise_covariance(s).data
    rows, cols = supports[:, :, None], supports[:, None, :]
    rs = rfull[rows, cols]
    ris = rin[rows, cols]
    a = a0[supports]
    try:
        x = np.linalg.solve(rs, a[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    signal = np.abs(np.einsum("ni,ni->n", x.conj(), a)) ** 2
    noise = np.einsum("ni,nij,nj->n", x.conj(), ris, x).real
    return 10.0 * np.log10(s.soi_power * signal / noise)
