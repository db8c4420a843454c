"""Stress-space objective for Herschel-Bulkley duct flow.

With per-triangle stress blocks ``t_k = tau[2k:2k+2]``, block norm
``n_k = |t_k|`` and the truncation ``(x)_+ = max(x, 0)``, the objective is

    J(tau) = 1/(alpha' * kappa^(1/(alpha-1))) * sum_k |T_k| (n_k - tau0)_+^alpha'

where ``1/alpha + 1/alpha' = 1``.  Its gradient and blockwise 2x2 Hessian
have closed forms; both vanish identically on blocks inside the yield
surface (``n_k <= tau0``), which is the exact derivative for alpha < 2 and
the semismooth (Newton-derivative) choice at the kink for alpha = 2.

The Hessian is block diagonal and only ever applied to vectors, so it is
stored as an ``(n_T, 2, 2)`` array of blocks and never materialised as a
full matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fem import DiscreteOperators


@dataclass(frozen=True)
class FluidParams:
    """Constitutive parameters.

    alpha : power-law exponent in (1, 2]; 2 is the Bingham case where
        kappa plays the role of the plastic viscosity.
    kappa : consistency, > 0.
    tau0 : yield stress, >= 0.
    """

    alpha: float
    kappa: float = 1.0
    tau0: float = 0.0
    alpha_prime: float = field(init=False, repr=False)
    kappa_pow: float = field(init=False, repr=False)  # kappa^(1/(alpha-1))

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(
                f"alpha must lie in (1, 2], got {self.alpha}; "
                "shear-thickening exponents alpha > 2 are not supported"
            )
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.tau0 < 0.0:
            raise ValueError(f"tau0 must be non-negative, got {self.tau0}")
        object.__setattr__(self, "alpha_prime", self.alpha / (self.alpha - 1.0))
        object.__setattr__(self, "kappa_pow", self.kappa ** (1.0 / (self.alpha - 1.0)))


def _blocks(tau: np.ndarray) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size % 2:
        raise ValueError(f"stress vector must have even length, got shape {tau.shape}")
    return tau.reshape(-1, 2)


def block_norms(tau: np.ndarray) -> np.ndarray:
    """Per-triangle Euclidean stress magnitudes ``|t_k|``."""
    t = _blocks(tau)
    return np.hypot(t[:, 0], t[:, 1])


def objective(params: FluidParams, ops: DiscreteOperators, tau: np.ndarray) -> float:
    excess = np.maximum(block_norms(tau) - params.tau0, 0.0)
    coeff = 1.0 / (params.alpha_prime * params.kappa_pow)
    return coeff * float(np.dot(ops.tri.areas, excess ** params.alpha_prime))


def gradient(params: FluidParams, ops: DiscreteOperators, tau: np.ndarray) -> np.ndarray:
    t = _blocks(tau)
    norms = np.hypot(t[:, 0], t[:, 1])
    excess = norms - params.tau0
    yielded = excess > 0.0

    scale = np.zeros(norms.shape)
    if yielded.any():
        exponent = 1.0 / (params.alpha - 1.0)
        scale[yielded] = (
            ops.tri.areas[yielded] / params.kappa_pow
            * excess[yielded] ** exponent / norms[yielded]
        )
    return (scale[:, None] * t).ravel()


def hessian(params: FluidParams, ops: DiscreteOperators, tau: np.ndarray) -> np.ndarray:
    """Blockwise Hessian, shape ``(n_T, 2, 2)``; zero inside the yield surface."""
    t = _blocks(tau)
    norms = np.hypot(t[:, 0], t[:, 1])
    excess = norms - params.tau0
    yielded = excess > 0.0

    blocks = np.zeros((t.shape[0], 2, 2))
    if not yielded.any():
        return blocks

    am1 = params.alpha - 1.0
    e = excess[yielded]
    n = norms[yielded]
    t1 = t[yielded, 0]
    t2 = t[yielded, 1]

    prefactor = (
        ops.tri.areas[yielded] / (params.kappa_pow * am1)
        * e ** (1.0 / am1 - 1.0) / n ** 3
    )
    h11 = am1 * t2 ** 2 * e + t1 ** 2 * n
    h12 = -t1 * t2 * (am1 * e - n)
    h22 = am1 * t1 ** 2 * e + t2 ** 2 * n

    blocks[yielded, 0, 0] = prefactor * h11
    blocks[yielded, 0, 1] = prefactor * h12
    blocks[yielded, 1, 0] = prefactor * h12
    blocks[yielded, 1, 1] = prefactor * h22
    return blocks


def hessian_apply(blocks: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Blockwise product of an ``(n_T, 2, 2)`` Hessian with a stress vector."""
    w = _blocks(v)
    if blocks.shape[0] != w.shape[0]:
        raise ValueError("Hessian block count does not match vector length")
    return np.einsum("kij,kj->ki", blocks, w).ravel()


def kkt_residual(params: FluidParams, ops: DiscreteOperators, tau: np.ndarray,
                 y: np.ndarray) -> float:
    """Stationarity defect ``max |grad J(tau) - D^T y|``."""
    resid = gradient(params, ops, tau) - ops.D.T @ np.asarray(y, dtype=float)
    return float(np.max(np.abs(resid))) if resid.size else 0.0
