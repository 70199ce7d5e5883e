"""
Adam optimizer over lists of numpy parameter arrays.
"""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.core.errors import NonFiniteError, ShapeError
from src.nn.dense import DenseNet


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the parameter shapes"""
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m=[np.zeros_like(p, dtype=np.float64) for p in params],
            v=[np.zeros_like(p, dtype=np.float64) for p in params],
            lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        )

    def reset(self) -> None:
        for m, v in zip(self.m, self.v):
            m.fill(0.0)
            v.fill(0.0)
        self.t = 0


def adam_step(state: AdamState, params: Sequence[np.ndarray],
              grads: Sequence[np.ndarray]) -> Sequence[np.ndarray]:
    """
    One bias-corrected Adam update, applied in place.

    Returns:
        The same parameter arrays, updated
    """
    if not (len(params) == len(grads) == len(state.m)):
        raise ShapeError(f"{len(params)} params, {len(grads)} grads, {len(state.m)} moment slots")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.m[i].shape:
            raise ShapeError(f"slot {i}: param {p.shape}, grad {g.shape}, moment {state.m[i].shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient in parameter slot {i}")

    state.t += 1
    bias1 = 1.0 - state.beta1 ** state.t
    bias2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return params


def optimizer_for(net: DenseNet, lr: float = 1e-3) -> AdamState:
    return AdamState.for_params(net.parameters(), lr=lr)


def net_step(net: DenseNet, state: AdamState, grads: Sequence[np.ndarray]) -> None:
    """Adam update of a network's parameters"""
    adam_step(state, net.parameters(), grads)
    net.touch()
