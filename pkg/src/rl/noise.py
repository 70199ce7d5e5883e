"""
Exploration noise added to actor actions, in action units.
"""

from abc import ABC, abstractmethod
from typing import Dict, Optional, Type

import numpy as np

from src.config.settings import NoiseConfig


class NoiseProcess(ABC):
    """Base class for exploration noise; `sample` returns one draw per entity"""

    kind: str = ""

    def __init__(self, sigma: float):
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        self.sigma = float(sigma)

    @abstractmethod
    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        pass

    def reset(self) -> None:
        """Called at the start of every episode"""


class GaussianNoise(NoiseProcess):
    kind = "gaussian"

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(0.0, self.sigma, size=size)


class UniformNoise(NoiseProcess):
    """Uniform on [-σ√3, σ√3], which has standard deviation σ"""

    kind = "uniform"

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        half_width = self.sigma * np.sqrt(3.0)
        return rng.uniform(-half_width, half_width, size=size)


class OrnsteinUhlenbeckNoise(NoiseProcess):
    """
    Temporally correlated noise, one independent process per entity.

    x <- x + θ (μ - x) dt + σ √dt ξ,  ξ ~ N(0, 1)
    """

    kind = "ou"

    def __init__(self, sigma: float, theta: float = 0.15, mu: float = 0.0, dt: float = 1.0):
        super().__init__(sigma)
        self.theta = float(theta)
        self.mu = float(mu)
        self.dt = float(dt)
        self.state: Optional[np.ndarray] = None

    def reset(self) -> None:
        self.state = None

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.state is None or len(self.state) != size:
            self.state = np.full(size, self.mu, dtype=np.float64)
        self.state = (
            self.state
            + self.theta * (self.mu - self.state) * self.dt
            + self.sigma * np.sqrt(self.dt) * rng.standard_normal(size)
        )
        return self.state.copy()


NOISE_CLASSES: Dict[str, Type[NoiseProcess]] = {
    GaussianNoise.kind: GaussianNoise,
    UniformNoise.kind: UniformNoise,
    OrnsteinUhlenbeckNoise.kind: OrnsteinUhlenbeckNoise,
}


def make_noise(config: NoiseConfig) -> NoiseProcess:
    """Noise process described by the config"""
    if config.kind not in NOISE_CLASSES:
        raise ValueError(f"unknown noise kind {config.kind!r}; supported: {sorted(NOISE_CLASSES)}")
    if config.kind == OrnsteinUhlenbeckNoise.kind:
        return OrnsteinUhlenbeckNoise(config.sigma, config.ou_theta, config.ou_mu, config.ou_dt)
    return NOISE_CLASSES[config.kind](config.sigma)
