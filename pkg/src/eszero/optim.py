"""Optimizer state shared by both trainers.

Both trainers minimize: the gradient trainer hands over the planning-loss
gradient, the evolution trainer negates its score pseudogradient first.
State is immutable; update_state returns a fresh OptState.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("adabelief", "sgd")


@dataclass(frozen=True)
class OptState:
    t: int
    m: np.ndarray
    s: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class Optimizer:
    kind: str = "adabelief"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-16
    clip: float | None = None  # off by default; max gradient norm when set

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown optimizer kind {self.kind!r}")

    def init(self, x0: np.ndarray) -> OptState:
        x0 = np.asarray(x0, dtype=np.float64)
        return OptState(0, np.zeros_like(x0), np.zeros_like(x0), x0.copy())

    def get_parameters(self, state: OptState) -> np.ndarray:
        return state.x

    def update_state(self, state: OptState, g: np.ndarray, lr: float) -> OptState:
        g = np.asarray(g, dtype=np.float64)
        if g.shape != state.x.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {state.x.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient")
        if self.clip is not None:
            norm = float(np.linalg.norm(g))
            if norm > self.clip:
                g = g * (self.clip / norm)
        t = state.t + 1
        if self.kind == "sgd":
            return OptState(t, state.m, state.s, state.x - lr * g)
        m = self.beta1 * state.m + (1.0 - self.beta1) * g
        s = self.beta2 * state.s + (1.0 - self.beta2) * (g - m) ** 2 + self.eps
        m_hat = m / (1.0 - self.beta1 ** t)
        s_hat = s / (1.0 - self.beta2 ** t)
        x = state.x - lr * m_hat / (np.sqrt(s_hat) + self.eps)
        return OptState(t, m, s, x)


def adabelief_step(opt: Optimizer, state: OptState, g: np.ndarray,
                   lr: float) -> tuple[OptState, np.ndarray]:
    state = opt.update_state(state, g, lr)
    return state, state.x
