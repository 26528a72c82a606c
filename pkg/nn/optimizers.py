"""
Adam and RMSProp over a dict of named numpy parameters.

    Adam:     m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
              theta -= lr * m_hat / (sqrt(v_hat) + eps)   (bias-corrected)
    RMSProp:  v = rho v + (1 - rho) g^2
              theta -= lr * g / (sqrt(v) + eps)
"""
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


@dataclass
class RmsPropState:
    v: Params = field(default_factory=dict)


def step_adam(
    params: Params, grads: Params, state: AdamState, lr: float,
    beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
) -> Params:
    state.t += 1
    for name, grad in grads.items():
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(grad)
            state.v[name] = np.zeros_like(grad)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        m_hat = m / (1.0 - beta1 ** state.t)
        v_hat = v / (1.0 - beta2 ** state.t)
        params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params


def step_rmsprop(
    params: Params, grads: Params, state: RmsPropState, lr: float, rho: float = 0.9, eps: float = 1e-8
) -> Params:
    for name, grad in grads.items():
        v = state.v.get(name)
        if v is None:
            v = state.v[name] = np.zeros_like(grad)
        v *= rho
        v += (1.0 - rho) * grad * grad
        params[name] = params[name] - lr * grad / (np.sqrt(v) + eps)
    return params


class Adam:
    def __init__(self, lr: float):
        self.lr = lr
        self.state = AdamState()

    def step(self, params: Params, grads: Params) -> Params:
        return step_adam(params, grads, self.state, self.lr)


class RMSProp:
    def __init__(self, lr: float):
        self.lr = lr
        self.state = RmsPropState()

    def step(self, params: Params, grads: Params) -> Params:
        return step_rmsprop(params, grads, self.state, self.lr)


OPTIMIZERS = {"adam": Adam, "rmsprop": RMSProp}


def make_optimizer(name: str, lr: float):
    try:
        return OPTIMIZERS[name](lr)
    except KeyError:
        raise ValueError(f"unknown optimizer '{name}'")
