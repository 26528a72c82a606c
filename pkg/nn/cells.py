"""
GRU and LSTM cells with their single-step backward passes.

Row-vector convention: inputs are (batch, features), weights are stored
input-major so a layer computes x @ W + h @ U + b.

    GRU   W (D, 3H), U (H, 3H), b (3H,)   gate blocks z, r, h~
    LSTM  W (D, 4H), U (H, 4H), b (4H,)   gate blocks i, f, g, o
"""
from typing import Dict, Tuple

import numpy as np

Params = Dict[str, np.ndarray]


def sigmoid(x: np.ndarray) -> np.ndarray:
    # exp of a non-positive argument only
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    e = np.exp(x[~positive])
    out[~positive] = e / (1.0 + e)
    return out


def _check_shapes(x: np.ndarray, h: np.ndarray, params: Params, gates: int) -> int:
    W, U, b = params["W"], params["U"], params["b"]
    hidden = U.shape[0]
    if W.shape[1] != gates * hidden or U.shape[1] != gates * hidden or b.shape != (gates * hidden,):
        raise ValueError(f"parameter shapes W{W.shape} U{U.shape} b{b.shape} do not describe {gates} gates")
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"input width {x.shape[-1]} does not match W rows {W.shape[0]}")
    if h.shape[-1] != hidden:
        raise ValueError(f"state width {h.shape[-1]} does not match hidden size {hidden}")
    return hidden


def gru_forward(x: np.ndarray, h: np.ndarray, params: Params) -> Tuple[np.ndarray, tuple]:
    H = _check_shapes(x, h, params, 3)
    W, U, b = params["W"], params["U"], params["b"]
    a = x @ W + b
    z = sigmoid(a[..., :H] + h @ U[:, :H])
    r = sigmoid(a[..., H:2 * H] + h @ U[:, H:2 * H])
    hh = np.tanh(a[..., 2 * H:] + (r * h) @ U[:, 2 * H:])
    h_next = (1.0 - z) * h + z * hh
    return h_next, (x, h, z, r, hh)


def gru_cell(x: np.ndarray, h: np.ndarray, params: Params) -> np.ndarray:
    """h' = (1 - z) * h + z * tanh(W_h x + U_h (r * h) + b_h)."""
    return gru_forward(x, h, params)[0]


def gru_backward(dh_next: np.ndarray, cache: tuple, params: Params) -> Tuple[np.ndarray, np.ndarray, Params]:
    """Returns (dx, dh_prev, grads) for one step; inputs must be 2-D."""
    x, h, z, r, hh = cache
    U = params["U"]
    H = U.shape[0]
    dz = dh_next * (hh - h)
    dah = dh_next * z * (1.0 - hh * hh)
    daz = dz * z * (1.0 - z)
    drh = dah @ U[:, 2 * H:].T
    dar = drh * h * r * (1.0 - r)
    da = np.concatenate([daz, dar, dah], axis=-1)

    dW = x.T @ da
    dU = np.concatenate([h.T @ daz, h.T @ dar, (r * h).T @ dah], axis=1)
    db = da.sum(axis=0)
    dx = da @ params["W"].T
    dh_prev = dh_next * (1.0 - z) + drh * r + daz @ U[:, :H].T + dar @ U[:, H:2 * H].T
    return dx, dh_prev, {"W": dW, "U": dU, "b": db}


def lstm_forward(x: np.ndarray, h: np.ndarray, c: np.ndarray, params: Params) -> Tuple[np.ndarray, np.ndarray, tuple]:
    H = _check_shapes(x, h, params, 4)
    if c.shape != h.shape:
        raise ValueError(f"cell state shape {c.shape} differs from hidden state shape {h.shape}")
    a = x @ params["W"] + h @ params["U"] + params["b"]
    i = sigmoid(a[..., :H])
    f = sigmoid(a[..., H:2 * H])
    g = np.tanh(a[..., 2 * H:3 * H])
    o = sigmoid(a[..., 3 * H:])
    c_next = f * c + i * g
    tc = np.tanh(c_next)
    h_next = o * tc
    return h_next, c_next, (x, h, c, i, f, g, o, tc)


def lstm_cell(x: np.ndarray, h: np.ndarray, c: np.ndarray, params: Params) -> Tuple[np.ndarray, np.ndarray]:
    """c' = f * c + i * g, h' = o * tanh(c')."""
    h_next, c_next, _ = lstm_forward(x, h, c, params)
    return h_next, c_next


def lstm_backward(
    dh_next: np.ndarray, dc_next: np.ndarray, cache: tuple, params: Params
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Params]:
    """Returns (dx, dh_prev, dc_prev, grads) for one step; inputs must be 2-D."""
    x, h, c, i, f, g, o, tc = cache
    do = dh_next * tc
    dc = dc_next + dh_next * o * (1.0 - tc * tc)
    da = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * c * f * (1.0 - f),
        dc * i * (1.0 - g * g),
        do * o * (1.0 - o),
    ], axis=-1)

    grads = {"W": x.T @ da, "U": h.T @ da, "b": da.sum(axis=0)}
    dx = da @ params["W"].T
    dh_prev = da @ params["U"].T
    dc_prev = dc * f
    return dx, dh_prev, dc_prev, grads
