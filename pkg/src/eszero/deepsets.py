"""DeepSets prediction network: f(obs) -> (value, policy logits).

One stack of permutation-equivariant layers feeds two readouts.  Per-item
logits (set-indexed actions) come straight off the equivariant output; the
value and any fixed-action logits come off an invariant path built from a
linear equivariant layer, global average pooling, and a ReLU.  Gradients
are hand-derived reverse mode over a cache of forward intermediates, and
parameters round-trip through a flat vector so they can be perturbed or
checkpointed as a single array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .episode import ActionMode, Observation
from .rng import make_rng

MASK_LOGIT = -1e9  # stands in for -inf; underflows to exactly 0 in softmax


@dataclass(frozen=True)
class LayerParams:
    A: np.ndarray  # d_in x d_out
    C: np.ndarray  # d_in x d_out, applied to the summed rows
    b: np.ndarray  # d_out


@dataclass(frozen=True)
class AffineParams:
    W: np.ndarray  # d_in x d_out
    b: np.ndarray  # d_out


@dataclass(frozen=True)
class NetParams:
    mode: ActionMode
    equivariant_layers: tuple[LayerParams, ...]
    invariant_layer: LayerParams
    policy_head: AffineParams
    value_head: AffineParams


@dataclass(frozen=True)
class FlatParams:
    values: np.ndarray
    layout: tuple[tuple[str, tuple[int, ...], int], ...]  # (name, shape, offset)


def equivariant_layer(X: np.ndarray, P: LayerParams, activate: bool) -> np.ndarray:
    """Y[i] = act(X[i] @ A + b + (sum_j X[j]) @ C); ReLU when activate."""
    if X.ndim != 2 or X.shape[1] != P.A.shape[0]:
        raise ValueError(f"expected (n, {P.A.shape[0]}) input, got {X.shape}")
    Y = X @ P.A + P.b + X.sum(axis=0) @ P.C
    return np.maximum(Y, 0.0) if activate else Y


@dataclass(frozen=True)
class ForwardCache:
    params: NetParams
    X: np.ndarray
    pre: tuple[np.ndarray, ...]   # pre-activation of each equivariant layer
    post: tuple[np.ndarray, ...]  # inputs to each layer: X, relu(pre_0), ...
    pooled: np.ndarray            # invariant layer output, averaged over items
    h: np.ndarray                 # relu(pooled)
    legal: np.ndarray


def forward(params: NetParams, obs: Observation):
    """Evaluate the net; returns (value, masked logits, cache for backward)."""
    X = np.asarray(obs.features, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty feature set")
    if not obs.legal_mask.any():
        raise ValueError("no legal actions")
    pre = []
    post = [X]
    E = X
    for lp in params.equivariant_layers:
        Z = equivariant_layer(E, lp, activate=False)
        pre.append(Z)
        E = np.maximum(Z, 0.0)
        post.append(E)
    pooled = equivariant_layer(E, params.invariant_layer, activate=False).mean(axis=0)
    h = np.maximum(pooled, 0.0)
    value = float(h @ params.value_head.W[:, 0] + params.value_head.b[0])
    if params.mode is ActionMode.SET_INDEXED:
        raw = E @ params.policy_head.W[:, 0] + params.policy_head.b[0]
    else:
        raw = h @ params.policy_head.W + params.policy_head.b
    if raw.shape[0] != obs.n_actions:
        raise ValueError(f"net produced {raw.shape[0]} logits for {obs.n_actions} actions")
    logits = np.where(obs.legal_mask, raw, MASK_LOGIT)
    cache = ForwardCache(params, X, tuple(pre), tuple(post), pooled, h, obs.legal_mask)
    return value, logits, cache


def backward(params: NetParams, cache: ForwardCache,
             d_value: float, d_logits: np.ndarray) -> FlatParams:
    """Gradient of d_value*value + d_logits@logits w.r.t. every parameter.

    Masked logits contribute nothing regardless of what d_logits carries.
    """
    if cache.params is not params:
        raise ValueError("cache does not belong to these parameters")
    d_logits = np.where(cache.legal, d_logits, 0.0)
    E = cache.post[-1]
    n = E.shape[0]
    grads: dict[str, np.ndarray] = {}

    d_h = d_value * params.value_head.W[:, 0]
    grads["value.W"] = (d_value * cache.h)[:, None]
    grads["value.b"] = np.array([d_value])
    if params.mode is ActionMode.SET_INDEXED:
        grads[_POLICY_SET + ".W"] = (E.T @ d_logits)[:, None]
        grads[_POLICY_SET + ".b"] = np.array([d_logits.sum()])
        d_E = np.outer(d_logits, params.policy_head.W[:, 0])
    else:
        grads[_POLICY_FIXED + ".W"] = np.outer(cache.h, d_logits)
        grads[_POLICY_FIXED + ".b"] = d_logits.copy()
        d_h = d_h + params.policy_head.W @ d_logits
        d_E = np.zeros_like(E)

    d_pooled = np.where(cache.pooled > 0.0, d_h, 0.0)
    # averaging spread the invariant layer output evenly over the n rows
    d_Z = np.broadcast_to(d_pooled / n, (n, d_pooled.shape[0]))
    inv = params.invariant_layer
    col = d_pooled.copy()  # column sum of d_Z
    grads["invariant.A"] = E.T @ d_Z
    grads["invariant.b"] = col
    grads["invariant.C"] = np.outer(E.sum(axis=0), col)
    d_E = d_E + d_Z @ inv.A.T + col @ inv.C.T

    for k in range(len(params.equivariant_layers) - 1, -1, -1):
        lp = params.equivariant_layers[k]
        E_in = cache.post[k]
        d_Z = np.where(cache.pre[k] > 0.0, d_E, 0.0)
        col = d_Z.sum(axis=0)
        grads[f"equivariant.{k}.A"] = E_in.T @ d_Z
        grads[f"equivariant.{k}.b"] = col
        grads[f"equivariant.{k}.C"] = np.outer(E_in.sum(axis=0), col)
        d_E = d_Z @ lp.A.T + col @ lp.C.T

    layout = _layout(params)
    values = np.empty(layout[-1][2] + int(np.prod(layout[-1][1])))
    for name, shape, offset in layout:
        g = grads[name]
        if g.shape != shape:
            raise ValueError(f"gradient {name}: shape {g.shape} != {shape}")
        values[offset:offset + g.size] = g.ravel()
    return FlatParams(values, layout)


# --- flat vector <-> structured parameters --------------------------------

_POLICY_SET = "policy_set"
_POLICY_FIXED = "policy_fixed"


def _tensors(params: NetParams):
    for k, lp in enumerate(params.equivariant_layers):
        yield f"equivariant.{k}.A", lp.A
        yield f"equivariant.{k}.C", lp.C
        yield f"equivariant.{k}.b", lp.b
    yield "invariant.A", params.invariant_layer.A
    yield "invariant.C", params.invariant_layer.C
    yield "invariant.b", params.invariant_layer.b
    head = _POLICY_SET if params.mode is ActionMode.SET_INDEXED else _POLICY_FIXED
    yield head + ".W", params.policy_head.W
    yield head + ".b", params.policy_head.b
    yield "value.W", params.value_head.W
    yield "value.b", params.value_head.b


def _layout(params: NetParams):
    layout = []
    offset = 0
    for name, t in _tensors(params):
        layout.append((name, t.shape, offset))
        offset += t.size
    return tuple(layout)


def flatten(params: NetParams) -> FlatParams:
    layout = _layout(params)
    total = layout[-1][2] + int(np.prod(layout[-1][1]))
    values = np.empty(total)
    for (_, _, offset), (_, t) in zip(layout, _tensors(params)):
        values[offset:offset + t.size] = t.ravel()
    return FlatParams(values, layout)


def unflatten(values: np.ndarray, layout) -> NetParams:
    values = np.asarray(values, dtype=np.float64)
    total = layout[-1][2] + int(np.prod(layout[-1][1]))
    if values.shape != (total,):
        raise ValueError(f"expected {total} values, got shape {values.shape}")
    tensors = {}
    for name, shape, offset in layout:
        size = int(np.prod(shape))
        tensors[name] = values[offset:offset + size].reshape(shape).copy()
    n_layers = sum(1 for name in tensors if name.endswith(".A") and name.startswith("equi"))
    eq = tuple(
        LayerParams(tensors[f"equivariant.{k}.A"], tensors[f"equivariant.{k}.C"],
                    tensors[f"equivariant.{k}.b"])
        for k in range(n_layers))
    inv = LayerParams(tensors["invariant.A"], tensors["invariant.C"], tensors["invariant.b"])
    if _POLICY_SET + ".W" in tensors:
        mode = ActionMode.SET_INDEXED
        policy = AffineParams(tensors[_POLICY_SET + ".W"], tensors[_POLICY_SET + ".b"])
    else:
        mode = ActionMode.FIXED
        policy = AffineParams(tensors[_POLICY_FIXED + ".W"], tensors[_POLICY_FIXED + ".b"])
    value = AffineParams(tensors["value.W"], tensors["value.b"])
    return NetParams(mode, eq, inv, policy, value)


def init(seed: int, d_in: int, mode: ActionMode, n_actions: int | None = None,
         hidden: int = 16, n_equivariant: int = 1) -> NetParams:
    """Fan-in-scaled uniform weights, zero biases, deterministic in seed."""
    if mode is ActionMode.FIXED and not n_actions:
        raise ValueError("fixed-action nets need n_actions")
    rng = make_rng(seed, "net-init")

    def draw(d_a: int, d_b: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(d_a)
        return rng.uniform(-bound, bound, size=(d_a, d_b))

    dims = [d_in] + [hidden] * n_equivariant
    eq = tuple(
        LayerParams(draw(dims[k], dims[k + 1]), draw(dims[k], dims[k + 1]),
                    np.zeros(dims[k + 1]))
        for k in range(n_equivariant))
    inv = LayerParams(draw(hidden, hidden), draw(hidden, hidden), np.zeros(hidden))
    if mode is ActionMode.SET_INDEXED:
        policy = AffineParams(draw(hidden, 1), np.zeros(1))
    else:
        policy = AffineParams(draw(hidden, n_actions), np.zeros(n_actions))
    value = AffineParams(draw(hidden, 1), np.zeros(1))
    return NetParams(mode, eq, inv, policy, value)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


# --- checkpoint file ------------------------------------------------------
#
# Text header (magic line, then one JSON line describing the layout),
# followed by the raw little-endian float64 parameter vector.

_MAGIC = b"eszero-params 1\n"


def save_params(path, params: NetParams) -> None:
    flat = flatten(params)
    header = json.dumps({
        "layout": [[name, list(shape), offset] for name, shape, offset in flat.layout],
        "total": int(flat.values.size),
    }).encode("ascii") + b"\n"
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(header)
        fh.write(flat.values.astype("<f8").tobytes())


def load_params(path) -> NetParams:
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != _MAGIC:
            raise ValueError(f"not a parameter checkpoint: {magic!r}")
        meta = json.loads(fh.readline())
        layout = tuple((name, tuple(shape), offset) for name, shape, offset in meta["layout"])
        raw = fh.read()
    values = np.frombuffer(raw, dtype="<f8")
    if values.size != meta["total"]:
        raise ValueError(f"expected {meta['total']} values, file holds {values.size}")
    return unflatten(values, layout)
