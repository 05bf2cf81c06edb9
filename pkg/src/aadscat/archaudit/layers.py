"""Layer kinds known to the auditor: shape rule, weight count and FLOPs.

Shapes exclude the batch axis. Sequences are ``(T, C)``: time first, features
last. FLOPs count one multiply-accumulate as 2, a bias add or an
element-wise activation as 1, and batch normalization at inference as 2 per
element (scale and shift).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

Shape = Tuple[int, ...]

# sigmoid x3, tanh x2, three products and one sum per unit and step
LSTM_POINTWISE = 9


class AuditError(ValueError):
    pass


@dataclass
class Layer:
    """One node of an architecture graph.

    ``share`` names an earlier layer whose weights this one reuses (counted
    once); ``params`` holds kind-specific settings.
    """

    name: str
    kind: str
    inputs: List[str]
    output: str
    params: dict = field(default_factory=dict)
    share: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "inputs": list(self.inputs), "output": self.output}
        if self.params:
            d["params"] = dict(self.params)
        if self.share:
            d["share"] = self.share
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Layer":
        return cls(d["name"], d["kind"], list(d["inputs"]), d["output"], dict(d.get("params", {})),
                   d.get("share"))


@dataclass
class LayerCost:
    shape: Shape
    trainable: int = 0
    non_trainable: int = 0
    flops: float = 0.0


def _n(shape: Shape) -> int:
    return int(math.prod(shape))


def _need_rank(layer: Layer, shape: Shape, rank: int):
    if len(shape) != rank:
        raise AuditError(f"layer {layer.name}: expected rank-{rank} input, got shape {shape}")


def _act_flops(layer: Layer, n: int) -> int:
    return n if layer.params.get("activation") not in (None, "linear") else 0


def batchnorm(layer, shapes):
    (s,) = shapes
    c = s[-1]
    return LayerCost(s, 2 * c, 2 * c, 2 * _n(s))


def dense(layer, shapes):
    """Dense on the last axis, applied independently to every leading position."""
    (s,) = shapes
    units = layer.params["units"]
    fan_in = s[-1]
    rows = _n(s[:-1])
    out = s[:-1] + (units,)
    w = fan_in * units + (units if layer.params.get("bias", True) else 0)
    flops = rows * (2 * fan_in * units + units) + _act_flops(layer, _n(out))
    return LayerCost(out, w, 0, flops)


def node_dense(layer, shapes):
    """Dense with separate weights for every row (e.g. every graph node)."""
    (s,) = shapes
    _need_rank(layer, s, 2)
    nodes, fan_in = s
    units = layer.params["units"]
    w = nodes * (fan_in * units + units)
    flops = nodes * (2 * fan_in * units + units) + _act_flops(layer, nodes * units)
    return LayerCost((nodes, units), w, 0, flops)


def conv1d(layer, shapes):
    """Convolution along axis 0 of a ``(length, channels)`` input."""
    (s,) = shapes
    _need_rank(layer, s, 2)
    length, c_in = s
    k = layer.params["kernel"]
    f = layer.params["filters"]
    dil = layer.params.get("dilation", 1)
    stride = layer.params.get("stride", 1)
    padding = layer.params.get("padding", "valid")
    span = (k - 1) * dil + 1
    if padding == "same":
        out_len = -(-length // stride)
    else:
        if length < span:
            raise AuditError(f"layer {layer.name}: input length {length} shorter than receptive field {span}")
        out_len = (length - span) // stride + 1
    w = k * c_in * f + f
    flops = out_len * (2 * k * c_in * f + f) + _act_flops(layer, out_len * f)
    return LayerCost((out_len, f), w, 0, flops)


def lstm(layer, shapes):
    """Keras-style LSTM returning the last hidden state."""
    (s,) = shapes
    _need_rank(layer, s, 2)
    steps, fan_in = s
    u = layer.params["units"]
    w = 4 * ((fan_in + u) * u + u)
    per_step = 2 * 4 * (fan_in + u) * u + 4 * u + LSTM_POINTWISE * u
    out = (steps, u) if layer.params.get("return_sequences") else (u,)
    return LayerCost(out, w, 0, steps * per_step)


def avg_time(layer, shapes):
    (s,) = shapes
    return LayerCost(s[1:], 0, 0, _n(s))


def flatten(layer, shapes):
    (s,) = shapes
    return LayerCost((_n(s),))


def reshape(layer, shapes):
    (s,) = shapes
    target = tuple(layer.params["shape"])
    if _n(target) != _n(s):
        raise AuditError(f"layer {layer.name}: cannot reshape {s} to {target}")
    return LayerCost(target)


def transpose(layer, shapes):
    (s,) = shapes
    return LayerCost(tuple(reversed(s)))


def dropout(layer, shapes):
    return LayerCost(shapes[0])


def activation(layer, shapes):
    return LayerCost(shapes[0], 0, 0, _n(shapes[0]))


def elementwise(layer, shapes):
    """Broadcasting multiply/add of two tensors (trailing axes aligned)."""
    a, b = shapes
    la, lb = len(a), len(b)
    out = []
    for i in range(max(la, lb)):
        da = a[la - 1 - i] if i < la else 1
        db = b[lb - 1 - i] if i < lb else 1
        if da != db and 1 not in (da, db):
            raise AuditError(f"layer {layer.name}: cannot broadcast {a} with {b}")
        out.append(max(da, db))
    out = tuple(reversed(out))
    return LayerCost(out, 0, 0, _n(out) + _act_flops(layer, _n(out)))


def concat(layer, shapes):
    axis = layer.params.get("axis", -1)
    ref = list(shapes[0])
    ax = axis % len(ref)
    total = 0
    for s in shapes:
        if len(s) != len(ref) or any(s[i] != ref[i] for i in range(len(ref)) if i != ax):
            raise AuditError(f"layer {layer.name}: incompatible shapes {shapes} for concat on axis {axis}")
        total += s[ax]
    ref[ax] = total
    return LayerCost(tuple(ref))


def cosine_similarity(layer, shapes):
    """Cosine similarity of every feature column of ``a`` with every column of ``b`` over time."""
    a, b = shapes
    _need_rank(layer, a, 2)
    if a[0] != b[0]:
        raise AuditError(f"layer {layer.name}: time axes differ ({a[0]} vs {b[0]})")
    t, ca = a
    cb = b[1]
    flops = 2 * t * ca * cb + 2 * t * (ca + cb) + 3 * ca * cb
    return LayerCost((ca, cb), 0, 0, flops)


def softmax(layer, shapes):
    s = shapes[0] if len(shapes) == 1 else (sum(_n(x) for x in shapes),)
    return LayerCost(s, 0, 0, 3 * _n(s))


def graph_mix(layer, shapes):
    """``act(X L + X)`` on ``(nodes, features)`` with a learned ``nodes x nodes`` adjacency.

    ``learned`` adds the adjacency to the trainable count.
    """
    (s,) = shapes
    _need_rank(layer, s, 2)
    nodes, feats = s
    w = nodes * nodes if layer.params.get("learned", True) else 0
    # normalization of A (column sums and divide) plus the product and residual
    flops = 2 * nodes * nodes + 2 * nodes * nodes * feats + 2 * nodes * feats
    return LayerCost(s, w, nodes * nodes if not layer.params.get("learned", True) else 0, flops)


def cross_attention(layer, shapes):
    """Single-head cross-attention block with pointwise projections.

    Queries come from the first input, keys and values from the second; the
    output is projected back to the query width and layer-normalized with a
    residual connection.
    """
    q, c = shapes
    _need_rank(layer, q, 2)
    _need_rank(layer, c, 2)
    nq, dq = q
    nc, dc = c
    d = layer.params["d_att"]
    w = (dq * d + d) + 2 * (dc * d + d) + (d * dq + dq) + 2 * dq
    flops = (nq * (2 * dq * d + d) + 2 * nc * (2 * dc * d + d)      # projections
             + 2 * nq * nc * d + 3 * nq * nc + 2 * nq * nc * d       # scores, softmax, weighted sum
             + nq * (2 * d * dq + dq) + 8 * nq * dq)                 # output projection, residual + norm
    return LayerCost(q, w, 0, flops)


KINDS: Dict[str, Callable] = {
    "batchnorm": batchnorm,
    "dense": dense,
    "node_dense": node_dense,
    "conv1d": conv1d,
    "lstm": lstm,
    "avg_time": avg_time,
    "flatten": flatten,
    "reshape": reshape,
    "transpose": transpose,
    "dropout": dropout,
    "activation": activation,
    "multiply": elementwise,
    "add": elementwise,
    "concat": concat,
    "cosine_similarity": cosine_similarity,
    "softmax": softmax,
    "graph_mix": graph_mix,
    "cross_attention": cross_attention,
}
