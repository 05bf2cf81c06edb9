"""Architecture graphs and the symbolic audit.

An :class:`ArchSpec` is an ordered list of :class:`~.layers.Layer` nodes over
named tensors. :func:`audit` walks the list once, inferring every output
shape and summing weights and FLOPs. :func:`builtin_arch` builds the six
decoder networks for a given input geometry.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .layers import KINDS, AuditError, Layer, Shape

ARCH_NAMES = ("CNN-C1", "CNN-Dil", "LSTM-2", "LSTM-X", "GCANet", "GCANet-NoEn")
N_EEG = 64


@dataclass
class ArchSpec:
    """A layer graph plus the shapes of its named inputs.

    ``inputs`` maps tensor names to shapes (batch axis excluded). ``geometry``
    records the builder arguments (T, C_e, C_a, n) for reporting.
    """

    name: str
    inputs: Dict[str, Shape]
    layers: List[Layer]
    geometry: dict = field(default_factory=dict)

    def validate(self) -> None:
        """Check the graph is acyclic in list order and that every input is used."""
        known = set(self.inputs)
        used = set()
        seen_names = set()
        for layer in self.layers:
            if layer.kind not in KINDS:
                raise AuditError(f"layer {layer.name}: unknown kind {layer.kind!r}")
            if layer.name in seen_names:
                raise AuditError(f"duplicate layer name {layer.name!r}")
            seen_names.add(layer.name)
            for t in layer.inputs:
                if t not in known:
                    raise AuditError(f"layer {layer.name}: input {t!r} is not produced by an earlier layer")
                used.add(t)
            if layer.output in known:
                raise AuditError(f"layer {layer.name}: tensor {layer.output!r} is produced twice")
            if layer.share is not None and layer.share not in seen_names:
                raise AuditError(f"layer {layer.name}: shares weights with unknown layer {layer.share!r}")
            known.add(layer.output)
        unused = set(self.inputs) - used
        if unused:
            raise AuditError(f"inputs never consumed: {sorted(unused)}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": {k: list(v) for k, v in self.inputs.items()},
            "layers": [layer.to_dict() for layer in self.layers],
            "geometry": dict(self.geometry),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchSpec":
        return cls(d["name"], {k: tuple(v) for k, v in d["inputs"].items()},
                   [Layer.from_dict(x) for x in d["layers"]], dict(d.get("geometry", {})))

    @classmethod
    def load(cls, path) -> "ArchSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class LayerReport:
    name: str
    kind: str
    shape: Shape
    weights: int
    non_trainable: int
    flops: float

    def as_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "shape": list(self.shape),
                "weights": self.weights, "non_trainable": self.non_trainable, "flops": self.flops}


@dataclass(frozen=True)
class ArchReport:
    name: str
    per_layer: Tuple[LayerReport, ...]
    total_weights: int
    total_non_trainable: int
    total_flops: float
    geometry: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "geometry": dict(self.geometry),
            "total_weights": self.total_weights,
            "total_non_trainable": self.total_non_trainable,
            "total_flops": self.total_flops,
            "per_layer": [r.as_dict() for r in self.per_layer],
        }


def audit(spec: ArchSpec) -> ArchReport:
    """Infer shapes and count trainable weights and forward FLOPs.

    A layer with ``share`` set contributes FLOPs but no weights; its own
    weight count must equal that of the layer it shares with.
    """
    spec.validate()
    shapes: Dict[str, Shape] = {k: tuple(v) for k, v in spec.inputs.items()}
    own_weights: Dict[str, int] = {}
    rows = []
    for layer in spec.layers:
        cost = KINDS[layer.kind](layer, [shapes[t] for t in layer.inputs])
        shapes[layer.output] = tuple(int(s) for s in cost.shape)
        own_weights[layer.name] = cost.trainable
        w, nt = cost.trainable, cost.non_trainable
        if layer.share is not None:
            if own_weights[layer.share] != cost.trainable:
                raise AuditError(f"layer {layer.name}: cannot share weights with {layer.share} "
                                 f"({cost.trainable} vs {own_weights[layer.share]} parameters)")
            w, nt = 0, 0
        rows.append(LayerReport(layer.name, layer.kind, shapes[layer.output], w, nt, float(cost.flops)))
    return ArchReport(spec.name, tuple(rows), sum(r.weights for r in rows),
                      sum(r.non_trainable for r in rows), sum(r.flops for r in rows), dict(spec.geometry))


# ---------------------------------------------------------------- builders

class _Graph:
    """Small helper for writing layer lists: ``g.add(kind, inputs, **params)``."""

    def __init__(self):
        self.layers: List[Layer] = []
        self._count: Dict[str, int] = {}
        self._first: Dict[str, str] = {}

    def add(self, kind: str, inputs, name: Optional[str] = None, shared: Optional[str] = None, **params) -> str:
        if isinstance(inputs, str):
            inputs = [inputs]
        if name is None:
            i = self._count.get(kind, 0)
            self._count[kind] = i + 1
            name = f"{kind}_{i}"
        share = None
        if shared is not None:
            # the first layer registered under a sharing key owns the weights
            share = self._first.setdefault(shared, name)
            if share == name:
                share = None
        self.layers.append(Layer(name, kind, list(inputs), name, params, share))
        return name


def _cnn_c1(T, C_e, C_a, n):
    if n != 2:
        raise AuditError("CNN-C1 takes exactly two audio inputs")
    g = _Graph()
    we = g.add("avg_time", "eeg")
    we = g.add("dense", we, units=8, activation="tanh")
    we = g.add("dropout", we)
    we = g.add("dense", we, units=N_EEG * C_e, activation="tanh")
    xe = g.add("multiply", ["eeg", we], name="channel_attention")
    x = g.add("concat", [xe, "audio_0", "audio_1"], axis=-1)
    x = g.add("conv1d", x, kernel=9, filters=10, activation="relu")
    x = g.add("avg_time", x)
    x = g.add("dense", x, units=10, activation="relu")
    x = g.add("dropout", x)
    g.add("dense", x, units=2, activation="sigmoid", name="output")
    return g.layers


def _cnn_dil(T, C_e, C_a, n):
    g = _Graph()
    d3, d9 = (1, 1) if T < 16 else (3, 9)
    xe = g.add("conv1d", "eeg", kernel=1, filters=8)
    xe = g.add("conv1d", xe, kernel=3, filters=16, activation="relu")
    xe = g.add("conv1d", xe, kernel=3, filters=16, activation="relu", dilation=d3)
    xe = g.add("conv1d", xe, kernel=3, filters=16, activation="relu", dilation=d9)
    ys = []
    for i in range(n):
        xi = g.add("batchnorm", f"audio_{i}", name=f"a{i}_bn", shared="a_bn")
        xi = g.add("conv1d", xi, name=f"a{i}_conv0", shared="a_conv0", kernel=3, filters=16, activation="relu")
        xi = g.add("conv1d", xi, name=f"a{i}_conv1", shared="a_conv1", kernel=3, filters=16,
                   activation="relu", dilation=d3)
        xi = g.add("conv1d", xi, name=f"a{i}_conv2", shared="a_conv2", kernel=3, filters=16,
                   activation="relu", dilation=d9)
        s = g.add("cosine_similarity", [xe, xi], name=f"p{i}_cos")
        s = g.add("flatten", s, name=f"p{i}_flat")
        ys.append(g.add("dense", s, name=f"p{i}_score", shared="score", units=1))
    g.add("softmax", ys, name="output")
    return g.layers


def _lstm_branches(g: _Graph, n: int) -> Tuple[str, List[str]]:
    xe = g.add("batchnorm", "eeg", name="eeg_bn")
    xe = g.add("lstm", xe, name="lstm_1", units=15)
    xa = []
    for i in range(n):
        xi = g.add("batchnorm", f"audio_{i}", name=f"a{i}_bn", shared="a_bn")
        xa.append(g.add("lstm", xi, name=f"a{i}_lstm_2", shared="lstm_2", units=15))
    return xe, xa


def _lstm_2(T, C_e, C_a, n):
    if n != 2:
        raise AuditError("LSTM-2 takes exactly two audio inputs")
    g = _Graph()
    xe, (x1, x2) = _lstm_branches(g, 2)
    s1 = g.add("add", [xe, x1], name="sum_1")
    s2 = g.add("add", [xe, x2], name="sum_2")
    x = g.add("concat", [s1, s2])
    x = g.add("batchnorm", x)
    x = g.add("dropout", x)
    x = g.add("dense", x, units=40, activation="relu")
    x = g.add("batchnorm", x)
    x = g.add("dropout", x)
    g.add("dense", x, name="output", units=2, activation="sigmoid")
    return g.layers


def _lstm_x(T, C_e, C_a, n):
    g = _Graph()
    xe, xa = _lstm_branches(g, n)
    ys = []
    for i, xi in enumerate(xa):
        x = g.add("concat", [xe, xi], name=f"p{i}_concat")
        x = g.add("batchnorm", x, name=f"p{i}_bn0", shared="p_bn0")
        x = g.add("dropout", x, name=f"p{i}_do0")
        x = g.add("dense", x, name=f"p{i}_dense0", shared="p_dense0", units=20, activation="relu")
        x = g.add("batchnorm", x, name=f"p{i}_bn1", shared="p_bn1")
        x = g.add("dropout", x, name=f"p{i}_do1")
        ys.append(g.add("dense", x, name=f"p{i}_score", shared="p_score", units=1, activation="sigmoid"))
    g.add("softmax", ys, name="output")
    return g.layers


@dataclass(frozen=True)
class GcaParams:
    """Internal widths of the cross-attention classifier and the original encoders.

    Only the 64 x 128 representation size and the four stacked attention
    modules are fixed by the architecture description; the remaining widths
    are free parameters whose defaults land near the published totals.
    """

    nodes: int = N_EEG
    width: int = 128
    d_att: int = 32
    n_modules: int = 4
    hidden: int = 128
    # original encoders
    eeg_samples: int = 128
    eeg_extra_features: int = 10
    eeg_hidden: int = 192
    audio_samples: int = 16000
    audio_filters: Tuple[int, ...] = (32, 32, 64)
    audio_kernel: int = 5
    audio_stride: int = 5
    # conversion blocks
    conv_filters: int = 64
    conv_kernel: int = 8


def _gca_core(g: _Graph, eeg: str, audios: List[str], p: GcaParams):
    """Cross-attention fusion and classifier shared by both GCANet variants."""
    feats = []
    for i, a in enumerate(audios):
        x = eeg
        for m in range(p.n_modules):
            x = g.add("cross_attention", [x, a], name=f"p{i}_xatt{m}", shared=f"xatt{m}", d_att=p.d_att)
        x = g.add("concat", [x, eeg], name=f"p{i}_concat", axis=-1)
        x = g.add("conv1d", x, name=f"p{i}_fuse", shared="fuse", kernel=1, filters=p.width)
        x = g.add("flatten", x, name=f"p{i}_flat")
        feats.append(g.add("dense", x, name=f"p{i}_fc", shared="fc", units=p.hidden, activation="relu"))
    x = g.add("concat", feats, name="paths")
    g.add("dense", x, name="output", units=len(audios), activation="softmax")


def _gcanet(T, C_e, C_a, n, p: GcaParams):
    g = _Graph()
    xe = g.add("graph_mix", "eeg", name="eeg_graph")
    xe = g.add("node_dense", xe, name="eeg_node_fc", units=p.eeg_hidden, activation="elu")
    xe = g.add("dense", xe, name="eeg_proj", units=p.width)
    audios = []
    for i in range(n):
        x = f"audio_{i}"
        for k, f in enumerate(p.audio_filters):
            x = g.add("conv1d", x, name=f"a{i}_conv{k}", shared=f"a_conv{k}", kernel=p.audio_kernel,
                      filters=f, stride=p.audio_stride, activation="relu")
        audios.append(g.add("transpose", x, name=f"a{i}_t"))
    _gca_core(g, xe, audios, p)
    return g.layers


def _gcanet_noen(T, C_e, C_a, n, p: GcaParams):
    g = _Graph()
    xe = g.add("graph_mix", "eeg", name="eeg_graph", activation="elu")
    xe = g.add("dense", xe, name="eeg_proj", units=p.width)
    audios = []
    for i in range(n):
        # convolve along the feature axis with time steps as input channels
        x = g.add("transpose", f"audio_{i}", name=f"a{i}_t0")
        x = g.add("conv1d", x, name=f"a{i}_conv", shared="a_conv", kernel=p.conv_kernel,
                  filters=p.conv_filters, padding="same")
        x = g.add("batchnorm", x, name=f"a{i}_bn0", shared="a_bn0")
        x = g.add("activation", x, name=f"a{i}_relu0")
        x = g.add("transpose", x, name=f"a{i}_t1")
        x = g.add("dense", x, name=f"a{i}_proj", shared="a_proj", units=p.width)
        x = g.add("batchnorm", x, name=f"a{i}_bn1", shared="a_bn1")
        audios.append(g.add("activation", x, name=f"a{i}_relu1"))
    _gca_core(g, xe, audios, p)
    return g.layers


def builtin_arch(name: str, T: int, C_e: int, C_a: int, n: int = 2, T_a: Optional[int] = None,
                 gca: GcaParams = GcaParams()) -> ArchSpec:
    """Layer graph of one of the six decoders.

    ``T`` is the EEG frame count of a one-second input; ``T_a`` (default
    ``T``) the audio frame count. The EEG input has ``64 * C_e`` features per
    frame, each audio ``C_a``. GCANet ignores the geometry and uses the raw
    128 Hz EEG and 16 kHz envelope sizes held in ``gca``.
    """
    if name not in ARCH_NAMES:
        raise AuditError(f"unknown architecture {name!r}; expected one of {', '.join(ARCH_NAMES)}")
    T_a = T if T_a is None else T_a
    if min(T, T_a, C_e, C_a, n) < 1:
        raise AuditError("all dimensions must be positive")
    geometry = {"T": T, "T_a": T_a, "C_e": C_e, "C_a": C_a, "n": n}
    if name == "GCANet":
        inputs = {"eeg": (gca.nodes, gca.eeg_samples + gca.eeg_extra_features)}
        inputs.update({f"audio_{i}": (gca.audio_samples, 1) for i in range(n)})
        return ArchSpec(name, inputs, _gcanet(T, C_e, C_a, n, gca), geometry)
    if name == "GCANet-NoEn":
        inputs = {"eeg": (gca.nodes, T * C_e)}
        inputs.update({f"audio_{i}": (T_a, C_a) for i in range(n)})
        return ArchSpec(name, inputs, _gcanet_noen(T, C_e, C_a, n, gca), geometry)
    if name in ("CNN-C1", "CNN-Dil") and T_a != T:
        raise AuditError(f"{name} needs EEG and audio on the same frame grid (T={T}, T_a={T_a})")
    inputs = {"eeg": (T, N_EEG * C_e)}
    inputs.update({f"audio_{i}": (T_a, C_a) for i in range(n)})
    build = {"CNN-C1": _cnn_c1, "CNN-Dil": _cnn_dil, "LSTM-2": _lstm_2, "LSTM-X": _lstm_x}[name]
    return ArchSpec(name, inputs, build(T, C_e, C_a, n), geometry)
