"""A linear attention probe over window statistics.

Each modality's window statistics are z-scored and projected onto their
leading principal components (whitened), giving ``e`` for the EEG and ``a_i``
for speaker ``i``. Speaker ``i`` scores

    s_i = e^T W a_i + v^T a_i

and the prediction is the softmax over speakers. The same ``W`` and ``v``
score every speaker, so the probe is exchangeable: permuting the speakers
permutes the scores. It is linear in the parameters, so the cross-entropy is
convex and plain gradient descent with a step below ``1 / L`` (``L`` a bound on
the gradient's Lipschitz constant) never increases the loss.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .windows import WindowBatch

log = logging.getLogger(__name__)


class ProbeError(ValueError):
    pass


@dataclass(frozen=True)
class ProbeConfig:
    k_eeg: int = 16
    k_audio: int = 8
    epochs: int = 300
    lr: float = 1.0  # fraction of the guaranteed-descent step 1/L
    l2: float = 1e-3
    seed: int = 0


@dataclass
class Projection:
    """z-score followed by whitened PCA."""

    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray  # [features, k], already divided by the component std

    @classmethod
    def fit(cls, x: np.ndarray, k: int) -> "Projection":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        z = (x - mean) / scale
        s, vt = _top_singular(z, k)
        sd = s / np.sqrt(max(x.shape[0] - 1, 1))
        keep = sd > 1e-12 * max(sd[0], 1e-300) if sd.size else np.zeros(0, bool)
        comps = vt[keep].T / sd[keep]
        # fix the sign of every component so the fit is reproducible
        signs = np.sign(comps[np.argmax(np.abs(comps), axis=0), np.arange(comps.shape[1])])
        signs[signs == 0] = 1.0
        return cls(mean, scale, comps * signs)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return ((x - self.mean) / self.scale) @ self.components


def _top_singular(z: np.ndarray, k: int, oversample: int = 10, power_iters: int = 2):
    """Leading ``k`` singular values and right vectors of ``z``.

    Small problems use a full SVD. Large ones use a randomized range finder
    with a fixed seed and a few power iterations, which is exact up to
    round-off whenever ``z`` has rank at most ``k + oversample`` and accurate
    for the leading components otherwise.
    """
    k = min(k, *z.shape)
    width = k + oversample
    if min(z.shape) <= 2 * width:
        _, s, vt = np.linalg.svd(z, full_matrices=False)
        return s[:k], vt[:k]
    omega = np.random.default_rng(0).standard_normal((z.shape[1], width))
    y, _ = np.linalg.qr(z @ omega)
    for _ in range(power_iters):
        y, _ = np.linalg.qr(z @ (z.T @ y))
    _, s, vt = np.linalg.svd(y.T @ z, full_matrices=False)
    return s[:k], vt[:k]


def design(e: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Per-speaker feature vectors ``[windows, speakers, k_e*k_a + k_a]``."""
    outer = e[:, None, :, None] * a[:, :, None, :]
    w, n = a.shape[:2]
    return np.concatenate([outer.reshape(w, n, -1), a], axis=2)


def _softmax(s: np.ndarray) -> np.ndarray:
    s = s - s.max(axis=1, keepdims=True)
    p = np.exp(s)
    return p / p.sum(axis=1, keepdims=True)


def loss_and_grad(theta: np.ndarray, phi: np.ndarray, y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2/2 * |theta|^2`` and its gradient."""
    s = phi @ theta
    m = s.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(s - m).sum(axis=1))
    w = y.shape[0]
    loss = np.mean(lse - s[np.arange(w), y]) + 0.5 * l2 * theta @ theta
    p = _softmax(s)
    p[np.arange(w), y] -= 1.0
    grad = np.einsum("wn,wnd->d", p, phi) / w + l2 * theta
    return loss, grad


@dataclass
class Probe:
    proj_eeg: Projection
    proj_audio: Projection
    theta: np.ndarray
    config: ProbeConfig
    trace: List[float] = field(default_factory=list)

    @property
    def k(self):
        return self.proj_eeg.components.shape[1], self.proj_audio.components.shape[1]

    def features(self, batch: WindowBatch) -> np.ndarray:
        e = self.proj_eeg(batch.eeg)
        w, n, c = batch.audio.shape
        a = self.proj_audio(batch.audio.reshape(w * n, c)).reshape(w, n, -1)
        return design(e, a)

    def scores(self, batch: WindowBatch) -> np.ndarray:
        return self.features(batch) @ self.theta

    def predict(self, batch: WindowBatch) -> np.ndarray:
        s = self.scores(batch)
        ties = np.sum(s == s.max(axis=1, keepdims=True), axis=1) > 1
        if ties.any():
            log.info("%d windows with tied scores; choosing the lowest speaker index", int(ties.sum()))
        return np.argmax(s, axis=1)  # first maximum, i.e. lowest index on ties


def train_probe(batch: WindowBatch, config: ProbeConfig = ProbeConfig(), shuffle_labels: bool = False) -> Probe:
    """Fit the projections and the bilinear scorer by full-batch gradient descent.

    With ``shuffle_labels`` the window labels are permuted first (seeded), which
    gives the chance-level control.
    """
    if len(batch) == 0:
        raise ProbeError("no training windows")
    y = batch.labels.copy()
    if shuffle_labels:
        y = y[np.random.default_rng(config.seed).permutation(y.size)]
    if np.unique(y).size < 2:
        raise ProbeError("training windows all have the same label; need at least two classes")
    n_spk = batch.audio.shape[1]
    if y.max() >= n_spk:
        raise ProbeError("label outside the speaker range")
    pe = Projection.fit(batch.eeg, config.k_eeg)
    w, n, c = batch.audio.shape
    pa = Projection.fit(batch.audio.reshape(w * n, c), config.k_audio)
    probe = Probe(pe, pa, np.zeros(0), config)
    phi = probe.features(batch)
    # the softmax Hessian has norm <= 1/2, so the loss Hessian is bounded by
    # half the mean squared Frobenius norm of the per-window design matrices
    lip = 0.5 * np.mean(np.einsum("wnd,wnd->w", phi, phi)) + config.l2
    step = config.lr / lip
    theta = np.zeros(phi.shape[2])
    trace = []
    for _ in range(config.epochs):
        loss, grad = loss_and_grad(theta, phi, y, config.l2)
        trace.append(float(loss))
        theta = theta - step * grad
    trace.append(float(loss_and_grad(theta, phi, y, config.l2)[0]))
    probe.theta = theta
    probe.trace = trace
    return probe


@dataclass
class Evaluation:
    accuracy: float
    n_windows: int
    per_position: dict

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "n_windows": self.n_windows, "per_position": self.per_position}


def evaluate(probe: Probe, batch: WindowBatch) -> Evaluation:
    """Accuracy plus, per speaker position, the accuracy on windows attending it
    and how often it was predicted (to spot a left/right bias)."""
    if len(batch) == 0:
        raise ProbeError("no test windows")
    pred = probe.predict(batch)
    return score_predictions(pred, batch.labels, batch.audio.shape[1])


def score_predictions(pred: np.ndarray, labels: np.ndarray, n_speakers: int) -> Evaluation:
    correct = pred == labels
    per = {}
    for i in range(n_speakers):
        m = labels == i
        per[i] = {"n": int(m.sum()), "accuracy": float(correct[m].mean()) if m.any() else None,
                  "predicted_share": float(np.mean(pred == i))}
    return Evaluation(float(correct.mean()), int(labels.size), per)
