import numpy as np
import pytest

from aadscat.evaluation import ProbeConfig, ProbeError, WindowBatch, evaluate, train_probe
from aadscat.evaluation.probe import Probe, design, loss_and_grad, score_predictions


def batch_from(e, a, y):
    return WindowBatch(e, a, np.asarray(y, dtype=np.int64), [("t", float(i)) for i in range(len(y))])


def separable(n=400, extra=6, seed=0, noise=0.05):
    rng = np.random.default_rng(seed)
    s = rng.choice([-1.0, 1.0], n)
    y = rng.integers(0, 2, n)
    e = np.c_[s + noise * rng.standard_normal(n), rng.standard_normal((n, extra))]
    a = rng.standard_normal((n, 2, 1 + extra))
    a[np.arange(n), y, 0] = s
    a[np.arange(n), 1 - y, 0] = -s
    return batch_from(e, a, y)


def random_batch(n, seed, dim=10):
    rng = np.random.default_rng(seed)
    return batch_from(rng.standard_normal((n, dim)), rng.standard_normal((n, 2, dim)), rng.integers(0, 2, n))


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    phi = rng.standard_normal((50, 2, 7))
    y = rng.integers(0, 2, 50)
    theta = rng.standard_normal(7)
    _, g = loss_and_grad(theta, phi, y, 1e-2)
    h = 1e-6
    fd = np.array([(loss_and_grad(theta + h * d, phi, y, 1e-2)[0] - loss_and_grad(theta - h * d, phi, y, 1e-2)[0])
                   / (2 * h) for d in np.eye(7)])
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5


def test_loss_matches_direct_cross_entropy():
    rng = np.random.default_rng(1)
    phi = rng.standard_normal((20, 3, 4))
    y = rng.integers(0, 3, 20)
    theta = rng.standard_normal(4)
    s = phi @ theta
    p = np.exp(s) / np.exp(s).sum(1, keepdims=True)
    want = -np.mean(np.log(p[np.arange(20), y])) + 0.5 * 0.1 * theta @ theta
    assert np.isclose(loss_and_grad(theta, phi, y, 0.1)[0], want, rtol=1e-12)


def test_design_is_outer_product_plus_audio():
    rng = np.random.default_rng(2)
    e, a = rng.standard_normal((3, 2)), rng.standard_normal((3, 2, 4))
    d = design(e, a)
    assert d.shape == (3, 2, 12)
    assert np.allclose(d[1, 0, :8], np.outer(e[1], a[1, 0]).ravel())
    assert np.allclose(d[1, 0, 8:], a[1, 0])


def test_loss_is_non_increasing():
    p = train_probe(random_batch(300, 3), ProbeConfig(k_eeg=4, k_audio=4, epochs=100))
    assert np.all(np.diff(p.trace) <= 1e-6)
    assert len(p.trace) == 101


def test_separable_toy_reaches_full_training_accuracy():
    b = separable()
    p = train_probe(b, ProbeConfig(k_eeg=7, k_audio=7, epochs=300, l2=0.0))
    assert evaluate(p, b).accuracy == 1.0


def test_training_is_deterministic():
    b = random_batch(200, 4)
    cfg = ProbeConfig(k_eeg=4, k_audio=4, epochs=20)
    assert np.array_equal(train_probe(b, cfg).theta, train_probe(b, cfg).theta)


def test_speaker_exchangeability():
    b = separable(seed=5)
    p = train_probe(b, ProbeConfig(k_eeg=4, k_audio=4, epochs=50))
    swapped = batch_from(b.eeg, b.audio[:, ::-1].copy(), 1 - b.labels)
    assert np.array_equal(p.scores(swapped), p.scores(b)[:, ::-1])
    assert evaluate(p, swapped).accuracy == evaluate(p, b).accuracy


def test_shuffled_labels_give_chance_on_held_out_windows():
    train = separable(n=2000, seed=6)
    test = separable(n=2000, seed=7)
    p = train_probe(train, ProbeConfig(k_eeg=7, k_audio=7, epochs=200), shuffle_labels=True)
    assert abs(evaluate(p, test).accuracy - 0.5) <= 0.05
    real = train_probe(train, ProbeConfig(k_eeg=7, k_audio=7, epochs=200))
    assert evaluate(real, test).accuracy > 0.95


def test_single_class_and_empty_sets_rejected():
    b = random_batch(20, 8)
    one = batch_from(b.eeg, b.audio, np.zeros(20))
    with pytest.raises(ProbeError, match="same label"):
        train_probe(one)
    with pytest.raises(ProbeError):
        train_probe(b.subset(np.arange(0)))
    p = train_probe(b, ProbeConfig(k_eeg=2, k_audio=2, epochs=5))
    with pytest.raises(ProbeError):
        evaluate(p, b.subset(np.arange(0)))


def test_constant_predictor_and_perfect_predictor():
    labels = np.array([0, 1] * 50)
    assert score_predictions(np.zeros(100, int), labels, 2).accuracy == 0.5
    ev = score_predictions(labels.copy(), labels, 2)
    assert ev.accuracy == 1.0 and ev.per_position[0]["predicted_share"] == 0.5


def test_ties_go_to_lowest_index():
    b = random_batch(30, 9)
    p = train_probe(b, ProbeConfig(k_eeg=2, k_audio=2, epochs=1))
    tied = Probe(p.proj_eeg, p.proj_audio, np.zeros_like(p.theta), p.config)
    assert np.all(tied.predict(b) == 0)
    assert evaluate(tied, b).accuracy == np.mean(b.labels == 0)
