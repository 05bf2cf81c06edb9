"""Monte-Carlo model of two equally good classifiers compared by 5x2 cv."""
import numpy as np


def null_diffs(rng, draws=10_000, n=100, dim=10, mu=0.25):
    """Difference scores of two equally good classifiers under 5x2 cv.

    Both are nearest-centroid classifiers, each seeing its own half of ``dim``
    features that carry the same class separation, so their expected accuracies
    are equal while their fold scores co-vary through the shared split.
    """
    y = rng.integers(0, 2, (draws, n))
    x = rng.standard_normal((draws, n, dim)) + np.where(y[..., None] == 1, mu, -mu)
    diffs = np.empty((draws, 5, 2))
    for i in range(5):
        perm = np.argsort(rng.random((draws, n)), axis=1)
        halves = perm[:, :n // 2], perm[:, n // 2:]
        for j in range(2):
            tr, te = halves[j], halves[1 - j]
            ytr, yte = np.take_along_axis(y, tr, 1), np.take_along_axis(y, te, 1)
            accs = []
            for cols in (slice(0, dim // 2), slice(dim // 2, dim)):
                a = np.take_along_axis(x[..., cols], tr[..., None], 1)
                b = np.take_along_axis(x[..., cols], te[..., None], 1)
                m1 = (a * (ytr[..., None] == 1)).sum(1) / np.maximum((ytr == 1).sum(1), 1)[:, None]
                m0 = (a * (ytr[..., None] == 0)).sum(1) / np.maximum((ytr == 0).sum(1), 1)[:, None]
                pred = ((b - m1[:, None]) ** 2).sum(-1) < ((b - m0[:, None]) ** 2).sum(-1)
                accs.append((pred == (yte == 1)).mean(1))
            diffs[:, i, j] = accs[0] - accs[1]
    return diffs
