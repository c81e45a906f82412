"""Pure-numpy versions of the compiled loops in ``_core.pyx``.

Both implementations perform the same floating-point operations in the same
order, so herding sequences agree exactly between backends.
"""

import numpy as np


def gaussian_gram(a, b, lengthscales, signal_variance):
    acc = np.zeros((a.shape[0], b.shape[0]))
    for d in range(a.shape[1]):
        t = (a[:, d, None] - b[None, :, d]) / lengthscales[d]
        acc += t * t
    return signal_variance * np.exp(-0.5 * acc)


def herd(mu, gram, n_samples, keep_trace):
    chosen = np.empty(n_samples, dtype=np.intp)
    acc = np.zeros(mu.shape[0])
    trace = np.empty((n_samples if keep_trace else 0, mu.shape[0]))
    for s in range(n_samples):
        best = int(np.argmax(mu - acc / float(s + 1)))
        chosen[s] = best
        acc += gram[:, best]
        if keep_trace:
            trace[s] = acc
    return chosen, trace
