"""Central finite differences for gradient tests."""
import numpy as np

STEP = 1e-5


def rel_error(a, b) -> float:
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-8)
    return float(np.linalg.norm(a - b) / scale)


def fd_entries(f, arr, idx, h=STEP):
    """d f / d arr.flat[k] for k in ``idx``; ``arr`` is perturbed in place and restored."""
    flat = arr.reshape(-1)
    out = np.empty(len(idx))
    for n, k in enumerate(idx):
        old = flat[k]
        flat[k] = old + h
        up = f()
        flat[k] = old - h
        down = f()
        flat[k] = old
        out[n] = (up - down) / (2 * h)
    return out


def sample_indices(rng, size, limit):
    return np.arange(size) if size <= limit else rng.choice(size, limit, replace=False)
