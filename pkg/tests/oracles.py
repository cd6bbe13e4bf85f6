"""Independent computations to check against, and random test inputs."""

import numpy as np

from cellchain.euler_ops import InvalidDescriptorError, MakeRejected, derive_descriptor, make


def dense_matmul(a, b):
    """Triple-loop product, independent of numpy/scipy matmul."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n, m = a.shape
    m2, r = b.shape
    assert m == m2
    out = np.zeros((n, r))
    for i in range(n):
        for j in range(r):
            s = 0.0
            for l in range(m):
                s += a[i, l] * b[l, j]
            out[i, j] = s
    return out


def dense_measured_incidence(k, p):
    """M_p rebuilt entry by entry from the incidence and the sizes."""
    b = k.B(p).to_dense()
    out = np.zeros_like(b)
    for i in range(b.shape[0]):
        for j in range(b.shape[1]):
            out[i, j] = k.sizes[p][i] / k.sizes[p + 1][j] * b[i, j]
    return out


def random_descriptor(k, rng, attempts=200):
    """A random accepted make descriptor for ``k`` (or None if none found)."""
    for _ in range(attempts):
        p = int(rng.integers(0, k.dim))
        if k.counts[p + 1] == 0:
            continue
        target = int(rng.integers(1, k.counts[p + 1] + 1))
        faces = sorted(i + 1 for i in k.faces(p + 1, target - 1))
        if len(faces) < 2:
            continue
        n_keep = int(rng.integers(1, len(faces)))
        keep = rng.choice(faces, size=n_keep, replace=False).tolist()
        t = float(rng.uniform(0.1, 0.9))
        size = float(rng.uniform(0.5, 2.0))
        try:
            desc = derive_descriptor(k, p, target, keep, t=t, new_cell_size=size)
            return desc, make(k, desc)
        except (InvalidDescriptorError, MakeRejected):
            continue
    return None
