"""Central finite differences shared by the bracket and surface code."""
import numpy as np

_CBRT_EPS = np.finfo(float).eps ** (1.0 / 3.0)


def fd_step(x):
    return _CBRT_EPS * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0)


def fd_jacobian(fun, x, h=None):
    """Return d fun / d x with shape ``fun(x).shape + x.shape``."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else h
    f0 = np.asarray(fun(x), dtype=float)
    out = np.empty(f0.shape + (x.size,))
    flat = x.ravel()
    for i in range(x.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += h
        xm[i] -= h
        out[..., i] = (np.asarray(fun(xp.reshape(x.shape))) - np.asarray(fun(xm.reshape(x.shape)))) / (2 * h)
    return out.reshape(f0.shape + x.shape)
