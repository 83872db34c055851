"""Pure numpy version of the odd-harmonic series kernel (see ``_series.pyx``)."""
from __future__ import annotations

import numpy as np

TOL = 1e-17
_TERMS = 512
_POINTS = 2048


def sine_series(x, s, nterms, power=-1, use_cos=False):
    x = np.asarray(x, dtype=float)
    shape = x.shape
    xa = x.ravel()
    sa = np.broadcast_to(np.asarray(s, dtype=float), shape).ravel()
    out = np.zeros(xa.size)
    trig = np.cos if use_cos else np.sin
    for p0 in range(0, xa.size, _POINTS):
        xp, sp_ = xa[p0:p0 + _POINTS], sa[p0:p0 + _POINTS]
        acc = np.zeros(xp.size)
        for m0 in range(0, nterms, _TERMS):
            k = 2.0 * np.arange(m0, min(m0 + _TERMS, nterms)) + 1.0
            decay = np.exp(-np.outer(sp_, k * k)) * k**power
            acc += (decay * trig(np.outer(xp, k))).sum(axis=1)
            last = decay[:, -1]
            if np.all((sp_ > 0) & (k[-1] ** 2 * sp_ > power) & (last < TOL * (np.abs(acc) + 1e-300))):
                break
        out[p0:p0 + _POINTS] = acc
    return out.reshape(shape)
