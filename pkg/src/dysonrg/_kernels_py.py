"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels`` (Cython) must agree with them
bit for bit.  Selection between the two happens in :mod:`dysonrg.kernels`.
"""
import numpy as np


def _check_pow2(n: int) -> int:
    if n == 0 or n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    return n.bit_length() - 1


def wht_inplace(a: np.ndarray) -> None:
    """Unnormalized Walsh-Hadamard butterfly, in place.

    After the call ``a[x] = sum_m a_old[m] * (-1)**popcount(m & x)``.
    """
    n = _check_pow2(a.shape[0])
    h = 1
    for _ in range(n):
        v = a.reshape(-1, 2, h)
        x = v[:, 0, :].copy()
        y = v[:, 1, :]
        v[:, 0, :] += y
        np.subtract(x, y, out=v[:, 1, :])
        h *= 2


def wht_interval_inplace(lo: np.ndarray, hi: np.ndarray) -> None:
    """Butterfly on an interval array, each add/sub rounded outward."""
    n = _check_pow2(lo.shape[0])
    h = 1
    for _ in range(n):
        vl = lo.reshape(-1, 2, h)
        vh = hi.reshape(-1, 2, h)
        xl = vl[:, 0, :].copy()
        xh = vh[:, 0, :].copy()
        yl = vl[:, 1, :].copy()
        yh = vh[:, 1, :].copy()
        vl[:, 0, :] = np.nextafter(xl + yl, -np.inf)
        vh[:, 0, :] = np.nextafter(xh + yh, np.inf)
        vl[:, 1, :] = np.nextafter(xl - yh, -np.inf)
        vh[:, 1, :] = np.nextafter(xh - yl, np.inf)
        h *= 2


def pair_energies(coupling: np.ndarray) -> np.ndarray:
    """Return ``-sum_{j<k} K[j,k] s_j s_k`` for every configuration.

    Configuration index ``c`` has ``s_j = -1`` where bit ``j`` of ``c`` is set.
    Accumulation order matches the compiled kernel exactly.
    """
    coupling = np.asarray(coupling, dtype=float)
    n = coupling.shape[0]
    if n > 24:
        raise ValueError("too many sites for exact enumeration")
    total = 1 << n
    out = np.empty(total)
    chunk = 1 << min(n, 16)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        spins = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)
        energy = np.zeros(idx.shape[0])
        for j in range(n):
            row = np.zeros(idx.shape[0])
            for k in range(j + 1, n):
                row += coupling[j, k] * spins[:, k]
            energy -= spins[:, j] * row
        out[start:start + idx.shape[0]] = energy
    return out
