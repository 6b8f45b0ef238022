"""Long-range order on the torus: dispersion, regularizer and infrared bounds.

The torus has ``2m`` sites ``{1-m, ..., m}``; the coupling between sites at
distance ``d`` is ``(gamma - eps) N(d) + eps J(d)`` with ``N`` the
nearest-neighbour indicator and ``J`` the image-summed power law.  The Gibbs
weight is ``exp(sum_{j<k} K_{jk} s_j s_k)``.

Exact-enumeration helpers (two-point function, Gaussian domination) are
limited to ``2m <= ENUM_CAP`` sites.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from . import kernels
from .couplings import periodic_coupling, periodic_coupling_enclosure, periodic_couplings

ENUM_CAP = 20
QUAD_TOL = 1e-12


class EnumerationTooLarge(ValueError):
    pass


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TorusModel:
    m: int
    gamma: float = 1.0
    eps: float = 0.0
    alpha: float = 1.5

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    @property
    def n_sites(self) -> int:
        return 2 * self.m

    @property
    def sites(self) -> np.ndarray:
        return np.arange(1 - self.m, self.m + 1)

    @property
    def dual(self) -> np.ndarray:
        """``{0, pi/m, ..., (2m-1) pi/m}``."""
        return np.arange(2 * self.m) * math.pi / self.m

    def coupling_by_distance(self) -> np.ndarray:
        """``K[n]`` for ``n = 0 .. 2m-1`` (``K[0] = 0``)."""
        k = self.eps * periodic_couplings(self.m, self.alpha)
        k[1] += self.gamma - self.eps
        k[-1] += self.gamma - self.eps
        return k

    def coupling_matrix(self) -> np.ndarray:
        """``K_{jk}`` indexed by position in :attr:`sites`."""
        kd = self.coupling_by_distance()
        idx = np.arange(self.n_sites)
        return kd[(idx[:, None] - idx[None, :]) % self.n_sites]


# -- spectra --------------------------------------------------------------------

def _lambda_offsets(m: int) -> np.ndarray:
    """Nonzero ``n`` in ``Lambda``."""
    n = np.arange(1 - m, m + 1)
    return n[n != 0]


def spectral_R(p, model: TorusModel):
    """``R(p) = sum_{n in Lambda, n != 0} J_{0,n} (1 - cos(p n))``."""
    j = periodic_couplings(model.m, model.alpha)
    n = _lambda_offsets(model.m)
    jn = j[n % (2 * model.m)]
    p = np.asarray(p, dtype=float)
    out = np.sum(jn * (1.0 - np.cos(np.multiply.outer(p, n))), axis=-1)
    return float(out) if out.ndim == 0 else out


def dispersion_E(p, model: TorusModel):
    """``(gamma - eps)(1 - cos p) + (eps / 2) R(p)``."""
    p = np.asarray(p, dtype=float)
    out = (model.gamma - model.eps) * (1.0 - np.cos(p)) + 0.5 * model.eps * np.asarray(spectral_R(p, model))
    return float(out) if np.ndim(out) == 0 else out


def spectral_R_all(m: int, alpha: float) -> np.ndarray:
    """``R`` on the whole dual lattice at once, by FFT of the coupling vector."""
    j = periodic_couplings(m, alpha)
    return math.fsum(j) - np.real(np.fft.fft(j))


def regularizer_sum(m: int, alpha: float) -> float:
    """``(1/2m) sum_{p != 0} 1 / R(p)``."""
    if m < 2:
        raise ValueError("m must be >= 2")
    r = spectral_R_all(m, alpha)[1:]
    return math.fsum(1.0 / r) / (2 * m)


def regularizer_constant(alpha: float) -> float:
    """``c`` with ``R(p) >= c p**(alpha - 1)`` on ``[pi/m, pi]``.

    Keep only ``pi/(2p) <= n <= pi/p``: there ``1 - cos(pn) >= 1`` and
    ``J_{0,n} >= n**-alpha >= (p/pi)**alpha``, and the range holds at least
    ``pi/(4p)`` integers, so ``c = pi**(1 - alpha) / 4``.
    """
    return math.pi ** (1.0 - alpha) / 4.0


def regularizer_comparison(m: int, alpha: float) -> float:
    """Term-by-term upper bound ``(1/2m) sum_{p != 0} 1 / (c min(p, 2pi-p)**(alpha-1))``."""
    p = np.arange(1, 2 * m) * math.pi / m
    q = np.minimum(p, 2 * math.pi - p)
    return math.fsum(1.0 / (regularizer_constant(alpha) * q ** (alpha - 1.0))) / (2 * m)


def regularizer_table(alpha: float, m_values) -> list:
    """Rows ``(m, sum, successive difference)``."""
    rows, prev = [], None
    for m in m_values:
        v = regularizer_sum(int(m), alpha)
        rows.append((int(m), v, math.nan if prev is None else abs(v - prev)))
        prev = v
    return rows


# -- infrared bound -------------------------------------------------------------

def _dispersion_all(model: TorusModel) -> np.ndarray:
    p = model.dual
    return (model.gamma - model.eps) * (1.0 - np.cos(p)) + 0.5 * model.eps * spectral_R_all(model.m, model.alpha)


def infrared_sum(model: TorusModel) -> float:
    """``(1/2m) sum_{p != 0} 1 / (2 E(p))``; below 1 it forces an atom at p = 0."""
    if not model.gamma > model.eps > 0:
        raise ValueError("need gamma > eps > 0")
    e = _dispersion_all(model)[1:]
    return math.fsum(1.0 / (2.0 * e)) / model.n_sites


def lro_gamma_threshold(eps: float, alpha: float, m: int, rel_width: float = 1e-8) -> float:
    """Smallest gamma (to ``rel_width``) with ``infrared_sum < 1``: a sufficient bound, not a sharp one."""
    if not eps > 0:
        raise ValueError("eps must be positive")

    def ok(g):
        return infrared_sum(TorusModel(m, g, eps, alpha)) < 1.0

    lo = eps * (1.0 + 1e-12)
    if ok(lo):
        return lo
    hi = max(2.0 * eps, 1.0)
    while not ok(hi):
        hi *= 2.0
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# -- exact enumeration ----------------------------------------------------------

def _check_enum(model: TorusModel) -> None:
    if model.n_sites > ENUM_CAP:
        raise EnumerationTooLarge(f"{model.n_sites} sites exceed the enumeration cap {ENUM_CAP}")


def _spins(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)


def _log_weights(model: TorusModel) -> np.ndarray:
    """``-H`` per configuration (configuration bit i = site ``sites[i]`` down)."""
    return -kernels.pair_energies(model.coupling_matrix())


def two_point(model: TorusModel, p=None) -> np.ndarray:
    """``g_m(p) = <|sum_j e^{ipj} s_j|^2> / 2m`` by summing all configurations."""
    _check_enum(model)
    p = model.dual if p is None else np.atleast_1d(np.asarray(p, dtype=float))
    lw = _log_weights(model)
    wts = np.exp(lw - lw.max())
    wts /= math.fsum(wts)
    spins = _spins(model.n_sites)
    phase = np.exp(1j * np.multiply.outer(model.sites, p))
    amp = spins @ phase
    return (wts @ (np.abs(amp) ** 2)) / model.n_sites


def infrared_check(model: TorusModel) -> list:
    """Rows ``(p, R, E, 1/2E, g_m, ok)`` over the nonzero dual momenta."""
    p = model.dual[1:]
    g = two_point(model, p)
    r = spectral_R_all(model.m, model.alpha)[1:]
    e = _dispersion_all(model)[1:]
    bound = 1.0 / (2.0 * e)
    return [(float(pi), float(ri), float(ei), float(bi), float(gi), bool(gi <= bi * (1 + 1e-12)))
            for pi, ri, ei, bi, gi in zip(p, r, e, bound, g)]


def _laplacian(model: TorusModel) -> np.ndarray:
    k = model.coupling_matrix()
    return np.diag(k.sum(axis=1)) - k


def log_Z(model: TorusModel, h: Optional[np.ndarray] = None) -> float:
    """``log Z(h)`` with ``Z(h) = < exp(-1/2 sum_{j<k} K (s_j - s_k - h_j + h_k)^2) >_0``.

    Expanding the square, the exponent is
    ``-H(s) + (s, L h) - (h, L h)/2 - sum_{j<k} K_{jk}`` with ``L`` the
    coupling Laplacian, so Z(0) is the partition function of ``e^{-H}``.
    """
    _check_enum(model)
    n = model.n_sites
    h = np.zeros(n) if h is None else np.asarray(h, dtype=float)
    if h.shape != (n,):
        raise ValueError(f"h must have {n} entries")
    k = model.coupling_matrix()
    lap = _laplacian(model)
    lh = lap @ h
    expo = _log_weights(model) + _spins(n) @ lh
    top = expo.max()
    total = math.fsum(np.exp(expo - top))
    pair_sum = math.fsum(k[np.triu_indices(n, 1)])
    return math.log(total) + top - n * math.log(2.0) - 0.5 * float(h @ lh) - pair_sum


def gaussian_domination_check(model: TorusModel, h: np.ndarray, rtol: float = 1e-12) -> bool:
    """``Z(h) <= Z(0) (1 + rtol)``."""
    return log_Z(model, h) <= log_Z(model) + math.log1p(rtol)


def second_order_check(model: TorusModel, p: float, delta: float = 1e-3) -> dict:
    """Second derivative of ``Z(delta h)/Z(0)`` at 0 for ``h_j = cos(p j)``.

    Returns the central finite difference, the exact value
    ``4 E^2 <(s,h)^2> - 2 E (h,h)`` from the measured two-point data, and the
    infrared-bound implication ``<(s,h)^2> <= (h,h) / (2E)``.
    """
    h = np.cos(p * model.sites)
    z0 = log_Z(model)
    plus = math.exp(log_Z(model, delta * h) - z0)
    minus = math.exp(log_Z(model, -delta * h) - z0)
    fd = (plus - 2.0 + minus) / delta ** 2
    lw = _log_weights(model)
    wts = np.exp(lw - lw.max())
    wts /= math.fsum(wts)
    sh2 = float(wts @ (_spins(model.n_sites) @ h) ** 2)
    e = dispersion_E(p, model)
    hh = float(h @ h)
    exact = 4.0 * e * e * sh2 - 2.0 * e * hh
    return {"finite_difference": fd, "exact": exact, "sigma_h_sq": sh2, "bound": hh / (2.0 * e)}


# -- integral representation ----------------------------------------------------

def _quad(fn, alg_power: float) -> float:
    """``int_0^inf fn(x) x**alg_power dx``: algebraic weight on [0, 1], plain on [1, inf)."""
    head, e1 = integrate.quad(fn, 0.0, 1.0, weight="alg", wvar=(alg_power, 0.0),
                              epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    tail, e2 = integrate.quad(lambda x: fn(x) * x ** alg_power, 1.0, np.inf,
                              epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    if not (math.isfinite(head) and math.isfinite(tail)) or e1 + e2 > 1e-9 * max(1.0, abs(head + tail)):
        raise QuadratureError(f"quadrature error estimate {e1 + e2:.2e} too large")
    return head + tail


def moment_measure_check(n: int, alpha: float) -> tuple:
    """``(n**-alpha, int_0^1 lambda**n mu(dlambda))`` with ``lambda = e^{-x}``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = special.gamma(alpha)
    val = _quad(lambda x: math.exp(-n * x) / g, alpha - 1.0)
    return float(n) ** -alpha, val


def integral_rep_check(j: int, k: int, m: int, alpha: float) -> tuple:
    """``(J_{j,1-k}, quadrature of its integral representation)`` for ``1 <= j, k <= m``."""
    if not (1 <= j <= m and 1 <= k <= m):
        raise ValueError("need 1 <= j, k <= m")
    d = j + k - 1
    g = special.gamma(alpha)

    def fn(x):
        # [e^{-dx} + e^{-(2m-d)x}] / (1 - e^{-2mx}) carries a 1/x at 0; fold it into the weight
        if x == 0.0:
            return 2.0 / (2 * m) / g
        return (math.exp(-d * x) + math.exp(-(2 * m - d) * x)) * x / (-math.expm1(-2 * m * x)) / g

    return periodic_coupling(d, m, alpha), _quad(fn, alpha - 2.0)


def integral_rep_table(m: int, alpha: float) -> list:
    """Rows ``(j, k, direct, quadrature, |difference|)`` for all ``1 <= j, k <= m``."""
    rows = []
    for j in range(1, m + 1):
        for k in range(1, m + 1):
            direct, quad = integral_rep_check(j, k, m, alpha)
            rows.append((j, k, direct, quad, abs(direct - quad)))
    return rows


__all__ = [
    "ENUM_CAP",
    "EnumerationTooLarge",
    "QuadratureError",
    "TorusModel",
    "dispersion_E",
    "gaussian_domination_check",
    "infrared_check",
    "infrared_sum",
    "integral_rep_check",
    "integral_rep_table",
    "log_Z",
    "lro_gamma_threshold",
    "moment_measure_check",
    "periodic_coupling",
    "periodic_coupling_enclosure",
    "regularizer_comparison",
    "regularizer_constant",
    "regularizer_sum",
    "regularizer_table",
    "second_order_check",
    "spectral_R",
    "spectral_R_all",
    "two_point",
]
