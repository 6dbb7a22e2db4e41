# manifolds/harmonics.py
"""Real spherical harmonics and zonal (addition-theorem) sums on S^n.

Harmonics on S^2 come from the normalized associated-Legendre recurrence.
Higher even-dimensional spheres are split as x = (cos ψ · z, sin ψ · w) with
z ∈ S^{n-2} and w ∈ S^1; a degree-l harmonic is then

    cos^a ψ · sin^b ψ · P_k^{(α, β)}(cos 2ψ) · Y_a(z) · Y_b(w),   l = a + b + 2k,

with α = b, β = a + (n-3)/2 (Jacobi polynomials), normalized in closed form.
"""
import math
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import eval_jacobi, gammaln, roots_legendre

_TINY = 1e-300


def sphere_area(n: int) -> float:
    """Volume of the unit sphere S^n."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def harmonic_dimension(n: int, l: int) -> int:
    """Dimension of degree-l spherical harmonics on S^n."""
    if l == 0:
        return 1
    if n == 1:
        return 2
    return math.comb(l + n, n) - math.comb(l + n - 2, n)


def normalized_gegenbauer(lmax: int, n: int, t: np.ndarray) -> np.ndarray:
    """Ĉ_l(t) = C_l^{(λ)}(t) / C_l^{(λ)}(1), λ = (n-1)/2, for l = 0..lmax.

    Returns an array of shape (lmax + 1, *t.shape). For n = 2 these are the
    Legendre polynomials.
    """
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    lam = (n - 1) / 2.0
    out = np.empty((lmax + 1,) + t.shape)
    out[0] = 1.0
    if lmax >= 1:
        out[1] = t
    for l in range(2, lmax + 1):
        out[l] = (2.0 * (l + lam - 1.0) * t * out[l - 1] - (l - 1.0) * out[l - 2]) / (
            l + 2.0 * lam - 1.0
        )
    return out


def zonal_coefficients(n: int, lmax: int) -> np.ndarray:
    """dim_l / |S^n|, the addition-theorem weights on the unit sphere."""
    area = sphere_area(n)
    return np.array([harmonic_dimension(n, l) / area for l in range(lmax + 1)])


def zonal_harmonics(n: int, lmax: int, t: np.ndarray) -> np.ndarray:
    """Σ_m Y_lm(x)Y_lm(y) as a function of t = <x, y> on the unit S^n."""
    coeffs = zonal_coefficients(n, lmax)
    values = normalized_gegenbauer(lmax, n, t)
    return values * coeffs.reshape((-1,) + (1,) * np.ndim(t))


def normalized_associated_legendre(lmax: int, t: np.ndarray) -> Dict[Tuple[int, int], np.ndarray]:
    """p̄_l^m(t) with ∫_{-1}^{1} p̄_l^m(t)^2 dt = 1, for 0 ≤ m ≤ l ≤ lmax."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    s = np.sqrt(np.maximum(1.0 - t * t, 0.0))
    table: Dict[Tuple[int, int], np.ndarray] = {(0, 0): np.full_like(t, 1.0 / math.sqrt(2.0))}
    for m in range(1, lmax + 1):
        table[(m, m)] = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * table[(m - 1, m - 1)]
    for m in range(0, lmax):
        table[(m + 1, m)] = math.sqrt(2.0 * m + 3.0) * t * table[(m, m)]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            table[(l, m)] = a * (t * table[(l - 1, m)] - b * table[(l - 2, m)])
    return table


def s2_modes(l: int) -> List[Tuple[int, int]]:
    return [(l, m) for m in range(-l, l + 1)]


def s2_harmonics(lmax: int, x: np.ndarray) -> Dict[int, np.ndarray]:
    """Real orthonormal harmonics on the unit S^2, keyed by degree.

    ``x`` holds unit vectors of shape (npts, 3); each value has shape
    (npts, 2l + 1) with columns ordered m = -l..l.
    """
    x = np.asarray(x, dtype=float)
    t = x[:, 2]
    phi = np.arctan2(x[:, 1], x[:, 0])
    legendre = normalized_associated_legendre(lmax, t)
    inv_sqrt_pi = 1.0 / math.sqrt(math.pi)
    out: Dict[int, np.ndarray] = {}
    for l in range(lmax + 1):
        cols = []
        for m in range(-l, l + 1):
            p = legendre[(l, abs(m))]
            if m < 0:
                cols.append(p * np.sin(-m * phi) * inv_sqrt_pi)
            elif m == 0:
                cols.append(p / math.sqrt(2.0 * math.pi))
            else:
                cols.append(p * np.cos(m * phi) * inv_sqrt_pi)
        out[l] = np.stack(cols, axis=1)
    return out


def circle_harmonics(bmax: int, w: np.ndarray) -> Dict[int, np.ndarray]:
    """Real orthonormal Fourier modes on the unit circle S^1 ⊂ R^2."""
    theta = np.arctan2(w[:, 1], w[:, 0])
    out = {0: np.full((w.shape[0], 1), 1.0 / math.sqrt(2.0 * math.pi))}
    for b in range(1, bmax + 1):
        out[b] = np.stack([np.cos(b * theta), np.sin(b * theta)], axis=1) / math.sqrt(math.pi)
    return out


@lru_cache(maxsize=None)
def _split_terms(n: int, l: int) -> Tuple[Tuple[int, int, int], ...]:
    return tuple(
        (a, b, (l - a - b) // 2)
        for a in range(l + 1)
        for b in range(l + 1 - a)
        if (l - a - b) % 2 == 0
    )


def _jacobi_norm(n: int, a: int, b: int, k: int) -> float:
    """L^2 norm of cos^a ψ sin^b ψ P_k^{(α,β)}(cos 2ψ) against cos^{n-2}ψ sin ψ dψ."""
    alpha = float(b)
    beta = a + (n - 3) / 2.0
    log_h = (
        gammaln(k + alpha + 1.0)
        + gammaln(k + beta + 1.0)
        - gammaln(k + alpha + beta + 1.0)
        - gammaln(k + 1.0)
    )
    return math.sqrt(0.5 * math.exp(log_h) / (2.0 * k + alpha + beta + 1.0))


def sphere_modes(n: int, l: int) -> List[tuple]:
    """Basis descriptors of degree-l harmonics on S^n, in evaluation order."""
    if n == 2:
        return s2_modes(l)
    modes = []
    for a, b, k in _split_terms(n, l):
        inner = sphere_modes(n - 2, a)
        outer = [0] if b == 0 else [b, -b]
        for mz in inner:
            for mw in outer:
                modes.append((l, a, b, k, mz, mw))
    return modes


def sphere_harmonics(n: int, lmax: int, x: np.ndarray) -> Dict[int, np.ndarray]:
    """Real orthonormal harmonics on the unit S^n (n even), keyed by degree.

    ``x`` has shape (npts, n + 1); columns follow :func:`sphere_modes`.
    """
    x = np.asarray(x, dtype=float)
    if n == 2:
        return s2_harmonics(lmax, x)
    head, tail = x[:, : n - 1], x[:, n - 1 :]
    cos_psi = np.linalg.norm(head, axis=1)
    sin_psi = np.linalg.norm(tail, axis=1)
    z = head / np.maximum(cos_psi, _TINY)[:, None]
    z[cos_psi < 1e-14] = np.eye(n - 1)[-1]
    w = tail / np.maximum(sin_psi, _TINY)[:, None]
    w[sin_psi < 1e-14] = np.array([1.0, 0.0])
    inner = sphere_harmonics(n - 2, lmax, z)
    circle = circle_harmonics(lmax, w)
    cos_2psi = cos_psi**2 - sin_psi**2

    out: Dict[int, np.ndarray] = {}
    for l in range(lmax + 1):
        cols = []
        for a, b, k in _split_terms(n, l):
            radial = (
                cos_psi**a
                * sin_psi**b
                * eval_jacobi(k, float(b), a + (n - 3) / 2.0, cos_2psi)
                / _jacobi_norm(n, a, b, k)
            )
            for i in range(inner[a].shape[1]):
                for j in range(circle[b].shape[1]):
                    cols.append(radial * inner[a][:, i] * circle[b][:, j])
        out[l] = np.stack(cols, axis=1)
    return out


def gauss_legendre(count: int, lo: float = -1.0, hi: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(count)
    half = 0.5 * (hi - lo)
    return lo + half * (nodes + 1.0), half * weights


def sphere_quadrature(n: int, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on the unit S^n, exact for polynomials of degree ≤ 2·degree."""
    if n == 2:
        t, wt = gauss_legendre(degree + 1)
        n_phi = 2 * degree + 1
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        s = np.sqrt(np.maximum(1.0 - t * t, 0.0))
        pts = np.stack(
            [
                np.outer(s, np.cos(phi)).ravel(),
                np.outer(s, np.sin(phi)).ravel(),
                np.repeat(t, n_phi),
            ],
            axis=1,
        )
        weights = np.repeat(wt, n_phi) * (2.0 * math.pi / n_phi)
        return pts, weights

    inner_pts, inner_w = sphere_quadrature(n - 2, degree)
    s, ws = gauss_legendre(degree + n // 2, 0.0, 1.0)
    ws = ws * s ** (n - 2)
    n_w = 2 * degree + 1
    theta = 2.0 * math.pi * np.arange(n_w) / n_w
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)

    si, zi, ci = np.meshgrid(
        np.arange(s.size), np.arange(inner_w.size), np.arange(n_w), indexing="ij"
    )
    si, zi, ci = si.ravel(), zi.ravel(), ci.ravel()
    radial_cos = s[si][:, None]
    radial_sin = np.sqrt(np.maximum(1.0 - s[si] ** 2, 0.0))[:, None]
    pts = np.concatenate([radial_cos * inner_pts[zi], radial_sin * circle[ci]], axis=1)
    weights = ws[si] * inner_w[zi] * (2.0 * math.pi / n_w)
    return pts, weights
