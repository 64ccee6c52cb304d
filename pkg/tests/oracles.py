"""Independent oracles used by the tests.

Everything here deliberately avoids the library's production code paths:
coefficients come from quadrature or direct summation, operators are built
by looping over basis vectors, and matrix exponentials use a truncated
Taylor series with scaling and squaring.
"""

import numpy as np
from scipy.integrate import quad


def square_wave_coeff_quadrature(k: int) -> complex:
    """(1/2pi) integral of sgn(x) e^{-ikx} over (-pi, pi), piecewise."""
    re_neg = quad(lambda x: -np.cos(-k * x), -np.pi, 0.0, limit=200)[0]
    im_neg = quad(lambda x: -np.sin(-k * x), -np.pi, 0.0, limit=200)[0]
    re_pos = quad(lambda x: np.cos(-k * x), 0.0, np.pi, limit=200)[0]
    im_pos = quad(lambda x: np.sin(-k * x), 0.0, np.pi, limit=200)[0]
    return ((re_neg + re_pos) + 1j * (im_neg + im_pos)) / (2.0 * np.pi)


def dft_analyze(samples: np.ndarray, xs: np.ndarray, ks) -> np.ndarray:
    """Recover coefficients by direct discrete analysis on a uniform grid."""
    out = []
    for k in ks:
        out.append(np.mean(samples * np.exp(-1j * k * xs)))
    return np.array(out)


def dft_synthesize(coeffs: np.ndarray, ks, xs: np.ndarray) -> np.ndarray:
    vals = np.zeros(len(xs), dtype=np.complex128)
    for c, k in zip(coeffs, ks):
        vals += c * np.exp(1j * k * xs)
    return vals


def bo_lax_by_convolution(u0_coeff, n: int, M: int) -> np.ndarray:
    """BO Lax matrix built column-by-column from the convolution rule.

    u0_coeff(k) must return the two-sided coefficient at frequency k.
    """
    L = np.zeros((M, M), dtype=np.complex128)
    for l in range(M):
        # action on the basis vector e_l
        col = np.zeros(M, dtype=np.complex128)
        col[l] = l  # diagonal derivative part, never truncated
        if l < n:
            for j in range(n):
                col[j] -= u0_coeff(j - l)
        L[:, l] = col
    return L


def ccm_gram_block(u0_coeff, n: int) -> np.ndarray:
    """The CCM potential block G[j,l] = sum_m u(j-m) conj(u(l-m))."""
    G = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        for l in range(n):
            acc = 0.0 + 0.0j
            for m in range(n):
                a = u0_coeff(j - m) if j - m >= 0 else 0.0
                b = u0_coeff(l - m) if l - m >= 0 else 0.0
                acc += a * np.conj(b)
            G[j, l] = acc
    return G


def ccm_lax_by_gram(u0_coeff, n: int, M: int, sign: str) -> np.ndarray:
    L = np.diag(np.arange(M, dtype=np.complex128))
    if n > 0:
        G = ccm_gram_block(u0_coeff, n)
        if sign == "focusing":
            L[:n, :n] -= G
        else:
            L[:n, :n] += G
    return L


def taylor_expm(A: np.ndarray, terms: int = 60) -> np.ndarray:
    """exp(A) via a 60-term Taylor series with scaling and squaring."""
    A = np.asarray(A, dtype=np.complex128)
    norm = np.linalg.norm(A, ord=np.inf)
    s = max(0, int(np.ceil(np.log2(max(norm, 1e-300)))) + 1) if norm > 0.5 else 0
    B = A / (2.0**s)
    X = np.eye(A.shape[0], dtype=np.complex128)
    term = np.eye(A.shape[0], dtype=np.complex128)
    for j in range(1, terms + 1):
        term = term @ B / j
        X = X + term
    for _ in range(s):
        X = X @ X
    return X


def scheme_by_brute_force(u0_coeff, hardy_seed, schedule_values, equation, t):
    """End-to-end scheme evaluation rebuilding every operator from scratch.

    hardy_seed: full Hardy coefficients of the data (length >= K not
    required; missing modes are zero).  Returns uhat(t, k) for 0 <= k < K.
    """
    K = len(schedule_values)
    M = max(int(max(schedule_values)), 1)
    alpha = 1 if equation == "BO" else -1
    sign = None if equation == "BO" else equation.split("-", 1)[1]

    v = np.zeros(M, dtype=np.complex128)
    n0 = int(schedule_values[0])
    for k in range(min(n0, len(hardy_seed), M)):
        v[k] = hardy_seed[k]
    coeffs = np.zeros(K, dtype=np.complex128)
    coeffs[0] = v[0]
    for k in range(1, K):
        v = np.concatenate([v[1:], [0.0]])
        n = int(schedule_values[k])
        if equation == "BO":
            L = bo_lax_by_convolution(u0_coeff, n, M)
        else:
            L = ccm_lax_by_gram(u0_coeff, n, M, sign)
        U = taylor_expm(1j * alpha * t * (np.eye(M) + 2.0 * L))
        v = U @ v
        coeffs[k] = v[0]
    return coeffs
