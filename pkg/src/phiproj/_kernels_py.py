"""Pure numpy implementation of the elementwise kernels.

This is the fallback used when the compiled ``_ckernels`` extension is not
available. Both modules expose the same three functions with identical
semantics; ``phiproj.kernels`` picks one at import time.

Family kinds
------------
0  modified Kullback-Leibler (gamma = 0), nonnegative extension
1  Kullback-Leibler (gamma = 1), nonnegative extension
2  generic power divergence, nonnegative extension
3  chi-square on the whole real line (gamma = 2)
"""
import numpy as np

KIND_BURG = 0
KIND_KL = 1
KIND_POWER = 2
KIND_CHI2_FULL = 3

_CHUNK = 1 << 16


def _phi_at_zero(kind, gamma):
    if kind == KIND_BURG:
        return np.inf
    if kind == KIND_KL:
        return 1.0
    if kind == KIND_CHI2_FULL:
        return 0.5
    return 1.0 / gamma if gamma > 0 else np.inf


def phi_values(kind, gamma, x):
    """Elementwise divergence function with +inf outside its domain."""
    x = np.asarray(x, dtype=float)
    if kind == KIND_CHI2_FULL:
        return 0.5 * (x - 1.0) ** 2
    out = np.full(x.shape, np.inf)
    pos = x > 0
    xp = x[pos]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        # log through d = x - 1 near x = 1, so that small values do not cancel to 0
        d = xp - 1.0
        lx = np.log(xp)
        near = np.abs(d) < 0.5
        lx[near] = np.log1p(d[near])
        if kind == KIND_BURG:
            v = d - lx
        elif kind == KIND_KL:
            v = xp * lx - d
        else:
            v = (np.expm1(gamma * lx) - gamma * d) / (gamma * (gamma - 1.0))
    out[pos] = np.maximum(v, 0.0)
    out[x == 0] = _phi_at_zero(kind, gamma)
    return out


def conj_values(kind, gamma, t):
    """Conjugate, its first and second derivative, elementwise.

    Outside the closed domain all three are +inf. At a finite right endpoint
    the value is the closed (limit) value and both derivatives are +inf.
    """
    t = np.asarray(t, dtype=float)
    f = np.full(t.shape, np.inf)
    f1 = np.full(t.shape, np.inf)
    f2 = np.full(t.shape, np.inf)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if kind == KIND_CHI2_FULL:
            f = t + 0.5 * t * t
            f1 = 1.0 + t
            f2 = np.ones(t.shape)
        elif kind == KIND_KL:
            e = np.exp(t)
            f = np.expm1(t)
            f1 = e
            f2 = e.copy()
        elif kind == KIND_BURG:
            m = t < 1.0
            s = 1.0 - t[m]
            f[m] = -np.log1p(-t[m])
            f1[m] = 1.0 / s
            f2[m] = 1.0 / (s * s)
        else:
            gm1 = gamma - 1.0
            base = gm1 * t
            m = base > -1.0
            lb = np.log1p(base[m])
            x = np.exp(lb / gm1)
            f[m] = np.expm1(gamma * lb / gm1) / gamma
            f1[m] = x
            # x**(2 - gamma) = x / x**(gamma - 1) = x / (1 + base)
            f2[m] = x / (1.0 + base[m])
            edge = base <= -1.0
            if gamma > 1.0:
                f[edge] = -1.0 / gamma
                f1[edge] = 0.0
                f2[edge] = 0.0
            else:
                # right endpoint of the domain; finite closed value iff gamma < 0
                f[base == -1.0] = -1.0 / gamma if gamma < 0 else np.inf
    return f, f1, f2


def grid_shapes(n, basis, coeffs):
    """Coerce ``basis`` to ``(n, dim)`` and ``coeffs`` to ``(m, dim)``, allowing ``dim = 0``."""
    basis = np.asarray(basis, dtype=float)
    basis = basis.reshape(n, basis.size // n if n else 0)
    dim = basis.shape[1]
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2:
        coeffs = coeffs.reshape(-1, dim) if dim else coeffs.reshape(1, 0)
    if coeffs.shape[1] != dim:
        raise ValueError(f"coefficients have {coeffs.shape[1]} columns, basis has {dim}")
    return basis, coeffs


def grid_objective(kind, gamma, weights, base, basis, coeffs):
    """Weighted divergence sum at every point of a null-space grid.

    Row ``k`` of the result is ``sum_j weights[j] * phi(base[j] +
    basis[j, :] @ coeffs[k, :])``; +inf when any density leaves the domain.
    """
    weights = np.asarray(weights, dtype=float)
    base = np.asarray(base, dtype=float)
    basis, coeffs = grid_shapes(base.shape[0], basis, coeffs)
    out = np.empty(coeffs.shape[0])
    for start in range(0, coeffs.shape[0], _CHUNK):
        c = coeffs[start:start + _CHUNK]
        q = base[None, :] + c @ basis.T
        vals = phi_values(kind, gamma, q)
        with np.errstate(invalid="ignore"):
            s = vals @ weights
        s[np.isnan(s)] = np.inf
        out[start:start + _CHUNK] = s
    return out
