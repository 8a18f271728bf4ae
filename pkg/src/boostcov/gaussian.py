"""Wick calculus for Gaussian moments with a complex covariance.

Moments only ever see the covariance through the matrix of pair values
``C[i, j] = D(f_i, f_j)``; no square root of the symbol is taken.
"""

from dataclasses import dataclass, field
from itertools import product
from math import prod

import numpy as np
from scipy.special import factorial2

from .kernels import gauss_legendre_panels
from .rp import TestFunction, TestFunctionFamily, gram_reflection, os_quantize, sobolev_half_inner
from .symbols import mu_delta, propagator_array

MAX_FIELDS = 8


def double_factorial(n):
    """(n)!! with (-1)!! = 1."""
    return 1 if n <= 0 else int(factorial2(n, exact=True))


@dataclass
class MomentRequest:
    """``covariance`` is either an explicit pair matrix or a callable taking the function list."""

    test_functions: list
    covariance: object
    pairing_mode: str = "pairing_sum"
    max_fields: int = MAX_FIELDS
    _matrix: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.pairing_mode not in ("pairing_sum", "recursion"):
            raise ValueError("pairing_mode must be 'pairing_sum' or 'recursion'")
        if len(self.test_functions) > self.max_fields:
            raise ValueError(f"at most {self.max_fields} fields are supported")

    def matrix(self):
        if self._matrix is None:
            cov = self.covariance
            m = cov(self.test_functions) if callable(cov) else np.asarray(cov, dtype=complex)
            n = len(self.test_functions)
            if m.shape != (n, n):
                raise ValueError("covariance matrix does not match the number of fields")
            self._matrix = m
        return self._matrix


def _pairings(idx):
    if not idx:
        yield []
        return
    first, rest = idx[0], idx[1:]
    for j in range(len(rest)):
        for tail in _pairings(rest[:j] + rest[j + 1:]):
            yield [(first, rest[j])] + tail


def pairing_sum(cov):
    """Sum over perfect pairings of products of pair values."""
    n = cov.shape[0]
    if n % 2:
        return 0j
    return complex(sum(prod(cov[i, j] for i, j in p) for p in _pairings(list(range(n)))))


def identical_moment(s2, n):
    """S_n for a single function from S_n = (n-1) S_2 S_(n-2)."""
    if n % 2:
        return 0j
    out = 1 + 0j
    for k in range(2, n + 1, 2):
        out *= (k - 1) * s2
    return out


def polarized_moment(cov):
    """Multilinear moment rebuilt from identical-argument moments by polarization."""
    n = cov.shape[0]
    if n % 2:
        return 0j
    total = 0j
    for eps in product((1.0, -1.0), repeat=n):
        e = np.array(eps)
        total += np.prod(e) * identical_moment(e @ cov @ e, n)
    return complex(total / (2**n * prod(range(1, n + 1))))


def wick_moment(req):
    n = len(req.test_functions)
    if n % 2:
        return 0j
    cov = req.matrix()
    cov = 0.5 * (cov + cov.T)  # moments only see the symmetric part
    if req.pairing_mode == "pairing_sum":
        return pairing_sum(cov)
    return polarized_moment(cov)


# -- covariance routes -----------------------------------------------------------

def _check_grid(functions):
    kinds = {type(f.space) for f in functions}
    if len(kinds) > 1:
        raise ValueError("test functions live on different grids")


def flat_covariance(boost, cutoff=None, width=0.5, order=16):
    """Bilinear pairing int f D_v g = (2 pi)^-2 int D(p) f~(-p) g~(p) dp, d = 2."""
    if boost.dim != 2:
        raise NotImplementedError("flat moments are implemented for d = 2")

    def cov(functions):
        _check_grid(functions)
        widths = [min(getattr(f.time, "width", 1.0), getattr(f.space, "width", 1.0)) for f in functions]
        freqs = [abs(getattr(f.space, "freq", 0.0)) + abs(getattr(f.time, "freq", 0.0)) for f in functions]
        c = cutoff or 9.0 / min(widths) + max(freqs)
        nodes, w = gauss_legendre_panels(-c, c, width, order)
        e, k = np.meshgrid(nodes, nodes, indexing="ij")
        weight = np.outer(w, w) / (2 * np.pi) ** 2
        mu, de = mu_delta(k, boost)
        d = propagator_array(e, mu, de) * weight
        plus = [f.time.ft(nodes)[:, None] * f.space.ft(nodes)[None, :] for f in functions]
        minus = [f.time.ft(-nodes)[:, None] * f.space.ft(-nodes)[None, :] for f in functions]
        return np.array([[np.sum(d * fm * gp) for gp in plus] for fm in minus])

    return cov


def reflected_covariance(boost, route="kernel", reflection="theta"):
    """Pair values <f_i, Theta D f_j> from the reflection-positivity Gram."""
    def cov(functions):
        fam = TestFunctionFamily(list(functions), "positive_time", None)
        return gram_reflection(fam, reflection, boost, route=route).matrix
    return cov


def thermal_covariance(spec):
    """Pair values <f_i, theta D^c f_j> from the closed-form cylinder kernel."""
    from .periodize import gram_reflection_compact

    def cov(functions):
        fam = TestFunctionFamily(list(functions), "positive_time", None)
        return gram_reflection_compact(fam, spec).matrix
    return cov


# -- quantized norms -----------------------------------------------------------

def quantized_norm(h, n, boost, time=None):
    """(2n-1)!! <h, h>^n for h = os-quantized vector of ``time (x) h``.

    ``h`` is a spatial profile; ``time`` a positive-time profile (a sharp
    slice by default).  Returns the closed form and the pairing-sum of the
    reflected covariance over 2n copies, built on the position-space kernel.
    """
    from .rp import Sharp

    if n < 0:
        raise ValueError("n must be non-negative")
    f = TestFunction(time if time is not None else Sharp(0.5), h)
    q = os_quantize(f, "+", boost)
    norm2 = sobolev_half_inner(q, q).real
    closed = double_factorial(2 * n - 1) * norm2**n
    if n == 0:
        return {"closed": 1.0, "moment": 1.0, "rel_dev": 0.0}
    c = reflected_covariance(boost, route="kernel")([f])[0, 0]
    moment = pairing_sum(np.full((2 * n, 2 * n), c))
    return {"closed": float(closed), "moment": complex(moment),
            "rel_dev": float(abs(moment - closed) / abs(closed))}


def thermal_quantized_norm(f, n, spec, sign="+"):
    """(2n-1)!! <f^, f^>^n with the doubled inner product vs the cylinder-kernel moment."""
    from .thermal import thermal_quantize

    q = thermal_quantize(f, spec, sign)
    closed = double_factorial(2 * n - 1) * q.inner(q).real ** n
    c = thermal_covariance(spec)([f])[0, 0]
    moment = pairing_sum(np.full((2 * n, 2 * n), c))
    return {"closed": float(closed), "moment": complex(moment),
            "rel_dev": float(abs(moment - closed) / abs(closed))}


# -- field-vector bound ------------------------------------------------------------

def field_vector_bound(f, boost, cutoff=12.0, n=128):
    """Realized ratio ||D_v^(1/2) f||^2 / ||C^(1/2) f||^2 on a Fourier lattice.

    ``f`` is either a separable TestFunction or an array of Fourier values on
    the ``n x n`` lattice of spacing ``2 cutoff / n`` (d = 2).
    """
    grid = np.linspace(-cutoff, cutoff, n, endpoint=False) + cutoff / n
    e, k = np.meshgrid(grid, grid, indexing="ij")
    if isinstance(f, TestFunction):
        vals = f.time.ft(grid)[:, None] * f.space.ft(grid)[None, :]
    else:
        vals = np.asarray(f)
    mu, de = mu_delta(k, boost)
    w = np.abs(vals) ** 2
    num = float(np.sum(np.abs(propagator_array(e, mu, de)) * w))
    den = float(np.sum(w / (e**2 + mu**2)))
    ratio = num / den
    bound = boost.cosh**5
    return {"ratio": ratio, "bound": bound, "passed": ratio <= bound * (1 + 1e-13)}


def random_fourier_function(rng, n=128, cutoff=12.0):
    grid = np.linspace(-cutoff, cutoff, n, endpoint=False) + cutoff / n
    e, k = np.meshgrid(grid, grid, indexing="ij")
    env = np.exp(-(e**2 + k**2) / (2 * rng.uniform(1, 16)))
    return env * (rng.normal(size=e.shape) + 1j * rng.normal(size=e.shape))
