"""Configuration-space kernels of the boosted covariance.

With the symbol ``1/((E + i delta)^2 + mu^2)`` the kernel on R^d is

    D(t, x) = (2 pi)^-(d-1) int dk exp(-|t| mu + t delta + i k.x) / (2 mu),

i.e. the energy integral is done in closed form and only the spatial
momentum integral is left to quadrature.  In d = 2 this is a composite
Gauss-Legendre rule on ``[-K, K]``; in d = 3, 4 the component along the
boost direction gets the same rule and the transverse momenta a radial
rule (cosine transform in one transverse dimension, ``J0`` in two).

The energy-momentum Fourier convention is
``D(t, x) = (2 pi)^-d int dE dk exp(i(E t + k.x)) D~(E, k)``.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.special import j0

from .symbols import mu_delta, propagator_array

GEOMETRIES = ("flat", "time_circle", "space_torus", "full_torus")
KINDS = ("D", "thetaD", "Dtheta", "piD", "Dpi")


@dataclass
class QuadratureSpec:
    rule: str = "gauss-legendre"
    nodes: int = 16  # per panel
    cutoff: float = None
    tol: float = 1e-13

    def __post_init__(self):
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValueError("momentum cutoff must be positive")
        if self.rule != "gauss-legendre":
            raise ValueError(f"unknown quadrature rule {self.rule!r}")


@dataclass
class GridSpec:
    time_points: np.ndarray
    space_points: np.ndarray
    geometry: str = "flat"
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    beta: float = None
    lengths: tuple = None

    def __post_init__(self):
        self.time_points = np.atleast_1d(np.asarray(self.time_points, dtype=float))
        pts = np.asarray(self.space_points, dtype=float)
        self.space_points = pts[:, None] if pts.ndim == 1 else pts
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if np.any(np.diff(self.time_points) <= 0):
            raise ValueError("time points must be strictly increasing")
        if self.space_points.shape[1] == 1 and np.any(np.diff(self.space_points[:, 0]) <= 0):
            raise ValueError("space points must be strictly increasing")
        if self.geometry in ("time_circle", "full_torus"):
            if self.beta is None or self.beta <= 0:
                raise ValueError("circle geometry needs beta > 0")
            if np.any(self.time_points < 0) or np.any(self.time_points >= self.beta):
                raise ValueError("time points must lie in [0, beta)")
        if self.geometry in ("space_torus", "full_torus"):
            if not self.lengths or min(self.lengths) <= 0:
                raise ValueError("torus geometry needs positive lengths")


@dataclass
class SampledKernel:
    grid: GridSpec
    values: np.ndarray
    boost: object
    kind: str = "D"
    meta: dict = field(default_factory=dict)


def gauss_legendre_panels(a, b, width, order=16):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    npan = max(1, int(np.ceil((b - a) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _panel_width(max_dist):
    # 16-point panels resolve ~8 rad of phase comfortably
    return min(2.0, 8.0 / (1.0 + max_dist))


def temporal_cutoff(t_min, boost, tol=1e-13):
    """Momentum cutoff with exp(-t_min (mu - |delta|)) below ``tol``."""
    if t_min <= 0:
        return None
    return np.log(1.0 / tol) / (t_min * (1.0 - boost.speed)) + boost.mass


def momentum_rule(boost, cutoff, max_dist, order=16):
    """Nodes (N, d-1) in the frame (n, transverse) and weights incl. (2 pi)^-(d-1)."""
    width = _panel_width(max_dist)
    kpar, wpar = gauss_legendre_panels(-cutoff, cutoff, width, order)
    nt = boost.dim - 2
    if nt == 0:
        return kpar[:, None], wpar / (2 * np.pi), None
    rho, wrho = gauss_legendre_panels(0.0, cutoff, width, order)
    kk = np.stack(np.meshgrid(kpar, rho, indexing="ij"), axis=-1).reshape(-1, 2)
    ww = np.outer(wpar, wrho).ravel() / (2 * np.pi) ** (boost.dim - 1)
    return kk, ww, nt


def _frame(boost, points):
    """Split spatial points into components along n and transverse radius."""
    n = boost.direction
    par = points @ n
    perp = points - par[:, None] * n[None, :]
    return par, np.linalg.norm(perp, axis=1)


def _transverse_factor(nt, rho, r):
    if nt == 1:
        return 2.0 * np.cos(np.outer(r, rho))
    return 2.0 * np.pi * rho[None, :] * j0(np.outer(r, rho))


def _mode_sum(time_factor, kk, weights, nt, points, boost):
    """sum_k w_k time_factor[i, k] exp(i k.x_j) for the frame quadrature."""
    par, r = _frame(boost, points)
    phase = np.exp(1j * np.outer(par, kk[:, 0]))
    if nt is not None:
        phase = phase * _transverse_factor(nt, kk[:, 1], r)
    return (time_factor * weights[None, :]) @ phase.T


def _rule_for(grid, boost, t_min):
    q = grid.quadrature
    auto = temporal_cutoff(t_min, boost, q.tol)
    cutoff = q.cutoff if q.cutoff is not None else auto
    if cutoff is None:
        raise ValueError("coincident times need an explicit momentum cutoff (kernel is UV divergent)")
    tail = float(np.exp(-t_min * cutoff * (1.0 - boost.speed))) if t_min > 0 else 1.0
    max_dist = float(np.max(np.linalg.norm(grid.space_points, axis=1), initial=0.0))
    kk, ww, nt = momentum_rule(boost, cutoff, max_dist, q.nodes)
    return kk, ww, nt, {"cutoff": float(cutoff), "tail_estimate": tail, "cutoff_ok": tail <= max(q.tol, 1e-8)}


def _world_k(kk, boost):
    """Convert frame momenta (k_par, rho) to (mu, delta); delta only sees k_par."""
    kpar = kk[:, 0]
    ksq = kpar**2 + (kk[:, 1] ** 2 if kk.shape[1] > 1 else 0.0)
    mu = np.sqrt(ksq + boost.mass**2)
    return mu, kpar * boost.speed


def kernel_continuum(grid, boost):
    """Sample D on (time difference) x (space difference) points of a flat grid."""
    if grid.geometry != "flat":
        raise ValueError("kernel_continuum needs a flat grid")
    t = grid.time_points
    if grid.space_points.shape[1] != boost.dim - 1:
        raise ValueError("space points have the wrong dimension")
    t_min = float(np.min(np.abs(t)))
    kk, ww, nt, meta = _rule_for(grid, boost, t_min)
    mu, delta = _world_k(kk, boost)
    tf = np.exp(-np.abs(t)[:, None] * mu + t[:, None] * delta) / (2 * mu)
    values = _mode_sum(tf, kk, ww, nt, grid.space_points, boost)
    meta["nodes"] = int(len(ww))
    return SampledKernel(grid, values, boost, "D", meta)


def mode_time_profile(t, kvec, boost):
    """Exact per-mode time dependence exp(-|t| mu + t delta)/(2 mu)."""
    mu, delta = mu_delta(kvec, boost)
    t = np.asarray(t, dtype=float)
    return np.exp(-np.abs(t)[..., None] * mu + t[..., None] * delta) / (2 * mu)


def reflected_kernels(grid, boost, kind):
    """Reflected kernels on a half-space grid.

    thetaD, Dtheta: ``time_points`` are t + t' >= 0, ``space_points`` are x - x'.
    piD, Dpi: ``time_points`` are t - t', the first space column is
    x.n + x'.n >= 0 and any further columns are transverse differences.
    """
    if kind not in KINDS[1:]:
        raise ValueError(f"unknown reflected kind {kind!r}")
    if kind in ("thetaD", "Dtheta"):
        s = grid.time_points
        if np.any(s < 0):
            raise ValueError("time sums must be non-negative (positive-time half-space)")
        if kind == "Dtheta":
            kern = kernel_continuum(GridSpec(s, grid.space_points, quadrature=grid.quadrature), boost)
            values = kern.values
        else:
            kern = kernel_continuum(GridSpec(-s[::-1], grid.space_points, quadrature=grid.quadrature), boost)
            values = kern.values[::-1]
        return SampledKernel(grid, values, boost, kind, kern.meta)
    return _spatial_reflected(grid, boost, kind)


def _spatial_reflected(grid, boost, kind):
    if boost.dim > 3:
        raise NotImplementedError("spatial reflected kernels are implemented for d = 2, 3")
    pts = grid.space_points
    xi = pts[:, 0]
    if np.any(xi < 0):
        raise ValueError("x.n sums must be non-negative (positive-x half-space)")
    q = grid.quadrature
    th, ch = boost.tanh, boost.cosh
    xi_min = float(np.min(xi))
    rate = np.sqrt((1 - th) / (1 + th))
    cutoff = q.cutoff if q.cutoff is not None else (
        np.log(1.0 / q.tol) / (xi_min * rate) + boost.mass if xi_min > 0 else None)
    if cutoff is None:
        raise ValueError("boundary points need an explicit cutoff")
    tau = grid.time_points
    max_dist = float(max(np.max(np.abs(tau)), np.max(np.abs(pts[:, 1:]), initial=0.0)))
    energy, we = gauss_legendre_panels(-cutoff, cutoff, _panel_width(max_dist), q.nodes)
    if boost.dim == 2:
        kperp = np.zeros((len(energy), 0))
        ee, ww = energy, we / (2 * np.pi)
    else:
        ee, kp = [a.ravel() for a in np.meshgrid(energy, energy, indexing="ij")]
        ww = np.outer(we, we).ravel() / (2 * np.pi) ** 2
        kperp = kp[:, None]
    nu = np.sqrt(ee**2 + (np.sum(kperp**2, axis=1) + boost.mass**2) / ch**2)
    kplus = (nu - ee * th) * ch**2
    kminus = (-nu - ee * th) * ch**2
    decay = np.exp(np.outer(xi, kminus)) if kind == "piD" else np.exp(-np.outer(xi, kplus))
    amp = decay * (ww / (2 * nu))[None, :]  # (n_xi, N)
    phase_t = np.exp(1j * np.outer(tau, ee))  # (n_tau, N)
    if boost.dim == 2:
        values = phase_t @ amp.T
    else:
        # pair each xi with its own transverse offset
        phase_x = np.exp(1j * np.outer(pts[:, 1], kperp[:, 0]))
        values = phase_t @ (amp * phase_x).T
    meta = {"cutoff": float(cutoff), "tail_estimate": float(np.exp(-xi_min * cutoff * rate))}
    return SampledKernel(grid, values, boost, kind, meta)


# -- independent FFT route ------------------------------------------------

def _shift_series(energy, mu, delta, order):
    """First terms of the expansion of 1/((E + i delta)^2 + mu^2) in delta."""
    out = np.zeros(np.broadcast(energy, mu).shape, dtype=complex)
    for j in range(order + 1):
        term = (energy - 1j * mu) ** (-j - 1) - (energy + 1j * mu) ** (-j - 1)
        out += (-1j * delta) ** j * term
    return out / (2j * mu)


def _shift_series_time(t, mu, delta, order):
    poly = sum((delta * t) ** j / factorial(j) for j in range(order + 1))
    return np.exp(-mu * np.abs(t)) * poly / (2 * mu)


def kernel_fft(boost, t_box=40.0, x_box=40.0, n_e=8800, n_k=800, order=3):
    """Kernel on the FFT lattice from the two-dimensional energy-momentum symbol.

    The symbol minus its first ``order`` shift-expansion terms is sampled
    on an (E, k) lattice and inverted with a 2-D FFT; the subtracted terms
    are rational functions with closed-form energy transforms.  Returns
    ``(t, x, values)`` with ``values[i, j] = D(t_i, x_j)`` on the lattice
    ``t_i = i t_box/n_e``, ``x_j = j x_box/n_k`` (wrapped to negative values).
    """
    if boost.dim != 2:
        raise NotImplementedError("FFT route is implemented for d = 2")
    energy = 2 * np.pi * np.fft.fftfreq(n_e, d=t_box / n_e)
    k = 2 * np.pi * np.fft.fftfreq(n_k, d=x_box / n_k)
    mu, delta = mu_delta(k[:, None], boost)
    ee = energy[:, None]
    rem = propagator_array(ee, mu[None, :], delta[None, :]) - _shift_series(ee, mu[None, :], delta[None, :], order)
    vals = np.fft.ifft2(rem) * (n_e * n_k) / (t_box * x_box)
    t = np.fft.fftfreq(n_e, d=1.0 / t_box)
    x = np.fft.fftfreq(n_k, d=1.0 / x_box)
    # closed-form part: exact in t, lattice sum in k
    base = _shift_series_time(t[:, None], mu[None, :], delta[None, :], order)
    vals += np.fft.ifft(base, axis=1) * n_k / x_box
    return t, x, vals


def kernel_duality(boost, n_t=64, n_x=64, t0=1.0, dt=0.05, dx=0.1, **fft_opts):
    """Compare quadrature and FFT kernels on an ``n_t x n_x`` grid.

    Grid: t = t0 + i dt, x = (j - n_x/2) dx.  Returns the relative error
    max|quad - fft| / max|quad| and the two arrays.
    """
    opts = dict(t_box=40.0, x_box=40.0, n_e=8800, n_k=800, order=3)
    opts.update(fft_opts)
    t_lat, x_lat, vals = kernel_fft(boost, **opts)
    ht = opts["t_box"] / opts["n_e"]
    hx = opts["x_box"] / opts["n_k"]
    ti = np.rint((t0 + dt * np.arange(n_t)) / ht).astype(int)
    xj = np.rint(((np.arange(n_x) - n_x // 2) * dx) / hx).astype(int)
    t = ti * ht
    x = xj * hx
    fft_vals = vals[np.ix_(ti % opts["n_e"], xj % opts["n_k"])]
    quad = kernel_continuum(GridSpec(t, x), boost).values
    err = float(np.max(np.abs(quad - fft_vals)) / np.max(np.abs(quad)))
    return {"rel_err": err, "t": t, "x": x, "quad": quad, "fft": fft_vals}


# -- symmetry checks ------------------------------------------------------

@dataclass
class SymmetryReport:
    even: float
    theta: float
    pi: float
    theta_pi: float
    imag_max: float
    tolerance: float

    @property
    def passed(self):
        devs = [d for d in (self.even, self.theta, self.pi, self.theta_pi) if d is not None]
        return all(d <= self.tolerance for d in devs)

    def to_dict(self):
        return {k: (None if v is None else float(v)) for k, v in self.__dict__.items()} | {"passed": self.passed}


def _match(coords, target, atol=1e-12):
    """Index of each target row in coords, or -1."""
    out = np.full(len(target), -1)
    for i, row in enumerate(target):
        hit = np.flatnonzero(np.all(np.abs(coords - row) <= atol, axis=1))
        if hit.size:
            out[i] = hit[0]
    return out


def verify_kernel_symmetries(kern, tolerance=1e-10):
    """Evenness and reflection-conjugation checks on a reflection-closed grid."""
    t = kern.grid.time_points
    x = kern.grid.space_points
    n = kern.boost.direction
    vals = kern.values
    it = _match(t[:, None], -t[:, None])
    xr = x - 2 * np.outer(x @ n, n)
    ix_minus = _match(x, -x)
    ix_pi = _match(x, xr)

    def dev(ti, xi, fn):
        ok_t = ti >= 0
        ok_x = xi >= 0
        if not ok_t.any() or not ok_x.any():
            return None
        a = vals[np.ix_(np.flatnonzero(ok_t), np.flatnonzero(ok_x))]
        b = vals[np.ix_(ti[ok_t], xi[ok_x])]
        return float(np.max(np.abs(fn(b) - a)))

    ident = np.arange(len(t))
    identx = np.arange(len(x))
    return SymmetryReport(
        even=dev(it, ix_minus, lambda b: b),
        theta=dev(it, identx, np.conj),
        pi=dev(ident, ix_pi, np.conj),
        theta_pi=dev(it, ix_pi, lambda b: b),
        imag_max=float(np.max(np.abs(vals.imag))),
        tolerance=tolerance,
    )
