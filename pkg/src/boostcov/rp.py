"""Reflection positivity and Osterwalder-Schrader quantization in d = 2.

Test functions are separable, ``f(t, x) = a(t) b(x)``, with one-dimensional
profiles (truncated Gaussian bumps, sharp points, slabs).  Gram matrices
are assembled two ways:

* kernel route: profiles are sampled on a uniform lattice and contracted
  against the reflected kernel sampled on all lattice sums (reflected axis)
  and differences (other axis);
* mode route: every member is quantized per Fourier mode with the exact
  exponential factor and the Sobolev -1/2 pairing is taken in momentum space.

Agreement of the two routes is the isometry check.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import GridSpec, QuadratureSpec, gauss_legendre_panels, reflected_kernels
from .symbols import mu_delta

HALVES = ("positive_time", "negative_time", "positive_x1")
REFLECTIONS = ("theta", "pi_n")
POSITIVITY_TOL = 1e-10


# -- spatial functions ------------------------------------------------------

@dataclass
class SpatialFunction:
    """Fourier coefficients on momentum nodes with quadrature weights.

    ``weights`` already contain the ``(2 pi)^-1`` so that the L2 pairing is
    ``sum(weights * conj(a) * b)``.
    """

    modes: np.ndarray
    coeffs: np.ndarray
    weights: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        self.modes = np.asarray(self.modes, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (self.modes.shape[0] == self.coeffs.shape[0] == self.weights.shape[0]):
            raise ValueError("modes, coeffs and weights must have equal length")

    @classmethod
    def from_samples(cls, values, length, mass=1.0):
        """Periodic samples on ``[0, length)``; coefficients approximate the continuum transform."""
        values = np.asarray(values, dtype=complex)
        n = len(values)
        h = length / n
        modes = 2 * np.pi * np.fft.fftfreq(n, d=h)
        return cls(modes, h * np.fft.fft(values), np.full(n, 1.0 / length), mass)

    @classmethod
    def single_mode(cls, k, length, amplitude=1.0, mass=1.0):
        return cls(np.array([k]), np.array([amplitude]), np.array([1.0 / length]), mass)

    @property
    def mu(self):
        return mu_delta(self.modes, _Mass(self.mass))[0]

    def same_grid(self, other):
        return (self.modes.shape == other.modes.shape and np.array_equal(self.modes, other.modes)
                and np.array_equal(self.weights, other.weights) and self.mass == other.mass)

    def scaled(self, factor):
        return SpatialFunction(self.modes, self.coeffs * factor, self.weights, self.mass)

    def __add__(self, other):
        if not self.same_grid(other):
            raise ValueError("spatial functions live on different grids")
        return SpatialFunction(self.modes, self.coeffs + other.coeffs, self.weights, self.mass)


class _Mass:
    """Minimal stand-in for a BoostSpec at zero velocity."""

    def __init__(self, mass):
        self.mass = mass
        self.dim = 2
        self.v = np.zeros(1)


def l2_inner(a, b):
    if not a.same_grid(b):
        raise ValueError("spatial functions live on different grids")
    return complex(np.sum(a.weights * np.conj(a.coeffs) * b.coeffs))


def sobolev_half_inner(a, b):
    """<a/sqrt(2 mu), b/sqrt(2 mu)> in L2, evaluated on the Fourier side."""
    if not a.same_grid(b):
        raise ValueError("spatial functions live on different grids")
    return complex(np.sum(a.weights * np.conj(a.coeffs) * b.coeffs / (2 * a.mu)))


def momentum_nodes(cutoff, width=1.0, order=16):
    k, w = gauss_legendre_panels(-cutoff, cutoff, width, order)
    return k, w / (2 * np.pi)


# -- one-dimensional profiles ------------------------------------------------

@dataclass(frozen=True)
class Bump:
    """Gaussian bump times a plane wave, truncated at ``radius`` widths."""

    center: float
    width: float
    amp: complex = 1.0
    freq: float = 0.0
    radius: float = 7.0

    @property
    def support(self):
        return self.center - self.radius * self.width, self.center + self.radius * self.width

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.support
        val = self.amp * np.exp(-0.5 * ((u - self.center) / self.width) ** 2 + 1j * self.freq * u)
        return np.where((u >= lo) & (u <= hi), val, 0.0)

    def ft(self, k):
        """int exp(-i k u) f(u) du of the untruncated bump (truncation error ~ exp(-radius^2/2))."""
        q = np.asarray(k) - self.freq
        return (self.amp * self.width * np.sqrt(2 * np.pi)
                * np.exp(-1j * q * self.center - 0.5 * (self.width * q) ** 2))

    def laplace(self, rate, order=96):
        """int exp(-rate u) f(u) du over the support by Gauss-Legendre."""
        lo, hi = self.support
        u, w = gauss_legendre_panels(lo, hi, (hi - lo) / 3, order // 3)
        return np.exp(-np.multiply.outer(rate, u)) @ (w * self(u))

    def lattice(self, step):
        lo, hi = self.support
        n = np.arange(np.ceil(lo / step), np.floor(hi / step) + 1)
        u = n * step
        return u, step * self(u)


@dataclass(frozen=True)
class Sharp:
    """Point mass ``amp * delta(u - point)``."""

    point: float
    amp: complex = 1.0

    @property
    def support(self):
        return self.point, self.point

    def ft(self, k):
        return self.amp * np.exp(-1j * np.asarray(k) * self.point)

    def laplace(self, rate, order=None):
        return self.amp * np.exp(-np.asarray(rate) * self.point)

    def lattice(self, step):
        return np.array([self.point]), np.array([complex(self.amp)])


@dataclass(frozen=True)
class Slab:
    """Indicator of ``[start, stop]`` times ``amp``."""

    start: float
    stop: float
    amp: complex = 1.0

    @property
    def support(self):
        return self.start, self.stop

    def ft(self, k):
        k = np.asarray(k, dtype=float)
        small = np.abs(k) < 1e-8
        ks = np.where(small, 1.0, k)
        val = (np.exp(-1j * ks * self.start) - np.exp(-1j * ks * self.stop)) / (1j * ks)
        return self.amp * np.where(small, self.stop - self.start, val)

    def laplace(self, rate, order=64):
        u, w = gauss_legendre_panels(self.start, self.stop, self.stop - self.start, order)
        return self.amp * (np.exp(-np.multiply.outer(rate, u)) @ w)

    def lattice(self, step):
        raise NotImplementedError("slabs are not smooth; use the mode route")


@dataclass(frozen=True)
class TestFunction:
    """Separable test function ``time(t) * space(x)``.

    ``space`` may also be a :class:`SpatialFunction`, in which case the
    member only has a mode representation.
    """

    __test__ = False  # keep pytest from collecting it

    time: object
    space: object

    def spatial_ft(self, k):
        if isinstance(self.space, SpatialFunction):
            return self.space.coeffs
        return self.space.ft(k)


@dataclass
class TestFunctionFamily:
    __test__ = False

    members: list
    half: str = "positive_time"
    seed: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.half not in HALVES:
            raise ValueError(f"unknown half-space {self.half!r}")
        if not self.members:
            raise ValueError("empty family")
        for f in self.members:
            if not in_half(f, self.half):
                raise ValueError(f"member {f} is not supported strictly inside {self.half}")
        self.meta.setdefault("l2_condition", l2_condition(self.members))


def in_half(f, half, strict=True):
    """Support test; ``strict=False`` admits the boundary itself."""
    if half == "positive_x1":
        if isinstance(f.space, SpatialFunction):
            return False
        lo = f.space.support[0]
        return lo > 0 if strict else lo >= 0
    lo, hi = f.time.support
    if half == "positive_time":
        return lo > 0 or ((not strict or isinstance(f.time, Sharp)) and lo >= 0)
    return hi < 0 if strict else hi <= 0


def _profile_inner(p, q):
    """L2 inner product of two bump profiles (Sharp/Slab yield None)."""
    if not (isinstance(p, Bump) and isinstance(q, Bump)):
        return None
    lo = max(p.support[0], q.support[0])
    hi = min(p.support[1], q.support[1])
    if hi <= lo:
        return 0.0
    u, w = gauss_legendre_panels(lo, hi, (hi - lo) / 4, 32)
    return complex(np.sum(w * np.conj(p(u)) * q(u)))


def l2_condition(members):
    """Condition number of the L2 Gram (inf when it cannot be formed or is singular)."""
    n = len(members)
    g = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if isinstance(members[i].space, SpatialFunction) or isinstance(members[j].space, SpatialFunction):
                return None
            a = _profile_inner(members[i].time, members[j].time)
            b = _profile_inner(members[i].space, members[j].space)
            if a is None or b is None:
                return None
            g[i, j] = a * b
    ev = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    return float(ev[-1] / ev[0]) if ev[0] > 0 else float("inf")


def random_family(seed, n=20, half="positive_time", n_waves=4):
    """Random truncated Gaussian bumps plus deterministic plane-wave packets.

    The reflected axis gets narrow bumps well inside the half-space, the
    other axis wider ones; members carry random complex amplitudes.
    ``seed`` is an int (recorded in the family) or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    members = []
    n_rand = max(0, n - n_waves)
    for i in range(n):
        if i < n_rand:
            rw = rng.uniform(0.15, 0.3)
            rc = rw * 7.0 + rng.uniform(0.5, 2.0)
            ow = rng.uniform(0.3, 0.6)
            oc = rng.uniform(-1.0, 1.0)
            amp = complex(rng.normal(), rng.normal())
            freq = rng.uniform(-2.0, 2.0)
        else:
            q = i - n_rand + 1
            rw, rc, ow, oc, amp, freq = 0.25, 0.25 * 7.0 + 0.5 + 0.3 * q, 0.5, 0.0, 1.0, float(q)
        refl = Bump(rc, rw)
        other = Bump(oc, ow, amp, freq)
        if half == "positive_x1":
            members.append(TestFunction(other, refl))
        elif half == "negative_time":
            members.append(TestFunction(Bump(-rc, rw), other))
        else:
            members.append(TestFunction(refl, other))
    return TestFunctionFamily(members, half, seed if isinstance(seed, (int, np.integer)) else None)


# -- quantization maps -------------------------------------------------------

def _default_cutoff(fam_members):
    widths = [m.space.width for m in fam_members if isinstance(m.space, Bump)]
    freqs = [abs(m.space.freq) for m in fam_members if isinstance(m.space, Bump)]
    if not widths:
        return 60.0
    return max(freqs) + 9.0 / min(widths)


def _momentum_grid(members, cutoff=None):
    cutoff = cutoff or _default_cutoff(members)
    spread = max((abs(m.space.center) for m in members if isinstance(m.space, Bump)), default=0.0)
    return momentum_nodes(cutoff, width=min(2.0, 4.0 / (1.0 + spread)))


def _rates(k, boost, side):
    mu, delta = mu_delta(k, boost)
    return mu + delta if side == "+" else mu - delta


def os_quantize(f, side, boost, grid=None):
    """Per-mode OS map ``int_0^inf exp(-t mu_pm) f_t dt`` as a SpatialFunction."""
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    if boost.dim != 2:
        raise NotImplementedError("test functions are implemented for d = 2")
    if not in_half(f, "positive_time", strict=False):
        raise ValueError("quantization needs support in positive time")
    if isinstance(f.space, SpatialFunction):
        k, w = f.space.modes, f.space.weights
    else:
        k, w = grid if grid is not None else _momentum_grid([f])
    coeffs = f.time.laplace(_rates(k, boost, side)) * f.spatial_ft(k)
    return SpatialFunction(k, coeffs, w, boost.mass)


def _spatial_quantize(f, side, boost, grid):
    """Energy-mode representation for the x-reflection: int exp(-iEt) exp(k_- x) f dt dx."""
    e, w = grid
    ch2 = boost.cosh**2
    th = boost.tanh
    nu = np.sqrt(e**2 + boost.mass**2 / ch2)
    if side == "+":
        rate = (nu + e * th) * ch2  # -k_minus
    else:
        rate = (nu - e * th) * ch2  # k_plus
    coeffs = f.time.ft(e) * f.space.laplace(rate)
    return coeffs, w / (2 * nu)


# -- Gram matrices -----------------------------------------------------------

@dataclass
class GramReport:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    min_eig: float
    verdict: bool
    tolerance: float
    hermiticity: float = 0.0
    reflection: str = "theta"
    velocity: tuple = ()
    family_seed: int = None
    condition: float = None
    route: str = "kernel"

    def to_dict(self):
        return {
            "family_seed": self.family_seed,
            "reflection": self.reflection,
            "route": self.route,
            "velocity": list(self.velocity),
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "min_eig": float(self.min_eig),
            "norm": float(np.max(np.abs(self.eigenvalues))),
            "hermiticity": float(self.hermiticity),
            "condition": self.condition,
            "verdict": "pass" if self.verdict else "fail",
        }


def gram_report(m, tol=POSITIVITY_TOL, **info):
    herm = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    norm = float(np.max(np.abs(ev))) if ev.size else 0.0
    return GramReport(m, ev, float(ev[0]), bool(ev[0] >= -tol * norm), tol, herm, **info)


def _lattice_steps(members, reflected_axis):
    def widths(axis):
        return [getattr(getattr(m, axis), "width", np.inf) for m in members]
    other_axis = "space" if reflected_axis == "time" else "time"
    rw = min(widths(reflected_axis))
    ow = min(widths(other_axis))
    return (rw / 3 if np.isfinite(rw) else 0.05), (ow / 6 if np.isfinite(ow) else 0.05)


def _pair_coords(profiles, step, combine):
    """Unique pair coordinates and, per pair (i, j), index/weight arrays."""
    nodes = [p.lattice(step) for p in profiles]
    n = len(profiles)
    coords = []
    for i in range(n):
        for j in range(n):
            coords.append(combine(nodes[i][0][:, None], nodes[j][0][None, :]).ravel())
    allc = np.concatenate(coords)
    key = np.round(allc / step * 1e6).astype(np.int64)  # lattice-exact key
    uniq_key, first, inv = np.unique(key, return_index=True, return_inverse=True)
    uniq = allc[first]
    pairs = {}
    pos = 0
    for i in range(n):
        for j in range(n):
            wi = np.conj(nodes[i][1])[:, None] * nodes[j][1][None, :]
            size = wi.size
            pairs[i, j] = (inv[pos:pos + size], wi.ravel())
            pos += size
    return uniq, pairs


def _correlations(uniq, pairs, n):
    out = np.zeros((n, n, len(uniq)), dtype=complex)
    for (i, j), (idx, w) in pairs.items():
        out[i, j] = np.bincount(idx, weights=w.real, minlength=len(uniq)) + 1j * np.bincount(
            idx, weights=w.imag, minlength=len(uniq))
    return out


def kernel_gram(members, reflection, sampler):
    """Gram matrix from a reflected kernel sampler.

    For ``theta`` the sampler gets (time sums, spatial differences), for
    ``pi_n`` (time differences, spatial sums); it returns the kernel on the
    product grid.
    """
    n = len(members)
    if reflection == "theta":
        h_r, h_o = _lattice_steps(members, "time")
        r, pr = _pair_coords([m.time for m in members], h_r, np.add)
        o, po = _pair_coords([m.space for m in members], h_o, lambda a, b: a - b)
        vals = sampler(r, o)
        return np.einsum("ijs,sy,ijy->ij", _correlations(r, pr, n), vals, _correlations(o, po, n))
    h_r, h_o = _lattice_steps(members, "space")
    r, pr = _pair_coords([m.space for m in members], h_r, np.add)
    o, po = _pair_coords([m.time for m in members], h_o, lambda a, b: a - b)
    vals = sampler(o, r)
    return np.einsum("ijt,tx,ijx->ij", _correlations(o, po, n), vals, _correlations(r, pr, n))


def _flat_sampler(boost, kind, quadrature):
    def sample(times, space):
        return reflected_kernels(GridSpec(times, space, quadrature=quadrature), boost, kind).values
    return sample


def _gram_modes(fam, reflection, boost, side):
    members = fam.members
    if reflection == "theta":
        grid = _momentum_grid(members)
        quant = [os_quantize(f, side, boost, grid) for f in members]
        n = len(quant)
        return np.array([[sobolev_half_inner(quant[i], quant[j]) for j in range(n)] for i in range(n)])
    widths = [m.time.width for m in members if isinstance(m.time, Bump)]
    cutoff = 9.0 / min(widths) if len(widths) == len(members) else 200.0
    spread = max(abs(m.time.support[0]) + abs(m.time.support[1]) for m in members)
    e, w = momentum_nodes(cutoff, width=min(2.0, 4.0 / (1.0 + spread)))
    cols = [_spatial_quantize(f, side, boost, (e, w)) for f in members]
    c = np.array([col[0] for col in cols])
    wt = cols[0][1]
    return np.conj(c) @ (wt[:, None] * c.T)


def _reflection_for(fam, reflection):
    if reflection not in REFLECTIONS:
        raise ValueError(f"unknown reflection {reflection!r}")
    need = "positive_time" if reflection == "theta" else "positive_x1"
    if fam.half != need:
        raise ValueError(f"{reflection} needs a {need} family, got {fam.half}")


def gram_reflection(fam, reflection, boost, route="kernel", side="+", tol=POSITIVITY_TOL, quadrature=None):
    """Gram matrix of <f_i, (reflection o D_v) f_j> with a positivity verdict.

    ``side`` selects thetaD/piD (``+``) or Dtheta/Dpi (``-``).
    """
    _reflection_for(fam, reflection)
    if boost.dim != 2:
        raise NotImplementedError("test-function families are implemented for d = 2")
    if route == "kernel":
        kind = {("theta", "+"): "thetaD", ("theta", "-"): "Dtheta",
                ("pi_n", "+"): "piD", ("pi_n", "-"): "Dpi"}[reflection, side]
        m = kernel_gram(fam.members, reflection, _flat_sampler(boost, kind, quadrature or QuadratureSpec()))
    elif route == "mode":
        m = _gram_modes(fam, reflection, boost, side)
    else:
        raise ValueError(f"unknown route {route!r}")
    return gram_report(m, tol, reflection=reflection, velocity=boost.velocity, family_seed=fam.seed,
                       condition=fam.meta.get("l2_condition"), route=route)


def verify_isometry(fam, boost, reflection=None):
    """Kernel-route Gram against mode-route Gram for both sides."""
    reflection = reflection or ("theta" if fam.half == "positive_time" else "pi_n")
    out = {"reflection": reflection, "velocity": list(boost.velocity)}
    worst = 0.0
    for side in ("+", "-"):
        mk = gram_reflection(fam, reflection, boost, "kernel", side).matrix
        mm = gram_reflection(fam, reflection, boost, "mode", side).matrix
        dev = float(np.max(np.abs(mk - mm)))
        rel = dev / float(np.max(np.abs(mm)))
        out[side] = {"max_abs_dev": dev, "rel_dev": rel}
        worst = max(worst, rel)
    out["rel_dev"] = worst
    return out


def contraction_ratio(f, boost, n_e=256, n_k=256):
    """<f, thetaD f> / <f, |D| f> for a bump-by-bump member (must be <= 1)."""
    q = os_quantize(f, "+", boost)
    num = sobolev_half_inner(q, q).real
    ce = 9.0 / f.time.width
    ck = abs(f.space.freq) + 9.0 / f.space.width
    e, we = gauss_legendre_panels(-ce, ce, 2 * ce / (n_e // 16), 16)
    k, wk = gauss_legendre_panels(-ck, ck, 2 * ck / (n_k // 16), 16)
    mu, delta = mu_delta(k, boost)
    ee = e[:, None]
    absd = 1.0 / np.abs((ee + 1j * delta[None, :]) ** 2 + mu[None, :] ** 2)
    dens = np.abs(f.time.ft(e))[:, None] ** 2 * np.abs(f.space.ft(k))[None, :] ** 2
    den = float(we @ (absd * dens) @ wk) / (2 * np.pi) ** 2
    return num / den
