"""Time-periodized and fully compactified kernels.

Per spatial mode the cylinder kernel is available three ways: the
two-branch closed form, a truncated sum over windings ``t - t' + n beta``,
and a truncated Matsubara sum over ``E_n = 2 pi n / beta``.  The Matsubara
route subtracts the first two terms of the expansion in ``delta``,
``1/(E^2+mu^2) - 2 i delta E/(E^2+mu^2)^2``, whose lattice sums are known in
closed form, and sums the O(E^-4) remainder numerically.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import _mode_sum, _world_k, momentum_rule
from .rp import Bump, Sharp, gram_report, kernel_gram, POSITIVITY_TOL
from .symbols import BoundReport, Momentum, bound_families, mu_delta, sup_sequence


@dataclass(frozen=True)
class CompactSpec:
    beta: float
    boost: object
    lengths: tuple = None

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError("beta must be positive")
        if self.lengths is not None:
            lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
            if len(lengths) != self.boost.dim - 1 or min(lengths) <= 0:
                raise ValueError("need one positive length per spatial axis")
            object.__setattr__(self, "lengths", lengths)

    @property
    def gap(self):
        return self.boost.gap

    @property
    def volume(self):
        return float(np.prod(self.lengths)) if self.lengths else None


@dataclass(frozen=True)
class MatsubaraLattice:
    beta: float
    max_index: int

    @property
    def indices(self):
        return np.arange(-self.max_index, self.max_index + 1)

    @property
    def values(self):
        return 2 * np.pi * self.indices / self.beta


@dataclass(frozen=True)
class SpatialLattice:
    lengths: tuple
    cutoff: tuple

    @classmethod
    def build(cls, lengths, cutoff):
        lengths = tuple(float(x) for x in np.atleast_1d(lengths))
        cut = np.broadcast_to(np.atleast_1d(cutoff), (len(lengths),))
        return cls(lengths, tuple(int(c) for c in cut))

    @classmethod
    def for_momentum(cls, lengths, k_max):
        lengths = np.atleast_1d(lengths)
        return cls.build(lengths, [int(np.ceil(k_max * l / (2 * np.pi))) for l in lengths])

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def values(self):
        axes = [2 * np.pi * np.arange(-c, c + 1) / l for l, c in zip(self.lengths, self.cutoff)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


# -- Bose factors -------------------------------------------------------------

def _one_plus_rho(x):
    return 1.0 / -np.expm1(-x)


def _rho(x):
    # exp underflows quietly to 0 for large x
    return np.exp(-x) / -np.expm1(-x)


def rho_factor(k, spec, sign):
    """Bose factor exp(-beta mu_pm)/(1 - exp(-beta mu_pm)) for a momentum or wave vectors."""
    kvec = np.asarray(k.kvec if isinstance(k, Momentum) else k, dtype=float)
    mu, delta = mu_delta(kvec, spec.boost)
    rate = mu + delta if sign == "+" else mu - delta
    return _rho(spec.beta * rate)


def rho_bound(spec):
    return float(1.0 / np.expm1(spec.beta * spec.gap))


def rho_check(spec, kvecs):
    """Largest measured rho_pm over ``kvecs`` against the uniform bound."""
    worst = max(float(np.max(rho_factor(kvecs, spec, s))) for s in "+-")
    bound = rho_bound(spec)
    return {"max_rho": worst, "bound": bound, "exceptions": int(worst > bound), "passed": worst <= bound}


# -- per-mode routes ---------------------------------------------------------

def _reduce(dt, beta):
    return np.mod(dt, beta)


def cylinder_mode(dt, mu, delta, beta):
    """Closed-form periodized mode factor; ``dt`` is reduced to [0, beta)."""
    d = _reduce(np.asarray(dt, dtype=float), beta)
    mm = mu - delta
    mp = mu + delta
    return (np.exp(-d * mm) * _one_plus_rho(beta * mm)
            + np.exp(-(beta - d) * mp) * _one_plus_rho(beta * mp)) / (2 * mu)


def flat_mode(dt, mu, delta):
    dt = np.asarray(dt, dtype=float)
    return np.exp(-np.abs(dt) * mu + dt * delta) / (2 * mu)


def winding_mode(dt, mu, delta, beta, n_max):
    dt = np.asarray(dt, dtype=float)
    return sum(flat_mode(dt + n * beta, mu, delta) for n in range(-n_max, n_max + 1))


def winding_tail_bound(spec, n_max):
    """Bound on the omitted windings for |dt| < beta, including the 1/(2 m) factor."""
    g = spec.gap
    return 2 * rho_bound(spec) * np.exp(-(n_max - 1) * spec.beta * g) / (2 * spec.boost.mass)


def _bose_profile(d, mu, beta):
    """cosh(mu a)/sinh(beta mu/2) and sinh(mu a)/sinh(beta mu/2), a = beta/2 - d, in overflow-safe form."""
    a = beta / 2 - d
    den = -np.expm1(-beta * mu)
    ep = np.exp(mu * (a - beta / 2))
    em = np.exp(-mu * (a + beta / 2))
    return (ep + em) / den, (ep - em) / den


def matsubara_subtraction(dt, mu, delta, beta):
    """Exact lattice sums of 1/(E^2+mu^2) - 2 i delta E/(E^2+mu^2)^2 times exp(i E dt)/beta."""
    d = _reduce(np.asarray(dt, dtype=float), beta)
    a = beta / 2 - d
    c1, s1 = _bose_profile(d, mu, beta)
    coth = _one_plus_rho(beta * mu) + _rho(beta * mu)
    zeroth = c1 / (2 * mu)
    first = -(delta / mu) * (a * c1 - 0.5 * beta * s1 * coth) / 2
    return zeroth + first


def matsubara_mode(dt, mu, delta, lattice, accelerate=True):
    """(1/beta) sum_n exp(i E_n dt)/((E_n + i delta)^2 + mu^2) per mode."""
    beta = lattice.beta
    e = lattice.values
    dt = np.asarray(dt, dtype=float)
    mu = np.asarray(mu, dtype=float)
    delta = np.asarray(delta, dtype=float)
    shape = np.broadcast(dt, mu, delta).shape
    dt, mu, delta = (np.broadcast_to(x, shape).ravel() for x in (dt, mu, delta))
    out = np.empty(dt.size, dtype=complex)
    chunk = max(1, 2_000_000 // e.size)
    for s in range(0, dt.size, chunk):
        sl = slice(s, s + chunk)
        ee = e[None, :]
        m2 = mu[sl, None] ** 2
        dl = delta[sl, None]
        phase = np.exp(1j * ee * dt[sl, None])
        term = 1.0 / ((ee + 1j * dl) ** 2 + m2)
        if accelerate:
            base = ee**2 + m2
            term = term - 1.0 / base + 2j * dl * ee / base**2
        out[sl] = (phase * term).sum(axis=1) / beta
    out = out.reshape(shape)
    if accelerate:
        out = out + matsubara_subtraction(dt.reshape(shape), mu.reshape(shape), delta.reshape(shape), beta)
    return out


# -- summed kernels ----------------------------------------------------------

def _summed(factor, dmin, xdiff, spec, cutoff=None, tol=1e-13):
    boost = spec.boost
    pts = np.atleast_2d(np.asarray(xdiff, dtype=float).reshape(-1, boost.dim - 1))
    if cutoff is None:
        if dmin <= 0:
            raise ValueError("coincident times need an explicit momentum cutoff")
        cutoff = np.log(1.0 / tol) / (dmin * (1.0 - boost.speed)) + boost.mass
    max_dist = float(np.max(np.linalg.norm(pts, axis=1), initial=0.0))
    kk, ww, nt = momentum_rule(boost, cutoff, max_dist)
    mu, delta = _world_k(kk, boost)
    tf = np.atleast_2d(factor(mu, delta))
    return _mode_sum(tf, kk, ww, nt, pts, boost)


def _dmin(dt, beta):
    d = _reduce(np.atleast_1d(np.asarray(dt, dtype=float)), beta)
    return float(np.min(np.minimum(d, beta - d)))


def cylinder_kernel_closed(t, tp, xdiff, spec, modes=None, cutoff=None):
    """Closed-form cylinder kernel.

    With ``modes`` (wave vectors) the per-mode factors are returned; otherwise
    the kernel at spatial separations ``xdiff`` (rows t - t', columns xdiff).
    """
    dt = np.asarray(t, dtype=float) - np.asarray(tp, dtype=float)
    if modes is not None:
        mu, delta = mu_delta(modes, spec.boost)
        return cylinder_mode(np.asarray(dt)[..., None], mu, delta, spec.beta)
    dt = np.atleast_1d(dt)
    return _summed(lambda mu, de: cylinder_mode(dt[:, None], mu, de, spec.beta),
                   _dmin(dt, spec.beta), xdiff, spec, cutoff)


def cylinder_kernel_winding(t, tp, xdiff, spec, n_max=64, modes=None, cutoff=None):
    """Truncated image sum; returns (values, tail_bound)."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    dt = np.asarray(t, dtype=float) - np.asarray(tp, dtype=float)
    bound = winding_tail_bound(spec, n_max) if n_max >= 1 else np.inf
    if modes is not None:
        mu, delta = mu_delta(modes, spec.boost)
        return winding_mode(np.asarray(dt)[..., None], mu, delta, spec.beta, n_max), bound
    dt = np.atleast_1d(dt)

    def factor(mu, de):
        return winding_mode(dt[:, None], mu, de, spec.beta, n_max)

    dmin = float(np.min(np.abs(dt))) if n_max == 0 else _dmin(dt, spec.beta)
    return _summed(factor, dmin, xdiff, spec, cutoff), bound


def cylinder_kernel_matsubara(t, tp, xdiff, spec, lattice, modes=None, cutoff=None, accelerate=True):
    if not np.isclose(lattice.beta, spec.beta, rtol=0, atol=1e-15 * spec.beta):
        raise ValueError("lattice and spec have different beta")
    dt = np.asarray(t, dtype=float) - np.asarray(tp, dtype=float)
    if modes is not None:
        mu, delta = mu_delta(modes, spec.boost)
        return matsubara_mode(np.asarray(dt)[..., None], mu, delta, lattice, accelerate)
    dt = np.atleast_1d(dt)
    return _summed(lambda mu, de: matsubara_mode(dt[:, None], mu[None, :], de[None, :], lattice, accelerate),
                   _dmin(dt, spec.beta), xdiff, spec, cutoff)


def torus_kernel(t, tp, xdiff, spec, sign="+", lattice=None, k_max=None, tol=1e-13):
    """Fully compactified kernel D^c_pm on S^1 x T^(d-1).

    ``(1/volume) sum_k torus_mode(...) exp(-i k.(x - x'))`` over a symmetric
    lattice.  Returns values of shape (len(t - t'), len(xdiff)) and metadata
    with a tail estimate for the mode cutoff.
    """
    if spec.lengths is None:
        raise ValueError("torus kernel needs spatial lengths")
    dt = np.atleast_1d(np.asarray(t, dtype=float) - np.asarray(tp, dtype=float))
    boost = spec.boost
    if lattice is None:
        dmin = _dmin(dt, spec.beta)
        if dmin <= 0 and k_max is None:
            raise ValueError("coincident times need an explicit mode cutoff")
        k_max = k_max or np.log(1.0 / tol) / (dmin * (1.0 - boost.speed)) + boost.mass
        lattice = SpatialLattice.for_momentum(spec.lengths, k_max)
    k = lattice.values
    mu, delta = mu_delta(k, boost)
    fac = torus_mode(dt[:, None], mu[None, :], delta[None, :], spec.beta, sign)
    pts = np.asarray(xdiff, dtype=float).reshape(-1, boost.dim - 1)
    phase = np.exp(-1j * pts @ k.T)
    vals = fac @ phase.T / lattice.volume
    edge = float(np.min(np.max(np.abs(k), axis=0)))
    dmin = _dmin(dt, spec.beta)
    tail = float(np.exp(-dmin * (1 - boost.speed) * edge)) if dmin > 0 else 1.0
    return vals, {"modes": int(len(k)), "tail_estimate": tail, "lattice": lattice}


def torus_mode(dt, mu, delta, beta, sign):
    """Two-branch torus mode factor; for 0 < t - t' < beta the first term decays with mu_(-sign)."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    # cylinder_mode's first term decays with mu - delta
    return cylinder_mode(dt, mu, delta if sign == "+" else -delta, beta)


# -- bounds ------------------------------------------------------------------

def verify_compact_bounds(samples, spec, sequence=(10, 100, 1000), keep=5):
    """Symbol inequalities on Matsubara energies with the v = 0 symbol as reference.

    ``samples`` is ``(E, kvec)``; every energy must lie on the Matsubara lattice.
    ``sequence`` lists lattice indices for the sup-ratio sequence.
    """
    energy, kvec = samples
    energy = np.asarray(energy, dtype=float)
    kvec = np.asarray(kvec, dtype=float)
    n = energy * spec.beta / (2 * np.pi)
    if np.max(np.abs(n - np.rint(n)), initial=0.0) > 1e-9:
        raise ValueError("energies must lie on the Matsubara lattice")
    boost = spec.boost
    mu, delta = mu_delta(kvec, boost)
    strict = boost.speed > 0
    checks, worst = bound_families(energy, mu, delta, boost.cosh, boost.sinh, strict)
    violations = {name: int(np.sum(~ok)) for name, ok in checks.items()}
    offending = []
    for name, ok in checks.items():
        for i in np.flatnonzero(~ok)[:keep]:
            offending.append({"family": name, "E": float(energy[i]), "k": np.atleast_1d(kvec[i]).tolist()})
    seq = sup_sequence(boost, [2 * np.pi * j / spec.beta for j in sequence]) if sequence else []
    rep = BoundReport(boost.velocity, int(energy.size), violations, worst, offending, seq, boost.sinh)
    return rep


def compact_sup_ok(report, rel=0.02):
    ratios = [r for _, r in report.sup_sequence]
    target = report.sup_target
    if target == 0:
        return all(r == 0 for r in ratios)
    return all(r < target for r in ratios) and abs(ratios[-1] - target) <= rel * target


# -- reflection positivity on the cylinder -----------------------------------

def _check_cylinder_family(fam, beta):
    if fam.half != "positive_time":
        raise ValueError("cylinder Gram needs a positive-time family")
    for f in fam.members:
        lo, hi = f.time.support
        if not (lo >= 0 and hi < beta / 2) or (lo == 0 and not isinstance(f.time, Sharp)):
            raise ValueError("members must be supported in 0 < t < beta/2")


def theta_cylinder_sampler(spec, cutoff=None):
    """Sampler (time sums, spatial differences) -> theta-reflected cylinder kernel."""
    def sample(sums, diffs):
        return cylinder_kernel_closed(-np.asarray(sums), 0.0, diffs, spec, cutoff=cutoff)
    return sample


def gram_reflection_compact(fam, spec, tol=POSITIVITY_TOL, cutoff=None):
    _check_cylinder_family(fam, spec.beta)
    if spec.boost.dim != 2:
        raise NotImplementedError("test-function families are implemented for d = 2")
    m = kernel_gram(fam.members, "theta", theta_cylinder_sampler(spec, cutoff))
    return gram_report(m, tol, reflection="theta", velocity=spec.boost.velocity,
                       family_seed=fam.seed, condition=fam.meta.get("l2_condition"), route="kernel")


def compact_family(seed, beta, n=20):
    """Random bumps supported in (0, beta/2) times spatial wave packets."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    from .rp import TestFunction, TestFunctionFamily

    members = []
    half = beta / 2
    for _ in range(n):
        w = rng.uniform(0.02, 0.035) * half
        c = rng.uniform(7 * w + 0.1 * half, half - 7 * w - 0.1 * half)
        members.append(TestFunction(Bump(c, w),
                                    Bump(rng.uniform(-1, 1), rng.uniform(0.3, 0.6),
                                         complex(rng.normal(), rng.normal()), rng.uniform(-2, 2))))
    return TestFunctionFamily(members, "positive_time", seed if isinstance(seed, (int, np.integer)) else None)


# -- sharp-time embedding ----------------------------------------------------

def sharp_time_embedding(alpha, spec, max_index=10_000):
    """Compare the h_-1 norm of a sharp-time slice on the circle to the -1/2 norm of alpha.

    The Matsubara sum (1/beta) sum_n 1/(E_n^2 + mu^2) is evaluated directly
    (with a midpoint tail) and divided by its Riemann integral 1/(2 mu).
    """
    mu = alpha.mu
    e = MatsubaraLattice(spec.beta, max_index).values
    raw = (1.0 / (e[None, :] ** 2 + mu[:, None] ** 2)).sum(axis=1) / spec.beta
    raw += spec.beta / (2 * np.pi**2 * (max_index + 0.5))
    w = alpha.weights * np.abs(alpha.coeffs) ** 2
    lhs = float(np.sum(w * raw))
    rhs = float(np.sum(w / (2 * mu)))
    m = spec.boost.mass
    m_tilde = float(_one_plus_rho(spec.beta * m) + _rho(spec.beta * m))
    return {
        "ratio": lhs / rhs,
        "m_tilde": m_tilde,
        "one_plus_2_over_beta_m": 1 + 2 / (spec.beta * m),
        "mode_ratio_closed": (_one_plus_rho(spec.beta * mu) + _rho(spec.beta * mu)).tolist(),
        "passed": lhs <= m_tilde * rhs * (1 + 1e-9),
    }
