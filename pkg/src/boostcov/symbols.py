"""Momentum-space symbols of the boosted free field.

Conventions used throughout the package:

* the boost has velocity ``v`` with ``|v| < 1``; ``eta = artanh|v|`` is the
  rapidity and ``n = v/|v|`` the boost direction;
* for a spatial wave vector ``k`` we write ``mu = sqrt(k^2 + m^2)``,
  ``delta = k.v`` and ``mu_pm = mu +- delta``;
* the propagator symbol is the bare rational function
  ``1/((E + i delta)^2 + mu^2)``.  No ``2 pi`` factors appear at this
  level; they live in the Fourier transforms of :mod:`boostcov.kernels`.
"""

from dataclasses import dataclass, field

import numpy as np

STRICT_MARGIN = 1e-13


@dataclass(frozen=True)
class BoostSpec:
    """Mass, velocity vector and spacetime dimension of a boosted field."""

    mass: float
    velocity: tuple
    dim: int = 2

    def __post_init__(self):
        vel = tuple(float(x) for x in np.atleast_1d(self.velocity))
        object.__setattr__(self, "velocity", vel)
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if len(vel) != self.dim - 1:
            raise ValueError(f"velocity must have {self.dim - 1} components")
        if not np.all(np.isfinite(vel)):
            raise ValueError("velocity must be finite")
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ValueError("mass must be positive")
        if np.linalg.norm(vel) >= 1.0:
            raise ValueError("speed must be strictly below 1")

    @classmethod
    def create(cls, mass=1.0, velocity=0.0, dim=None):
        vel = np.atleast_1d(np.asarray(velocity, dtype=float))
        if dim is None:
            dim = len(vel) + 1
        if len(vel) == 1 and dim > 2:
            vel = np.concatenate([vel, np.zeros(dim - 2)])
        return cls(float(mass), tuple(vel), int(dim))

    @property
    def v(self):
        return np.array(self.velocity)

    @property
    def speed(self):
        return float(np.linalg.norm(self.velocity))

    @property
    def direction(self):
        s = self.speed
        if s == 0.0:
            e = np.zeros(self.dim - 1)
            e[0] = 1.0
            return e
        return self.v / s

    @property
    def rapidity(self):
        return float(np.arctanh(self.speed))

    @property
    def cosh(self):
        return 1.0 / np.sqrt(1.0 - self.speed**2)

    @property
    def sinh(self):
        return self.speed * self.cosh

    @property
    def tanh(self):
        return self.speed

    @property
    def gap(self):
        """Lower bound ``m sqrt(1 - v^2)`` of ``mu_pm``."""
        return self.mass * np.sqrt(1.0 - self.speed**2)

    def with_velocity(self, velocity):
        return BoostSpec.create(self.mass, velocity, self.dim)

    def transverse_basis(self):
        """Orthonormal basis (rows) of the complement of ``direction``."""
        n = self.direction
        if self.dim == 2:
            return np.zeros((0, 1))
        q, _ = np.linalg.qr(np.column_stack([n, np.eye(self.dim - 1)]))
        basis = q[:, 1:self.dim - 1].T
        return basis


@dataclass(frozen=True)
class Momentum:
    energy: float
    kvec: tuple
    kperp: tuple = field(default=())

    @classmethod
    def build(cls, energy, kvec, boost):
        k = np.atleast_1d(np.asarray(kvec, dtype=float))
        if k.shape != (boost.dim - 1,):
            raise ValueError("wave vector has the wrong length")
        if not (np.isfinite(energy) and np.all(np.isfinite(k))):
            raise ValueError("momentum must be finite")
        kperp = boost.transverse_basis() @ k
        return cls(float(energy), tuple(k), tuple(kperp))

    def along(self, direction):
        return float(np.dot(self.kvec, direction))


@dataclass
class SymbolBundle:
    mu: float
    delta: float
    mu_plus: float
    mu_minus: float
    d_tilde: complex = None
    k_tilde: float = None
    l_tilde: float = None
    sigma_tilde: complex = None


@dataclass
class SpatialSymbolBundle:
    nu: float
    nu_plus: float
    nu_minus: float
    k_plus: float
    k_minus: float


def _check(energy, kvec):
    if not (np.all(np.isfinite(energy)) and np.all(np.isfinite(kvec))):
        raise ValueError("non-finite momentum")


def _unpack(k, boost):
    if isinstance(k, Momentum):
        return np.float64(k.energy), np.asarray(k.kvec, dtype=float)
    energy, kvec = k
    energy = np.asarray(energy, dtype=float)
    kvec = np.asarray(kvec, dtype=float)
    if boost.dim == 2 and kvec.ndim == energy.ndim:
        kvec = kvec[..., None]
    return energy, kvec


def mu_delta(kvec, boost):
    """Vectorised ``(mu, delta)`` for wave vectors with trailing axis d-1."""
    kvec = np.asarray(kvec, dtype=float)
    if boost.dim == 2 and (kvec.ndim == 0 or kvec.shape[-1] != 1):
        kvec = kvec[..., None]
    mu = np.sqrt(np.sum(kvec**2, axis=-1) + boost.mass**2)
    delta = kvec @ boost.v
    return mu, delta


def one_particle_symbols(k, boost):
    energy, kvec = _unpack(k, boost)
    _check(energy, kvec)
    mu, delta = mu_delta(kvec, boost)
    return SymbolBundle(mu=mu, delta=delta, mu_plus=mu + delta, mu_minus=mu - delta)


def propagator_array(energy, mu, delta):
    return 1.0 / ((energy + 1j * delta) ** 2 + mu**2)


def split_array(energy, mu, delta):
    den = (energy**2 + (mu - delta) ** 2) * (energy**2 + (mu + delta) ** 2)
    return (energy**2 + mu**2 - delta**2) / den, -2.0 * energy * delta / den


def propagator_symbol(k, boost):
    energy, kvec = _unpack(k, boost)
    _check(energy, kvec)
    mu, delta = mu_delta(kvec, boost)
    return propagator_array(energy, mu, delta)


def split_symbols(k, boost):
    energy, kvec = _unpack(k, boost)
    _check(energy, kvec)
    mu, delta = mu_delta(kvec, boost)
    return split_array(energy, mu, delta)


def sigma_symbol(k, boost):
    # principal branch: Re D > 0 keeps us away from the cut
    return np.sqrt(propagator_symbol(k, boost))


def full_symbols(k, boost):
    bundle = one_particle_symbols(k, boost)
    energy, _ = _unpack(k, boost)
    bundle.d_tilde = propagator_array(energy, bundle.mu, bundle.delta)
    bundle.k_tilde, bundle.l_tilde = split_array(energy, bundle.mu, bundle.delta)
    bundle.sigma_tilde = np.sqrt(bundle.d_tilde)
    return bundle


def spatial_symbols(energy, kperp, boost):
    """Factorisation data of the symbol as a polynomial in ``k.n``."""
    kperp = np.asarray(kperp, dtype=float)
    _check(energy, kperp)
    ch2 = boost.cosh**2
    nu = np.sqrt(energy**2 + (np.sum(kperp**2, axis=-1) + boost.mass**2) / ch2)
    th = boost.tanh
    return SpatialSymbolBundle(
        nu=nu,
        nu_plus=ch2 * (nu + energy * th),
        nu_minus=ch2 * (nu - energy * th),
        k_plus=(nu - energy * th) * ch2,
        k_minus=(-nu - energy * th) * ch2,
    )


def sample_momenta(rng, n, boost, span=10.0):
    energy = rng.uniform(-span, span, n)
    kvec = rng.uniform(-span, span, (n, boost.dim - 1))
    return energy, kvec


@dataclass
class BoundReport:
    velocity: tuple
    n_samples: int
    violations: dict
    worst: dict
    offending: list
    sup_sequence: list = field(default_factory=list)
    sup_target: float = 0.0

    @property
    def total_violations(self):
        return int(sum(self.violations.values()))

    @property
    def sup_ok(self):
        if not self.sup_sequence:
            return True
        ratios = [r for _, r in self.sup_sequence]
        below = all(r < self.sup_target or self.sup_target == 0 for r in ratios)
        close = abs(ratios[-1] - self.sup_target) <= 0.01 * max(self.sup_target, 1e-300)
        return below and (close or self.sup_target == 0)

    @property
    def passed(self):
        return self.total_violations == 0 and self.sup_ok

    def to_dict(self):
        return {
            "velocity": list(self.velocity),
            "n_samples": self.n_samples,
            "violations": dict(self.violations),
            "worst": {k: float(v) for k, v in self.worst.items()},
            "sup_sequence": [[float(e), float(r)] for e, r in self.sup_sequence],
            "sup_target": float(self.sup_target),
            "passed": bool(self.passed),
        }


def _lt(a, b, strict):
    """a < b with a relative margin, or a <= b when equality is admissible."""
    scale = np.maximum(np.abs(a), np.abs(b))
    if strict:
        return a < b - STRICT_MARGIN * scale
    return a <= b + STRICT_MARGIN * scale


def bound_families(energy, mu, delta, cosh, sinh, strict):
    """Boolean masks (True = holds) for the five symbol-bound families."""
    d = propagator_array(energy, mu, delta)
    kt, lt = split_array(energy, mu, delta)
    c = 1.0 / (energy**2 + mu**2)
    absd = np.abs(d)
    ratio = np.abs(lt) / kt
    checks = {
        "K<=|D|": _lt(kt, absd, False),
        "|D|<=coshK": _lt(absd, cosh * kt, False),
        "C/2cosh^2<K<cosh^4C": _lt(0.5 * c / cosh**2, kt, True) & _lt(kt, cosh**4 * c, strict),
        "|L/K|<sinh": _lt(ratio, sinh, strict) if strict else ratio <= 0.0,
        "C/2cosh^2<|D|<cosh^5C": _lt(0.5 * c / cosh**2, absd, True) & _lt(absd, cosh**5 * c, strict),
    }
    worst = {
        "|D|/K": np.max(absd / kt),
        "|D|/(coshK)": np.max(absd / (cosh * kt)),
        "K/C": np.max(kt / c),
        "|L/K|": np.max(ratio),
        "|D|/C": np.max(absd / c),
        "min K/C": np.min(kt / c),
    }
    return checks, worst


def sup_sequence(boost, energies=(10.0, 100.0, 1000.0)):
    """|L/K| along k.n = |k| = -E cosh(eta)."""
    out = []
    for e in energies:
        kvec = -e * boost.cosh * boost.direction
        kt, lt = split_symbols((np.float64(e), kvec), boost)
        out.append((e, float(abs(lt / kt))))
    return out


def verify_symbol_bounds(samples, boost, sequence=(10.0, 100.0, 1000.0), keep=5):
    """Pointwise check of the symbol inequalities on a sample set.

    ``samples`` is a list of :class:`Momentum` or a pair ``(E, k)`` of arrays.
    Strict inequalities are relaxed to equalities only where they
    degenerate at zero velocity.
    """
    if isinstance(samples, (list, tuple)) and samples and isinstance(samples[0], Momentum):
        energy = np.array([s.energy for s in samples])
        kvec = np.array([s.kvec for s in samples])
    else:
        energy, kvec = samples
        energy = np.asarray(energy, dtype=float)
        kvec = np.asarray(kvec, dtype=float)
    if energy.size == 0:
        raise ValueError("empty sample set")
    _check(energy, kvec)
    mu, delta = mu_delta(kvec, boost)
    strict = boost.speed > 0
    checks, worst = bound_families(energy, mu, delta, boost.cosh, boost.sinh, strict)
    violations = {name: int(np.sum(~ok)) for name, ok in checks.items()}
    offending = []
    for name, ok in checks.items():
        for i in np.flatnonzero(~ok)[:keep]:
            offending.append({"family": name, "E": float(energy[i]), "k": np.atleast_1d(kvec[i]).tolist()})
    seq = sup_sequence(boost, sequence) if sequence else []
    return BoundReport(boost.velocity, int(energy.size), violations, worst, offending, seq, boost.sinh)
