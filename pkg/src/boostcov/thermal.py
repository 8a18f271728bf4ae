"""One-particle thermal (doubled) structure on a symmetric mode lattice.

A doubled vector is a pair ``(a, b)`` of coefficient arrays over the same
symmetric set of modes.  ``a`` is an ordinary -1/2 Sobolev vector; ``b``
holds the Fourier coefficients of the complex-conjugate *function* of the
conjugate-space element, so ``b_k = conj(x_{-k})`` for the element
``conj(x)``.  In this representation the conjugate-space inner product
``<conj x, conj y> = <y, x>`` becomes the ordinary one on ``b`` and the
conjugate of ``mu_pm`` acts as ``mu_mp``.

Conventions (``sign`` picks the upper or lower index):

* ``kappa(alpha)   = ((1 + rho)^(1/2) alpha, C(rho^(1/2) alpha))``
* ``kappa'(alpha)  = (rho^(1/2) alpha, C((1 + rho)^(1/2) alpha))``
* ``exp(-s ell)`` multiplies ``a`` by ``exp(-s mu_pm)`` and ``b`` by ``exp(s mu_mp)``
* ``j(a, b) = (-C(b), -C(a))``

where ``C`` is :func:`conj_fn`.
"""

from dataclasses import dataclass

import numpy as np

from .rp import Bump, SpatialFunction, momentum_nodes, sobolev_half_inner


def _check_sign(sign):
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")


def reflect_index(modes, atol=1e-9):
    """Permutation p with modes[p] == -modes; raises if the lattice is not symmetric."""
    modes = np.asarray(modes, dtype=float)
    order = np.argsort(modes)
    target = np.argsort(-modes)
    if not np.allclose(modes[order], -modes[target], atol=atol * max(1.0, np.max(np.abs(modes)))):
        raise ValueError("mode set is not symmetric under k -> -k")
    p = np.empty(len(modes), dtype=int)
    p[target] = order
    return p


def conj_fn(a):
    """Fourier coefficients of the pointwise complex conjugate."""
    p = reflect_index(a.modes)
    return SpatialFunction(a.modes, np.conj(a.coeffs[p]), a.weights, a.mass)


@dataclass
class DoubledVector:
    analytic: SpatialFunction
    conjugate: SpatialFunction

    def __post_init__(self):
        if not self.analytic.same_grid(self.conjugate):
            raise ValueError("both slots must share the mode lattice")

    def inner(self, other):
        return sobolev_half_inner(self.analytic, other.analytic) + sobolev_half_inner(self.conjugate, other.conjugate)

    def norm(self):
        return float(np.sqrt(self.inner(self).real))

    def __add__(self, other):
        return DoubledVector(self.analytic + other.analytic, self.conjugate + other.conjugate)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, factor):
        return DoubledVector(self.analytic.scaled(factor), self.conjugate.scaled(factor))

    def slotwise(self, fa, fb):
        return DoubledVector(self.analytic.scaled(fa), self.conjugate.scaled(fb))

    def distance(self, other):
        d = self - other
        return float(np.max(np.abs(np.concatenate([d.analytic.coeffs, d.conjugate.coeffs])), initial=0.0))


# -- per-mode data -------------------------------------------------------------

def hamiltonians(modes, spec, sign):
    """(mu_sign, mu_-sign) on the modes."""
    _check_sign(sign)
    k = np.asarray(modes, dtype=float)
    mu = np.sqrt(k**2 + spec.boost.mass**2)
    delta = k * spec.boost.velocity[0]
    return (mu + delta, mu - delta) if sign == "+" else (mu - delta, mu + delta)


def bose(rate, beta):
    x = beta * np.asarray(rate)
    rho = np.exp(-x) / -np.expm1(-x)
    return rho, 1.0 / -np.expm1(-x)


def mode_lattice(length, cutoff, mass=1.0):
    """Empty SpatialFunction on the symmetric lattice 2 pi n / length, |n| <= cutoff."""
    n = np.arange(-cutoff, cutoff + 1)
    return SpatialFunction(2 * np.pi * n / length, np.zeros(len(n)), np.full(len(n), 1.0 / length), mass)


def random_alpha(rng, lattice, real=False):
    c = rng.normal(size=len(lattice.modes)) + 1j * rng.normal(size=len(lattice.modes))
    c = c * np.exp(-0.05 * lattice.modes**2)
    a = SpatialFunction(lattice.modes, c, lattice.weights, lattice.mass)
    if real:
        a = SpatialFunction(a.modes, 0.5 * (a.coeffs + conj_fn(a).coeffs), a.weights, a.mass)
    return a


# -- doubling maps ---------------------------------------------------------------

def doubling_maps(alpha, spec, sign):
    mu_s, _ = hamiltonians(alpha.modes, spec, sign)
    rho, one_rho = bose(mu_s, spec.beta)
    kappa = DoubledVector(alpha.scaled(np.sqrt(one_rho)), conj_fn(alpha.scaled(np.sqrt(rho))))
    kappa_p = DoubledVector(alpha.scaled(np.sqrt(rho)), conj_fn(alpha.scaled(np.sqrt(one_rho))))
    return kappa, kappa_p


def liouvillian_translate(u, s, spec, sign, check_strip=True):
    """exp(-s ell) applied slotwise.  Complex ``s`` must satisfy 0 <= Re s <= beta."""
    s = complex(s)
    if check_strip and s.imag != 0 and not (0 <= s.real <= spec.beta):
        raise ValueError("complex translation outside the strip 0 <= Re s <= beta")
    mu_s, mu_o = hamiltonians(u.analytic.modes, spec, sign)
    return u.slotwise(np.exp(-s * mu_s), np.exp(s * mu_o))


def liouvillian_spectrum(modes, spec, sign):
    mu_s, mu_o = hamiltonians(modes, spec, sign)
    vals = np.concatenate([mu_s, -mu_o])
    gap = spec.boost.gap
    return {"min_abs": float(np.min(np.abs(vals))), "gap": gap,
            "passed": bool(np.min(np.abs(vals)) >= gap * (1 - 1e-15))}


def modular_conjugation(u):
    return DoubledVector(conj_fn(u.conjugate).scaled(-1.0), conj_fn(u.analytic).scaled(-1.0))


# -- quantization --------------------------------------------------------------

def _symmetric_grid(f, cutoff=None):
    if isinstance(f.space, SpatialFunction):
        return f.space.modes, f.space.weights
    sp = f.space
    cutoff = cutoff or abs(sp.freq) + 9.0 / sp.width
    return momentum_nodes(cutoff, width=min(2.0, 4.0 / (1.0 + abs(sp.center))))


def thermal_quantize(f, spec, sign, grid=None, mass=None):
    """int_0^(beta/2) exp(-t ell) kappa(f_t) dt for a separable member."""
    lo, hi = f.time.support
    if lo < 0 or hi > spec.beta / 2:
        raise ValueError("thermal quantization needs support in [0, beta/2]")
    k, w = grid if grid is not None else _symmetric_grid(f)
    mu_s, _ = hamiltonians(k, spec, sign)
    rho, one_rho = bose(mu_s, spec.beta)
    b = f.spatial_ft(k)
    m = spec.boost.mass if mass is None else mass
    first = SpatialFunction(k, np.sqrt(one_rho) * b * f.time.laplace(mu_s), w, m)
    second = SpatialFunction(k, np.sqrt(rho) * b * f.time.laplace(-mu_s), w, m)
    return DoubledVector(first, conj_fn(second))


def theta_cylinder_mode(s_sum, modes, spec, sign):
    """Per-mode reflected cylinder factor ((1+rho)e^{-s mu} + rho' e^{s mu'})/(2 mu)."""
    mu_s, mu_o = hamiltonians(modes, spec, sign)
    _, one_rho = bose(mu_s, spec.beta)
    rho_o, _ = bose(mu_o, spec.beta)
    mu = 0.5 * (mu_s + mu_o)
    return (one_rho * np.exp(-s_sum * mu_s) + rho_o * np.exp(s_sum * mu_o)) / (2 * mu)


def sharp_time_inner(s, alpha, sp, alpha_p, spec, sign):
    if not (0 <= s <= spec.beta / 2 and 0 <= sp <= spec.beta / 2):
        raise ValueError("sharp times must lie in [0, beta/2]")
    if not alpha.same_grid(alpha_p):
        raise ValueError("spatial functions live on different grids")
    fac = theta_cylinder_mode(s + sp, alpha.modes, spec, sign)
    return complex(np.sum(alpha.weights * np.conj(alpha.coeffs) * fac * alpha_p.coeffs))


def sharp_slice(alpha, s, spec, sign):
    """exp(-s ell) kappa(alpha)."""
    return liouvillian_translate(doubling_maps(alpha, spec, sign)[0], s, spec, sign)


# -- checks ------------------------------------------------------------------------

def one_particle_kms_check(alpha, alpha_p, s_samples, spec, sign, tol=1e-10):
    """|<k a, exp((is - beta) ell) k a'> - <exp(is ell) k a', k a>| per real s."""
    ka, _ = doubling_maps(alpha, spec, sign)
    kp, _ = doubling_maps(alpha_p, spec, sign)
    scale = ka.norm() * kp.norm()
    res = []
    for s in np.atleast_1d(s_samples):
        lhs = ka.inner(liouvillian_translate(kp, spec.beta - 1j * s, spec, sign))
        rhs = liouvillian_translate(kp, -1j * s, spec, sign).inner(ka)
        res.append(abs(lhs - rhs))
    res = np.array(res)
    return {"max_residual": float(res.max()), "scale": scale, "residuals": res.tolist(),
            "passed": bool(res.max() <= tol * max(scale, 1.0))}


@dataclass
class ModularData:
    liouvillian: tuple
    spec: object
    sign: str

    @classmethod
    def build(cls, modes, spec, sign):
        mu_s, mu_o = hamiltonians(modes, spec, sign)
        return cls((mu_s, -mu_o), spec, sign)

    def j(self, u):
        return modular_conjugation(u)

    def delta_half(self, u):
        return liouvillian_translate(u, self.spec.beta / 2, self.spec, self.sign)

    def s(self, u):
        return self.j(self.delta_half(u))


def modular_check(spec, sign, spanning_set, tol=1e-12):
    """j o kappa = -kappa', j^2 = 1, delta^(1/2) kappa = kappa' and the polar identity.

    ``spanning_set`` is a list of (alpha, alpha') pairs; the Tomita map is
    fixed by s(kappa a + i kappa a') = -kappa a + i kappa a'.
    """
    out = {"j_kappa": 0.0, "j_squared": 0.0, "delta_kappa": 0.0, "polar": 0.0}
    for alpha, alpha_p in spanning_set:
        md = ModularData.build(alpha.modes, spec, sign)
        ka, kpa = doubling_maps(alpha, spec, sign)
        kb, _ = doubling_maps(alpha_p, spec, sign)
        out["j_kappa"] = max(out["j_kappa"], md.j(ka).distance(kpa.scaled(-1.0)))
        u = ka + kb.scaled(1j)
        out["j_squared"] = max(out["j_squared"], md.j(md.j(u)).distance(u))
        out["delta_kappa"] = max(out["delta_kappa"], md.delta_half(ka).distance(kpa))
        expected = ka.scaled(-1.0) + kb.scaled(1j)
        out["polar"] = max(out["polar"], md.s(u).distance(expected))
    out["j_kappa_exact"] = out["j_kappa"] == 0.0
    out["passed"] = out["j_kappa_exact"] and all(out[k] <= tol for k in ("j_squared", "delta_kappa", "polar"))
    return out


def sharp_time_density_check(s1, s2, spec, lattice, sign="+"):
    """Smallest singular value of (alpha_1, alpha_2) -> sum_i exp(-s_i ell) kappa(alpha_i).

    The map is block diagonal in pairs (k, -k): on mode k it sends
    (alpha_1(k), alpha_2(k)) to (slot-1 at k, conj of slot-2 at -k), a
    complex 2x2 matrix.  One slice alone gives a 2x1 block (rank 1).
    """
    if s1 == s2:
        raise ValueError("the two slices must be at distinct times")
    if not (0 <= s1 < s2 <= spec.beta / 2):
        raise ValueError("need 0 <= s1 < s2 <= beta/2")
    mu_s, _ = hamiltonians(lattice.modes, spec, sign)
    rho, one_rho = bose(mu_s, spec.beta)
    svals = []
    single_rank = []
    for i in range(len(mu_s)):
        a = [np.exp(-s * mu_s[i]) * np.sqrt(one_rho[i]) for s in (s1, s2)]
        b = [np.exp(s * mu_s[i]) * np.sqrt(rho[i]) for s in (s1, s2)]
        block = np.array([a, b])
        block = block / np.linalg.norm(block, axis=1, keepdims=True)
        sv = np.linalg.svd(block, compute_uv=False)
        svals.append(sv[-1])
        single_rank.append(np.linalg.matrix_rank(block[:, :1]))
    m = spec.boost.gap
    return {
        "min_singular_value": float(min(svals)),
        "contraction": float(np.exp(-2 * (s2 - s1) * m)),
        "one_minus_contraction": float(1 - np.exp(-2 * (s2 - s1) * m)),
        "single_slice_rank": int(max(single_rank)),
        "passed": bool(min(svals) > 0),
    }


def two_point_continued(alpha, alpha_p, z, spec, sign):
    """F(z) = <kappa a, exp(i z ell) kappa a'>, continued per mode for 0 <= Im z <= beta."""
    z = complex(z)
    if not (0 <= z.imag <= spec.beta):
        raise ValueError("continuation outside the strip 0 <= Im z <= beta")
    ka, _ = doubling_maps(alpha, spec, sign)
    kp, _ = doubling_maps(alpha_p, spec, sign)
    return ka.inner(liouvillian_translate(kp, -1j * z, spec, sign))


def thermal_two_point(alpha, alpha_p, t_p, spec, sign, t_samples=None):
    """G(t') = <kappa a, exp(i t' ell) kappa a'> with KMS and commutator residuals."""
    ka, _ = doubling_maps(alpha, spec, sign)
    kp, _ = doubling_maps(alpha_p, spec, sign)
    value = ka.inner(liouvillian_translate(kp, -1j * t_p, spec, sign))
    ts = np.linspace(-5, 5, 41) if t_samples is None else np.atleast_1d(t_samples)
    kms = []
    for t in ts:
        f_up = two_point_continued(alpha, alpha_p, t + 1j * spec.beta, spec, sign)
        f_tilde = liouvillian_translate(kp, -1j * t, spec, sign).inner(ka)
        kms.append(abs(f_up - f_tilde))
    mu_s, _ = hamiltonians(alpha.modes, spec, sign)
    rho, one_rho = bose(mu_s, spec.beta)
    weight = rho + one_rho  # coth(beta mu / 2)
    mu = np.sqrt(alpha.modes**2 + spec.boost.mass**2)
    printed = np.sum(alpha.weights * np.conj(alpha.coeffs) * weight * np.exp(1j * t_p * mu_s) * alpha_p.coeffs / (2 * mu))
    return {
        "value": complex(value),
        "coth_half_form": complex(printed),
        "kms_residual": float(max(kms)),
        "commutator_residual": commutator_residual(alpha, alpha_p, 0.3, 0.7, spec, sign),
    }


def commutator_residual(alpha, alpha_p, s, sp, spec, sign):
    """Difference of the two orderings whose equality makes [phi(-s, conj a), phi'(s', a')] vanish."""
    ka, _ = doubling_maps(alpha, spec, sign)
    _, kpp = doubling_maps(alpha_p, spec, sign)
    lhs = liouvillian_translate(ka, -1j * s, spec, sign).inner(liouvillian_translate(kpp, -1j * sp, spec, sign))
    # complex conjugation of the test function exchanges the two sectors
    other = "-" if sign == "+" else "+"
    kc, _ = doubling_maps(conj_fn(alpha), spec, other)
    _, kpc = doubling_maps(conj_fn(alpha_p), spec, other)
    rhs = liouvillian_translate(kpc, 1j * sp, spec, other).inner(liouvillian_translate(kc, 1j * s, spec, other))
    return float(abs(lhs - rhs))


def thermal_gram(members, spec, sign, grid=None):
    """Gram matrix of thermal quantizations on a common symmetric grid."""
    if grid is None:
        widths = [m.space.width for m in members if isinstance(m.space, Bump)]
        cutoff = 9.0 / min(widths) + max(abs(m.space.freq) for m in members)
        grid = momentum_nodes(cutoff, width=0.5)
    q = [thermal_quantize(f, spec, sign, grid) for f in members]
    return np.array([[a.inner(b) for b in q] for a in q])
