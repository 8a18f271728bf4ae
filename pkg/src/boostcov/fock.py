"""Truncated Fock space for a polynomial self-interaction on a spatial circle.

Modes are ``k_n = 2 pi n / length`` for ``|n| <= K``; the basis is every
occupation vector with at most ``N`` particles.  The interaction
``int_0^length :P(phi(x)): dx`` is expanded into normal-ordered,
momentum-conserving monomials.  Annihilators act before creators, so the
product of truncated ladder matrices equals the compression of the exact
operator.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, expm

DIM_CAP = 20_000


@dataclass(frozen=True)
class FockTruncation:
    length: float
    mode_cutoff: int
    max_particles: int
    mass: float = 1.0
    cap: int = DIM_CAP

    def __post_init__(self):
        if self.length <= 0 or self.mass <= 0:
            raise ValueError("length and mass must be positive")
        if self.mode_cutoff < 0 or self.max_particles < 0:
            raise ValueError("cutoffs must be non-negative")
        if self.dimension > self.cap:
            raise ValueError(f"Fock dimension {self.dimension} exceeds the cap {self.cap}")

    @property
    def labels(self):
        return np.arange(-self.mode_cutoff, self.mode_cutoff + 1)

    @property
    def momenta(self):
        return 2 * np.pi * self.labels / self.length

    @property
    def energies(self):
        return np.sqrt(self.momenta**2 + self.mass**2)

    @property
    def dimension(self):
        m = 2 * self.mode_cutoff + 1
        return comb(m + self.max_particles, self.max_particles)

    @cached_property
    def basis(self):
        return _Basis.build(2 * self.mode_cutoff + 1, self.max_particles, self.labels)


@dataclass
class _Basis:
    occupations: np.ndarray
    keys: np.ndarray
    order: np.ndarray
    sector: np.ndarray
    number: np.ndarray
    radix: int

    @classmethod
    def build(cls, n_modes, n_max, labels):
        states = []

        def rec(prefix, left):
            if len(prefix) == n_modes:
                states.append(prefix)
                return
            for j in range(left + 1):
                rec(prefix + (j,), left - j)

        rec((), n_max)
        occ = np.array(states, dtype=np.int64).reshape(-1, n_modes)
        radix = n_max + 1
        keys = occ @ (radix ** np.arange(n_modes))
        return cls(occ, keys, np.argsort(keys), occ @ labels, occ.sum(axis=1), radix)

    def index(self, keys):
        pos = np.searchsorted(self.keys[self.order], keys)
        return self.order[pos]

    def annihilator(self, j):
        occ = self.occupations
        cols = np.nonzero(occ[:, j] > 0)[0]
        rows = self.index(self.keys[cols] - self.radix**j)
        vals = np.sqrt(occ[cols, j].astype(float))
        d = len(occ)
        return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))


@dataclass(frozen=True)
class PolySpec:
    """Coefficients c_p of sum_p c_p phi^p (index = power)."""

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        while c and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coefficients", c)
        if c and (len(c) % 2 == 0 or c[-1] < 0):
            raise ValueError("polynomial must have even degree with positive leading coefficient")

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @classmethod
    def phi4(cls, lam):
        return cls((0, 0, 0, 0, lam))


@dataclass
class FockOperatorSet:
    h_free: sp.csr_matrix
    momentum: sp.csr_matrix
    h_int: sp.csr_matrix
    ground_energy: float
    sector_index: np.ndarray
    trunc: FockTruncation
    poly: PolySpec
    sectors: dict = field(default_factory=dict, repr=False)

    @property
    def hamiltonian(self):
        d = self.h_free.shape[0]
        return (self.h_free + self.h_int - self.ground_energy * sp.identity(d)).tocsr()

    def sector_spectrum(self, label):
        """Eigenpairs of H restricted to the momentum sector ``label``."""
        if label not in self.sectors:
            idx = np.nonzero(self.sector_index == label)[0]
            block = (self.h_free + self.h_int)[idx][:, idx].toarray()
            w, v = eigh(block)
            self.sectors[label] = (idx, w - self.ground_energy, v)
        return self.sectors[label]

    def all_sectors(self):
        for label in np.unique(self.sector_index):
            yield int(label), self.sector_spectrum(int(label))

    def momentum_of(self, label):
        return 2 * np.pi * label / self.trunc.length

    def field(self, x):
        """phi(x) restricted to the truncated modes (dense)."""
        t = self.trunc
        out = np.zeros((t.dimension, t.dimension), dtype=complex)
        c = 1.0 / np.sqrt(2 * t.length * t.energies)
        for j, k in enumerate(t.momenta):
            a = t.basis.annihilator(j).toarray()
            out += c[j] * (a * np.exp(1j * k * x) + a.T * np.exp(-1j * k * x))
        return out


def _monomial_blocks(trunc, order):
    """B_j(q) = sum over ordered j-tuples with label sum q of prod c_n a_n."""
    basis = trunc.basis
    c = 1.0 / np.sqrt(2 * trunc.length * trunc.energies)
    ann = [c[j] * basis.annihilator(j) for j in range(len(c))]
    labels = trunc.labels
    blocks = [{0: sp.identity(trunc.dimension, format="csr")}]
    for _ in range(order):
        prev = blocks[-1]
        nxt = {}
        for q, b in prev.items():
            for j, n in enumerate(labels):
                term = ann[j] @ b
                if term.nnz:
                    key = int(q + n)
                    nxt[key] = nxt[key] + term if key in nxt else term
        blocks.append(nxt)
    return blocks


def interaction(trunc, poly):
    d = trunc.dimension
    out = sp.csr_matrix((d, d))
    if poly.degree < 1:
        return out
    blocks = _monomial_blocks(trunc, poly.degree)
    for p, coef in enumerate(poly.coefficients):
        if coef == 0.0 or p == 0:
            continue
        for j in range(p + 1):
            cre, ann = blocks[j], blocks[p - j]
            for q, b in ann.items():
                if q in cre:
                    out = out + (coef * trunc.length * comb(p, j)) * (cre[q].T @ b)
    out = out.tocsr()
    out.eliminate_zeros()
    return out


def build_operators(trunc, poly):
    occ = trunc.basis.occupations
    h_free = sp.diags(occ @ trunc.energies).tocsr()
    momentum = sp.diags(occ @ trunc.momenta).tocsr()
    h_int = interaction(trunc, poly)
    ops = FockOperatorSet(h_free, momentum, h_int, 0.0, trunc.basis.sector, trunc, poly)
    herm = abs(h_int - h_int.T).max() if h_int.nnz else 0.0
    if herm > 1e-12:
        raise RuntimeError(f"interaction is not Hermitian ({herm:.2e})")
    if trunc.basis.number.max() > trunc.max_particles:
        raise RuntimeError("basis exceeds the particle cap")
    e = min(spec[1][0] for _, spec in ops.all_sectors())
    ops.ground_energy = float(e)
    ops.sectors = {k: (i, w - e, v) for k, (i, w, v) in ops.sectors.items()}
    return ops


def commutator_norms(ops):
    """max |[P, H_int]| and |[P, H_free]| (both vanish when momentum is conserved)."""
    p = ops.momentum
    def size(m):
        return float(abs(m).max()) if m.nnz else 0.0
    return {"int": size(p @ ops.h_int - ops.h_int @ p), "free": size(p @ ops.h_free - ops.h_free @ p)}


# -- spectrum condition --------------------------------------------------------

def spectrum_condition(ops, v_list, tol=1e-8):
    rows = []
    for v in v_list:
        if not abs(v) < 1:
            raise ValueError("|v| must be below 1")
        eps = (1 - abs(v)) / 2
        vals = []
        ph_ok = True
        ph_worst = 0.0
        for label, (_, w, _) in ops.all_sectors():
            p = ops.momentum_of(label)
            hv = w + v * p
            vals.extend((label, float(h)) for h in hv)
            viol = (eps * p) ** 2 - hv**2
            ph_worst = max(ph_worst, float(viol.max()))
            ph_ok &= bool(np.all(viol <= 1e-9 * max(1.0, p * p)))
        vals.sort(key=lambda r: r[1])
        min_label, min_val = vals[0]
        gap = vals[1][1] - min_val if len(vals) > 1 else float("nan")
        idx, _, vec = ops.sector_spectrum(min_label)
        ground = np.zeros(ops.trunc.dimension)
        ground[idx] = vec[:, 0]
        p_residual = float(np.linalg.norm(ops.momentum @ ground))
        rows.append({
            "v": v, "min_eigenvalue": min_val, "ground_sector": min_label, "gap": gap,
            "p_omega_residual": p_residual, "ph_bound_epsilon": eps, "ph_bound_ok": ph_ok,
            "ph_bound_worst": ph_worst,
            "passed": bool(min_val >= -tol and min_label == 0 and ph_ok),
        })
    return {"ground_energy": ops.ground_energy, "dimension": ops.trunc.dimension,
            "rows": rows, "passed": all(r["passed"] for r in rows)}


def spectrum_rows(ops, v=0.0):
    """(sector label, index, eigenvalue of H + vP) for CSV dumps."""
    out = []
    for label, (_, w, _) in ops.all_sectors():
        p = ops.momentum_of(label)
        out.extend((label, i, float(h + v * p)) for i, h in enumerate(w))
    return out


# -- heat kernel, Gibbs state, KMS ---------------------------------------------

def dense_eigensystem(ops, v=0.0):
    d = ops.trunc.dimension
    vals = np.zeros(d)
    vecs = np.zeros((d, d))
    pos = 0
    for label, (idx, w, v_sec) in ops.all_sectors():
        n = len(idx)
        vals[pos:pos + n] = w + v * ops.momentum_of(label)
        vecs[idx, pos:pos + n] = v_sec
        pos += n
    return vals, vecs


@dataclass
class GibbsState:
    beta: float
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def weights(self):
        w = np.exp(-self.beta * (self.energies - self.energies.min()))
        return w / w.sum()

    @property
    def log_partition(self):
        e0 = self.energies.min()
        return float(-self.beta * e0 + np.log(np.sum(np.exp(-self.beta * (self.energies - e0)))))

    def to_eigen(self, a):
        return self.vectors.T @ a @ self.vectors

    def expect(self, a):
        return complex(np.sum(self.weights * np.diag(self.to_eigen(a))))

    def correlation(self, a, b, z):
        """<A tau_z(B)> with tau_z(B) = e^{izH} B e^{-izH}, continued in the eigenbasis."""
        ae, be = self.to_eigen(a), self.to_eigen(b)
        e = self.energies - self.energies.min()
        phase = np.exp(1j * z * e)
        # weights_i A_ij e^{iz e_j} B_ji e^{-iz e_i}
        left = self.weights * np.exp(-1j * z * e)
        return complex(np.einsum("i,ij,j,ji->", left, ae, phase, be))

    def reversed_correlation(self, a, b, t):
        """<tau_t(B) A>."""
        ae, be = self.to_eigen(a), self.to_eigen(b)
        e = self.energies - self.energies.min()
        phase = np.exp(1j * t * e)
        return complex(np.einsum("j,j,ji,i,ij->", self.weights, phase, be, np.conj(phase), ae))


def heat_kernel(ops, t, v=0.0):
    if t <= 0:
        raise ValueError("t must be positive")
    vals, vecs = dense_eigensystem(ops, v)
    return (vecs * np.exp(-t * vals)) @ vecs.T, vals


def free_partition_product(trunc, beta, v):
    rates = trunc.energies + v * trunc.momenta
    return float(np.prod(1.0 / -np.expm1(-beta * rates)))


def particle_cap_budget(trunc, beta, v):
    """Upper bound on the relative loss from dropping states with more than N particles."""
    rates = trunc.energies + v * trunc.momenta
    x = float(np.exp(-beta * rates.min()))
    m = len(rates)
    head = sum(comb(m + p - 1, p) * x**p for p in range(trunc.max_particles + 1))
    return (1 - x) ** (-m) - head


def exact_capped_partition(trunc, beta, v):
    """Z restricted to <= N particles, from the generating polynomial in the particle number."""
    rates = trunc.energies + v * trunc.momenta
    n = trunc.max_particles
    poly = np.zeros(n + 1)
    poly[0] = 1.0
    for r in rates:
        geo = np.exp(-beta * r * np.arange(n + 1))
        poly = np.convolve(poly, geo)[: n + 1]
    return float(poly.sum())


def heat_kernel_and_gibbs(ops, beta, v=0.0, n_pairs=5, seed=0, t_samples=(0.0, 0.7, -1.3)):
    if beta <= 0:
        raise ValueError("beta must be positive")
    vals, vecs = dense_eigensystem(ops, v)
    state = GibbsState(beta, vals, vecs)
    hk, _ = heat_kernel(ops, beta, v)
    report = {
        "beta": beta, "v": v,
        "trace_residual": float(abs(np.trace(hk) - np.sum(np.exp(-beta * vals)))),
        "normalization": float(state.expect(np.eye(len(vals))).real),
    }
    rng = np.random.default_rng(seed)
    d = len(vals)
    kms = 0.0
    cyc = 0.0
    for _ in range(n_pairs):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        scale = np.linalg.norm(a, 2) * np.linalg.norm(b, 2)
        for t in t_samples:
            kms = max(kms, abs(state.correlation(a, b, t + 1j * beta) - state.reversed_correlation(a, b, t)) / scale)
        # invariance under the adjoint time evolution
        u = (vecs * np.exp(1j * 0.9 * (vals - vals.min()))) @ vecs.T
        cyc = max(cyc, abs(state.expect(u @ a @ u.conj().T) - state.expect(a)) / np.linalg.norm(a, 2))
    report["kms_residual"] = kms
    report["invariance_residual"] = cyc
    if ops.poly.degree < 1:
        z_trunc = float(np.sum(np.exp(-beta * vals)))
        z_prod = free_partition_product(ops.trunc, beta, v)
        z_capped = exact_capped_partition(ops.trunc, beta, v)
        rel = (z_prod - z_trunc) / z_prod
        budget = particle_cap_budget(ops.trunc, beta, v)
        report.update({
            "z_truncated": z_trunc, "z_product": z_prod, "z_capped_exact": z_capped,
            "cap_rel_error": rel, "cap_budget": budget,
            "capped_match": abs(z_trunc - z_capped) / z_capped,
            "product_ok": bool(0 <= rel <= budget * (1 + 1e-9) and abs(z_trunc - z_capped) <= 1e-12 * z_capped),
        })
    return report, state


def gibbs_field_correlation(ops, beta, v, tau, x):
    """Tr(e^{-(beta - tau) H_v} phi(x) e^{-tau H_v} phi(0)) / Z for 0 <= tau <= beta."""
    vals, vecs = dense_eigensystem(ops, v)
    e = vals - vals.min()
    fx = vecs.T @ ops.field(x) @ vecs
    f0 = vecs.T @ ops.field(0.0) @ vecs
    w = np.exp(-beta * e)
    z = w.sum()
    inner = np.exp(-(beta - tau) * e)[:, None] * fx * np.exp(-tau * e)[None, :]
    return complex(np.sum(inner * f0.T) / z)


# -- analyticity in v -------------------------------------------------------------

def _op_norm(m):
    return float(np.linalg.norm(m, 2))


def analyticity_check(ops, t, gamma, eps, n_max):
    if not 0 < gamma < 1:
        raise ValueError("need 0 < Gamma < 1")
    if not 0 < eps < 1 - gamma:
        raise ValueError("need 0 < eps < 1 - Gamma")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    hk, _ = heat_kernel(ops, t, 0.0)
    p = ops.momentum.toarray()
    hf = ops.h_free.toarray()
    a_gen = -t * (eps * hf + ops.h_int.toarray() - ops.ground_energy * np.eye(len(hf)))
    e_a = float(np.exp(np.linalg.eigvalsh(a_gen).max()))
    bound_ratio = gamma / (1 - eps)
    terms, roots = [], []
    power = np.eye(len(hf))
    fact = 1.0
    ok = True
    for n in range(n_max + 1):
        if n:
            power = power @ (t * p)
            fact *= n
        term = _op_norm(power @ hk) * gamma**n / fact
        terms.append(term)
        ok &= term <= bound_ratio**n * e_a * (1 + 1e-10)
        if n:
            roots.append((term / e_a) ** (1.0 / n))
    return {"terms": terms, "exp_a_norm": e_a, "ratio_bound": bound_ratio,
            "normalized_roots": roots, "passed": bool(ok)}


def lemma_triple(rng, dim=12, blocks=3):
    """Random (A, B, C): B, C diagonal; A Hermitian and block diagonal in C's eigenspaces."""
    sizes = np.diff(np.sort(np.concatenate([[0, dim], rng.choice(np.arange(1, dim), blocks - 1, replace=False)])))
    cvals = np.repeat(rng.normal(size=blocks), sizes)
    a = np.zeros((dim, dim), dtype=complex)
    bvals = np.zeros(dim)
    pos = 0
    for s, cv in zip(sizes, cvals[np.cumsum(sizes) - 1]):
        x = rng.normal(size=(s, s)) + 1j * rng.normal(size=(s, s))
        a[pos:pos + s, pos:pos + s] = 0.5 * (x + x.conj().T)
        bvals[pos:pos + s] = rng.normal(size=s)
        pos += s
    # B must also commute with C; diagonal does, and A + B inherits C's blocks
    return a, np.diag(bvals), np.diag(cvals)


def lemma_bound_check(n_trials=1000, seed=0):
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_trials):
        a, b, c = lemma_triple(rng)
        lhs = _op_norm(c @ expm(a + b))
        rhs = _op_norm(expm(a)) * _op_norm(c @ expm(b))
        worst = max(worst, lhs / rhs)
    return {"trials": n_trials, "worst_ratio": float(worst), "passed": bool(worst <= 1 + 1e-12)}


# -- quadratic oracle --------------------------------------------------------------

def tensor_hamiltonian(trunc, shift):
    """H_free + (shift/2) int :phi^2: built on per-mode oscillators, then projected to <= N."""
    n = trunc.max_particles
    m = len(trunc.labels)
    a1 = np.diag(np.sqrt(np.arange(1, n + 1)), 1)
    eye = np.eye(n + 1)

    def embed(op, j):
        out = np.array([[1.0]])
        for i in range(m):
            out = np.kron(out, op if i == j else eye)
        return out

    ann = [embed(a1, j) for j in range(m)]
    mu = trunc.energies
    labels = list(trunc.labels)
    h = sum(mu[j] * ann[j].T @ ann[j] for j in range(m))
    for j, lab in enumerate(labels):
        r = labels.index(-lab)
        g = shift / (4 * mu[j])
        h = h + g * (ann[j] @ ann[r] + ann[j].T @ ann[r].T + 2 * ann[j].T @ ann[j])
    occ = np.array(np.unravel_index(np.arange((n + 1) ** m), (n + 1,) * m)).T
    keep = np.nonzero(occ.sum(axis=1) <= n)[0]
    return h[np.ix_(keep, keep)], occ[keep]


def quadratic_spectrum(trunc, shift, n_levels=10):
    """Untruncated mass-shift model: E0 = sum((w - mu)/2 - shift/(4 mu)), levels E0 + sum n w."""
    mu = trunc.energies
    w = np.sqrt(mu**2 + shift)
    e0 = float(np.sum(0.5 * (w - mu) - shift / (4 * mu)))
    levels = [0.0]
    frontier = {(): 0.0}
    for _ in range(n_levels):
        new = {}
        for key, val in frontier.items():
            for j, wj in enumerate(w):
                nk = tuple(sorted(key + (j,)))
                new[nk] = val + wj
        levels.extend(new.values())
        frontier = new
    return e0, w, e0 + np.sort(np.array(levels))[: n_levels]


# -- Gaussian Feynman-Kac ------------------------------------------------------------

def fk_gaussian_check(T, f, g, trunc, boost, poly=None, sign="+"):
    """Quantum <f^, e^{-T mu_pm} g^> vs classical <f, theta D T(T) g> on the circle modes.

    ``f`` and ``g`` are TestFunctions whose spatial part is a SpatialFunction
    on ``trunc``'s modes.  The classical side integrates the symbol over
    energies against the exact Fourier transforms of the time profiles.
    """
    from .rp import Sharp
    from .symbols import propagator_array
    from .kernels import gauss_legendre_panels, mode_time_profile

    if poly is not None and poly.degree > 0:
        raise ValueError("only the Gaussian case P = 0 is supported")
    if T < 0:
        raise ValueError("T must be non-negative")
    k = trunc.momenta
    for h in (f, g):
        if not np.allclose(h.space.modes, k):
            raise ValueError("spatial parts must live on the truncation's modes")
        if h.time.support[0] < 0:
            raise ValueError("test functions must be supported at positive times")
    mu = trunc.energies
    delta = k * boost.velocity[0]
    rate = mu + delta if sign == "+" else mu - delta
    spatial = f.space.weights * np.conj(f.space.coeffs) * g.space.coeffs
    quantum = np.sum(spatial * np.conj(f.time.laplace(rate)) * np.exp(-T * rate) * g.time.laplace(rate) / (2 * mu))
    if isinstance(f.time, Sharp) and isinstance(g.time, Sharp):
        s = f.time.point + g.time.point + T
        prof = mode_time_profile(-s if sign == "+" else s, k, boost)
        classical = np.sum(spatial * np.conj(f.time.amp) * g.time.amp * prof)
    else:
        width = min(f.time.width, g.time.width)
        cut = 12.0 / width
        e, w = gauss_legendre_panels(-cut, cut, min(1.0, 0.25 / (T + f.time.center + g.time.center + 1)), 16)
        d = propagator_array(e[:, None], mu[None, :], delta[None, :])
        classical = _fk_classical(f, g, T, e, w, d, spatial, -1.0 if sign == "+" else 1.0)
    dev = abs(quantum - classical) / max(abs(quantum), 1e-300)
    return {"T": T, "quantum": complex(quantum), "classical": complex(classical), "rel_dev": float(dev)}


def _fk_classical(f, g, T, e, w, d, spatial, s):
    """Reflected pairing with time argument s (t + t' + T), integrated over energies.

    int conj(a_f(t)) e^{iEst} dt = conj(a_f~(E s)) and int a_g(t') e^{iEst'} dt' = a_g~(-E s).
    """
    temporal = (w / (2 * np.pi)) * np.exp(1j * e * s * T) * np.conj(f.time.ft(e * s)) * g.time.ft(-e * s)
    return np.sum(temporal[:, None] * d * spatial[None, :])


def gibbs_torus_check(ops, beta, v, points):
    """Free Gibbs correlation of H + vP against the '+' torus kernel on the same modes."""
    from .periodize import CompactSpec, SpatialLattice, torus_kernel
    from .symbols import BoostSpec

    if ops.poly.degree > 0:
        raise ValueError("the torus kernel is the free two-point function; use P = 0")
    t = ops.trunc
    spec = CompactSpec(beta, BoostSpec.create(t.mass, v), (t.length,))
    lat = SpatialLattice.build((t.length,), t.mode_cutoff)
    worst = 0.0
    for tau, x in points:
        quantum = gibbs_field_correlation(ops, beta, v, tau, x)
        classical = torus_kernel(np.array([tau]), 0.0, np.array([[x]]), spec, "+", lattice=lat)[0][0, 0]
        worst = max(worst, abs(quantum - classical) / abs(classical))
    return {"max_rel_dev": worst, "cap_budget": particle_cap_budget(t, beta, v)}
