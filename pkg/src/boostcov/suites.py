"""Verification suites shared by the CLI and the acceptance tests.

Every suite takes its section of the run configuration, a seed and a
worker count, and returns a :class:`SuiteResult`: a list of named checks
plus optional tabular dumps and plot data.  Nothing time-dependent goes
into the checks so that reports are reproducible byte for byte.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fock, gaussian, kernels, periodize, rp, symbols, thermal


@dataclass
class Check:
    name: str
    anchor: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "anchor": self.anchor, "passed": bool(self.passed), "details": self.details}


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)
    dumps: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)

    def add(self, name, anchor, passed, /, **details):
        details.pop("passed", None)
        self.checks.append(Check(name, anchor, bool(passed), details))

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self):
        return {"suite": self.name, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _boost(mass, v, dim=2):
    return symbols.BoostSpec.create(mass, v, dim)


# -- symbols -----------------------------------------------------------------

def run_symbols(cfg, seed, jobs=1):
    res = SuiteResult("symbols")
    rng = np.random.default_rng(seed)
    rows = []
    for dim in cfg["dims"]:
        for v in cfg["velocities"]:
            b = _boost(cfg["mass"], v, dim)
            rep = symbols.verify_symbol_bounds(symbols.sample_momenta(rng, cfg["samples"], b, cfg["span"]), b)
            d = rep.to_dict()
            res.add(f"bounds d={dim} v={v:+.1f}", "five symbol bound families and sup |L/K| -> sinh(eta)",
                    rep.passed, violations=d["violations"], sup_sequence=d["sup_sequence"],
                    sinh_eta=d["sup_target"])
            last = d["sup_sequence"][-1][1] if d["sup_sequence"] else 0.0
            rows.append((dim, v, last, d["sup_target"]))
    res.plots["sup_ratio"] = rows
    return res


# -- kernels -----------------------------------------------------------------

def run_kernels(cfg, seed, jobs=1):
    res = SuiteResult("kernels")
    n = cfg["grid"]
    for v in cfg["velocities"]:
        b = _boost(cfg["mass"], v)
        out = kernels.kernel_duality(b, n_t=n, n_x=n)
        res.add(f"duality v={v:+.1f}", "quadrature kernel equals FFT of the symbol", out["rel_err"] <= cfg["tol"],
                rel_err=out["rel_err"], grid=[n, n])
        t = np.concatenate([-out["t"][::-1], out["t"]])
        grid = kernels.GridSpec(t, out["x"])
        sym = kernels.verify_kernel_symmetries(kernels.kernel_continuum(grid, b))
        res.add(f"symmetries v={v:+.1f}", "evenness and reflection conjugation of the kernel", sym.passed,
                **{k: v_ for k, v_ in sym.to_dict().items() if k != "passed"})
        if v == cfg["velocities"][-1]:
            res.dumps[f"kernel_v{v:+.1f}"] = ("kernel", out["t"], out["x"], out["quad"])
            res.plots["kernel"] = (out["t"], out["x"], out["quad"], v)
    return res


# -- reflection positivity -------------------------------------------------------

def _gram_job(args):
    seed, v, half, refl, mass, members = args
    fam = rp.random_family(seed, members, half)
    rep = rp.gram_reflection(fam, refl, _boost(mass, v))
    return rep.to_dict(), rep.eigenvalues.tolist()


def _iso_job(args):
    seed, v, half, mass, members = args
    return rp.verify_isometry(rp.random_family(seed, members, half), _boost(mass, v))["rel_dev"]


def run_rp(cfg, seed, jobs=1):
    res = SuiteResult("rp")
    seeds = [seed + s for s in cfg["seeds"]]
    halves = (("positive_time", "theta"), ("positive_x1", "pi_n"))
    jobs_list = [(s, v, h, r, cfg["mass"], cfg["members"]) for s in seeds for v in cfg["velocities"] for h, r in halves]
    grams = _map(_gram_job, jobs_list, jobs)
    spectra = {}
    for (s, v, h, r, *_), (d, ev) in zip(jobs_list, grams):
        res.add(f"gram {r} seed={s} v={v:+.1f}", "Gram matrix of reflected covariance is positive semidefinite",
                d["verdict"] == "pass", min_eig=d["min_eig"], norm=d["norm"],
                hermiticity=d["hermiticity"], condition=d.get("condition"))
        spectra.setdefault(r, []).append(ev)
    iso_list = [(seeds[0], v, h, cfg["mass"], cfg["members"]) for v in cfg["velocities"] for h, _ in halves]
    for (s, v, h, *_), dev in zip(iso_list, _map(_iso_job, iso_list, jobs)):
        res.add(f"isometry {h} v={v:+.1f}", "kernel pairing equals quantized inner product",
                dev <= cfg["isometry_tol"], rel_dev=dev)
    res.plots["gram_spectra"] = spectra
    return res


# -- periodization ------------------------------------------------------------------

def run_periodize(cfg, seed, jobs=1):
    res = SuiteResult("periodize")
    rng = np.random.default_rng(seed)
    beta = cfg["beta"]
    b = _boost(cfg["mass"], cfg["velocity"])
    spec = periodize.CompactSpec(beta, b)
    k = rng.uniform(-8, 8, 24)
    mu, delta = symbols.mu_delta(k, b)
    frac = np.concatenate([np.linspace(0.01, 0.99, 25), -np.linspace(0.01, 0.99, 25)])
    dt = frac[:, None] * beta
    closed = periodize.cylinder_mode(dt, mu[None, :], delta[None, :], beta)
    wind = periodize.winding_mode(dt, mu[None, :], delta[None, :], beta, cfg["n_max"])
    lat = periodize.MatsubaraLattice(beta, cfg["matsubara"])
    mats = periodize.matsubara_mode(dt, mu[None, :], delta[None, :], lat)
    dev_w = float(np.max(np.abs(closed - wind)))
    dev_m = float(np.max(np.abs(closed - mats)))
    res.add("triple agreement", "closed form, winding sum and Matsubara sum agree per mode",
            max(dev_w, dev_m) <= cfg["triple_tol"], closed_vs_winding=dev_w, closed_vs_matsubara=dev_m,
            winding_tail_bound=periodize.winding_tail_bound(spec, cfg["n_max"]))
    exceptions = 0
    worst = []
    for bb in cfg["rho_betas"]:
        for v in cfg["rho_velocities"]:
            sp = periodize.CompactSpec(bb, _boost(cfg["mass"], v))
            r = periodize.rho_check(sp, rng.uniform(-20, 20, (2000, 1)))
            exceptions += r["exceptions"]
            worst.append([bb, v, r["max_rho"], r["bound"]])
    res.add("bose factor bound", "rho_pm is bounded by 1/(exp(beta m sqrt(1-v^2)) - 1)", exceptions == 0,
            exceptions=exceptions, table=worst)
    pts_t = np.array([0.3, 0.7, 1.4]) * beta / 2
    pts_x = np.array([[0.0], [0.5], [1.0]])
    cyl = periodize.cylinder_kernel_closed(pts_t, 0.0, pts_x, spec)
    devs = []
    for length in cfg["lengths"]:
        vals, _ = periodize.torus_kernel(pts_t, 0.0, pts_x, periodize.CompactSpec(beta, b, (length,)), "-")
        devs.append(float(np.max(np.abs(vals - cyl))))
    res.add("torus to cylinder", "spatial compactification converges to the cylinder kernel",
            all(a > b_ for a, b_ in zip(devs, devs[1:])), lengths=cfg["lengths"], deviations=devs)
    res.plots["torus_sweep"] = (cfg["lengths"], devs)
    n = rng.integers(-200, 201, 5000)
    samples = (2 * np.pi * n / beta, rng.uniform(-50, 50, 5000))
    rep = periodize.verify_compact_bounds(samples, spec)
    res.add("compact symbol bounds", "symbol bounds on Matsubara energies",
            rep.total_violations == 0 and periodize.compact_sup_ok(rep), violations=rep.to_dict()["violations"])
    fam = periodize.compact_family(seed, beta, cfg["members"])
    g = periodize.gram_reflection_compact(fam, spec)
    res.add("cylinder gram", "reflection positivity on the time circle", g.verdict, min_eig=g.min_eig)
    alpha = rp.SpatialFunction(k, rng.normal(size=k.size) + 1j * rng.normal(size=k.size), np.full(k.size, 0.1))
    emb = periodize.sharp_time_embedding(alpha, spec)
    res.add("sharp-time embedding", "sharp-time slice norm bounded by coth(beta m / 2)", emb["passed"],
            ratio=emb["ratio"], m_tilde=emb["m_tilde"], one_plus_2_over_beta_m=emb["one_plus_2_over_beta_m"])
    res.dumps["cylinder"] = ("kernel", pts_t, pts_x, cyl)
    return res


# -- thermal ------------------------------------------------------------------------

def run_thermal(cfg, seed, jobs=1):
    res = SuiteResult("thermal")
    rng = np.random.default_rng(seed)
    lat = thermal.mode_lattice(cfg["length"], cfg["mode_cutoff"], cfg["mass"])
    ts = np.linspace(-5, 5, 41)
    for v in cfg["velocities"]:
        spec = periodize.CompactSpec(cfg["beta"], _boost(cfg["mass"], v))
        for sign in "+-":
            a, ap = thermal.random_alpha(rng, lat), thermal.random_alpha(rng, lat)
            tag = f"v={v:+.1f} sign={sign}"
            kms = thermal.one_particle_kms_check(a, ap, ts, spec, sign, cfg["kms_tol"])
            res.add(f"one-particle kms {tag}", "one-particle KMS condition", kms["passed"],
                    max_residual=kms["max_residual"], scale=kms["scale"])
            mod = thermal.modular_check(spec, sign, [(a, ap), (ap, a)], cfg["modular_tol"])
            res.add(f"modular {tag}", "j kappa = -kappa' and s = j delta^(1/2)", mod["passed"],
                    **{k: mod[k] for k in ("j_kappa", "j_squared", "delta_kappa", "polar")})
            gap = thermal.liouvillian_spectrum(lat.modes, spec, sign)
            res.add(f"liouvillian gap {tag}", "|ell| >= m sqrt(1 - v^2) on every mode", gap["passed"],
                    min_abs=gap["min_abs"], gap=gap["gap"])
            two = thermal.thermal_two_point(a, ap, 0.0, spec, sign, ts)
            res.add(f"kms boundary {tag}", "F(t + i beta) equals the reversed correlation",
                    two["kms_residual"] <= cfg["kms_tol"], residual=two["kms_residual"])
            comm = thermal.commutator_residual(a, ap, 0.3, 0.7, spec, sign)
            res.add(f"commutator {tag}", "expectation of the thermal commutator vanishes",
                    comm <= cfg["modular_tol"], residual=comm)
        dens = thermal.sharp_time_density_check(0.0, cfg["beta"] / 4, spec, thermal.mode_lattice(cfg["length"], 8))
        res.add(f"two-slice density v={v:+.1f}", "two sharp-time slices span the doubled space",
                dens["passed"] and dens["single_slice_rank"] == 1,
                **{k: v_ for k, v_ in dens.items() if k != "passed"})
    # the Gram family needs room below beta/2, so this check runs at beta = 3
    spec = periodize.CompactSpec(3.0, _boost(cfg["mass"], cfg["velocities"][-1]))
    members = [rp.TestFunction(rp.Bump(0.35 + 0.12 * i, 0.04), rp.Bump(0.25 * i - 0.5, 0.4, 1.0 + 0.2 * i))
               for i in range(5)]
    fam = rp.TestFunctionFamily(members, "positive_time", None)
    g_kernel = periodize.gram_reflection_compact(fam, spec).matrix
    g_thermal = thermal.thermal_gram(members, spec, "+")
    rel = float(np.max(np.abs(g_kernel - g_thermal)) / np.max(np.abs(g_kernel)))
    res.add("thermal isometry", "doubled inner product equals the cylinder-kernel pairing (real f)",
            rel <= cfg["isometry_tol"], rel_dev=rel)
    return res


# -- gaussian -------------------------------------------------------------------------

def _bump_fn(rng):
    return rp.TestFunction(rp.Bump(rng.uniform(-1, 1), rng.uniform(0.4, 0.7)),
                           rp.Bump(rng.uniform(-1, 1), rng.uniform(0.4, 0.7), complex(*rng.normal(size=2)),
                                   rng.uniform(-1, 1)))


def run_gaussian(cfg, seed, jobs=1):
    res = SuiteResult("gaussian")
    rng = np.random.default_rng(seed)
    b = _boost(cfg["mass"], cfg["velocity"])
    cov = gaussian.flat_covariance(b)
    f = _bump_fn(rng)
    s2 = cov([f])[0, 0]
    for n, mult in ((4, 3), (6, 15)):
        sn = gaussian.pairing_sum(np.full((n, n), s2))
        rel = abs(sn - mult * s2 ** (n // 2)) / abs(mult * s2 ** (n // 2))
        res.add(f"S{n} law", f"S_{n} = {mult} S_2^{n // 2}", rel <= cfg["wick_tol"], rel_dev=float(rel))
    fns = [_bump_fn(rng) for _ in range(8)]
    m = cov(fns)
    worst = 0.0
    for n in (2, 4, 6, 8):
        req = [gaussian.MomentRequest(fns[:n], m[:n, :n], mode) for mode in ("pairing_sum", "recursion")]
        a, c = (gaussian.wick_moment(r) for r in req)
        worst = max(worst, abs(a - c) / abs(a))
    res.add("pairing vs recursion", "pairing sum equals polarized recursion up to 8 fields",
            worst <= cfg["wick_tol"], rel_dev=float(worst))
    dual = []
    for n in range(cfg["max_power"] + 1):
        q = gaussian.quantized_norm(rp.Bump(0.0, 0.5, 1 + 0.5j, 0.3), n, b)
        dual.append(q["rel_dev"])
    spec = periodize.CompactSpec(3.0, b)
    ft = rp.TestFunction(rp.Bump(0.7, 0.06), rp.Bump(0.2, 0.4, 1.3))
    for n in range(1, cfg["max_power"] + 1):
        dual.append(gaussian.thermal_quantized_norm(ft, n, spec)["rel_dev"])
    res.add("double factorial law", "(2n-1)!! <h,h>^n from moments and from the quantized norm",
            max(dual) <= cfg["dual_tol"], rel_devs=dual)
    ratios = [gaussian.field_vector_bound(gaussian.random_fourier_function(rng), b)["ratio"]
              for _ in range(cfg["field_samples"])]
    res.add("field vector bound", "|D_v| <= cosh^5(eta) C on random functions",
            max(ratios) <= b.cosh**5 * (1 + 1e-13), max_ratio=max(ratios), bound=b.cosh**5)
    return res


# -- fock -------------------------------------------------------------------------------

def run_fock(cfg, seed, jobs=1):
    res = SuiteResult("fock")
    length = cfg["length"]
    poly = fock.PolySpec.phi4(cfg["coupling"])
    k, n = cfg["reference"]
    ops = fock.build_operators(fock.FockTruncation(length, k, n, cfg["mass"], cfg["dim_cap"]), poly)
    comm = fock.commutator_norms(ops)
    res.add("momentum conservation", "[P, H_int] = 0 in the truncated basis", comm["int"] == 0.0, **comm)
    sc = fock.spectrum_condition(ops, cfg["velocities"], cfg["spectrum_tol"])
    res.add(f"spectrum condition K={k} N={n}", "H + vP >= 0 with ground state at zero momentum", sc["passed"],
            ground_energy=sc["ground_energy"], dimension=sc["dimension"], rows=sc["rows"])
    res.dumps["spectrum"] = ("spectrum", fock.spectrum_rows(ops, 0.0))
    res.plots["spectrum"] = fock.spectrum_rows(ops, cfg["velocities"][-1]) if cfg["velocities"] else []
    trend = []
    for kk, nn in cfg["refinement"]:
        o = fock.build_operators(fock.FockTruncation(length, kk, nn, cfg["mass"], cfg["refinement_cap"]), poly)
        r = fock.spectrum_condition(o, cfg["velocities"], cfg["spectrum_tol"])
        trend.append({"K": kk, "N": nn, "ground_energy": r["ground_energy"],
                      "min_eigenvalue": min(row["min_eigenvalue"] for row in r["rows"]), "passed": r["passed"]})
    mins = [sc["rows"] and min(row["min_eigenvalue"] for row in sc["rows"])] + [t["min_eigenvalue"] for t in trend]
    toward = all(abs(b_) <= abs(a) + 1e-12 for a, b_ in zip(mins, mins[1:]))
    res.add("refinement trend", "minimum of H + vP moves toward 0 under refinement",
            toward and all(t["passed"] for t in trend), trend=trend)
    beta = cfg["beta"]
    free = fock.build_operators(fock.FockTruncation(length, 1, cfg["gibbs_particles"], cfg["mass"]), fock.PolySpec(()))
    rep, _ = fock.heat_kernel_and_gibbs(free, beta, cfg["velocities"][-1], seed=seed)
    res.add("free partition function", "Z equals the mode product within the particle-cap budget",
            rep["product_ok"], **{k_: rep[k_] for k_ in ("z_truncated", "z_product", "cap_rel_error", "cap_budget")})
    small = fock.build_operators(fock.FockTruncation(length, 1, 4, cfg["mass"]), poly)
    rep, _ = fock.heat_kernel_and_gibbs(small, beta, 0.3, n_pairs=5, seed=seed)
    ok = rep["kms_residual"] <= cfg["kms_tol"] and rep["invariance_residual"] <= 1e-12
    res.add("gibbs kms", "KMS boundary condition of the Gibbs functional", ok,
            kms_residual=rep["kms_residual"], invariance_residual=rep["invariance_residual"],
            trace_residual=rep["trace_residual"], normalization=rep["normalization"])
    lem = fock.lemma_bound_check(cfg["lemma_trials"], seed)
    res.add("trotter norm lemma", "||C e^(A+B)|| <= ||e^A|| ||C e^B|| on commuting triples", lem["passed"], **lem)
    worst_root = 0.0
    ok = True
    for p in (fock.PolySpec(()), poly):
        o = fock.build_operators(fock.FockTruncation(length, 2, 4, cfg["mass"]), p)
        an = fock.analyticity_check(o, 1.0, 0.5, 0.2, 6)
        ok &= an["passed"]
        worst_root = max(worst_root, max(an["normalized_roots"]))
    res.add("heat kernel analyticity", "Taylor terms in v bounded by (Gamma/(1-eps))^n ||e^A||", ok,
            worst_normalized_root=worst_root, ratio_bound=0.5 / 0.8)
    gt = fock.gibbs_torus_check(fock.build_operators(fock.FockTruncation(length, 1, 18, cfg["mass"]),
                                                     fock.PolySpec(())), beta, 0.6, [(0.5, 0.7), (1.3, -0.4)])
    res.add("gibbs vs torus kernel", "free Gibbs two-point function of H + vP equals D^c_+",
            gt["max_rel_dev"] <= 10 * gt["cap_budget"] + 1e-12, **gt)
    tq = fock.FockTruncation(length, 1, 2, cfg["mass"])
    oq = fock.build_operators(tq, fock.PolySpec((0, 0, 0.5)))
    ht, _ = fock.tensor_hamiltonian(tq, 1.0)
    dev = float(np.max(np.abs(np.linalg.eigvalsh(ht) - np.sort(np.linalg.eigvalsh((oq.h_free + oq.h_int).toarray())))))
    res.add("quadratic oracle", "mass-shift model matches the tensor-product construction", dev <= 1e-12, max_dev=dev)
    trf = fock.FockTruncation(length, 3, 0, cfg["mass"])
    b = _boost(cfg["mass"], cfg["velocities"][-1])
    rng = np.random.default_rng(seed)
    nm = len(trf.labels)

    def sf():
        return rp.SpatialFunction(trf.momenta, rng.normal(size=nm) + 1j * rng.normal(size=nm),
                                  np.full(nm, 1 / trf.length), trf.mass)

    f = rp.TestFunction(rp.Bump(1.5, 0.15), sf())
    g = rp.TestFunction(rp.Bump(1.1, 0.1, 0.7), sf())
    devs = [fock.fk_gaussian_check(T, f, g, trf, b)["rel_dev"] for T in cfg["fk_times"]]
    res.add("gaussian feynman-kac", "quantum transfer matrix equals the classical reflected pairing",
            max(devs) <= cfg["fk_tol"], times=cfg["fk_times"], rel_devs=devs)
    return res


SUITES = {
    "symbols": run_symbols,
    "kernels": run_kernels,
    "rp": run_rp,
    "periodize": run_periodize,
    "thermal": run_thermal,
    "gaussian": run_gaussian,
    "fock": run_fock,
}
