"""Optional PNG rendering of suite plot data (headless Agg backend)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def sup_ratio(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for dim in sorted({r[0] for r in rows}):
        sel = sorted((r for r in rows if r[0] == dim), key=lambda r: r[1])
        v = [r[1] for r in sel]
        ax.plot(v, [r[2] for r in sel], "o", label=f"measured, d={dim}")
    vv = np.linspace(-0.95, 0.95, 200)
    ax.plot(vv, np.abs(vv) / np.sqrt(1 - vv**2), "k-", lw=0.8, label="sinh(eta)")
    ax.set_xlabel("v")
    ax.set_ylabel("sup |L/K|")
    ax.legend(fontsize=8)
    return _save(fig, path)


def kernel_slices(data, path):
    t, x, vals, v = data
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
    for i in (0, len(t) // 2, len(t) - 1):
        axes[0].plot(x, vals[i].real, label=f"t={t[i]:.2f}")
        axes[1].plot(x, vals[i].imag, label=f"t={t[i]:.2f}")
    axes[0].set_title(f"Re D, v={v:+.1f}")
    axes[1].set_title(f"Im D, v={v:+.1f}")
    for ax in axes:
        ax.set_xlabel("x")
        ax.legend(fontsize=8)
    return _save(fig, path)


def gram_spectra(spectra, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for refl, lists in sorted(spectra.items()):
        ev = np.concatenate([np.asarray(e) for e in lists])
        ev = ev[ev > 0]
        ax.hist(np.log10(ev), bins=40, alpha=0.6, label=refl)
    ax.set_xlabel("log10 eigenvalue")
    ax.set_ylabel("count")
    ax.legend(fontsize=8)
    return _save(fig, path)


def torus_sweep(data, path):
    lengths, devs = data
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(lengths, np.maximum(devs, 1e-17), "o-")
    ax.set_xlabel("spatial length")
    ax.set_ylabel("max |torus - cylinder|")
    return _save(fig, path)


def spectrum(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    sectors = np.array([r[0] for r in rows])
    vals = np.array([r[2] for r in rows])
    ax.plot(sectors, vals, "_", ms=12)
    ax.set_xlabel("momentum sector")
    ax.set_ylabel("eigenvalue of H + vP")
    return _save(fig, path)


RENDERERS = {
    "sup_ratio": sup_ratio,
    "kernel": kernel_slices,
    "gram_spectra": gram_spectra,
    "torus_sweep": torus_sweep,
    "spectrum": spectrum,
}


def render(plots, directory, prefix):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [RENDERERS[key](data, directory / f"{prefix}_{key}.png") for key, data in sorted(plots.items())
            if key in RENDERERS and data is not None and len(data)]
