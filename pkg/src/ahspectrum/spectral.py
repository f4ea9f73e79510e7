"""Block eigenvalues of the assembled Laplacians and the three-part spectral picture.

Each Fourier block is a weighted-symmetric matrix pencil ``(W A, W)`` on the
interior unknowns; it is solved densely.  Claims about the continuum are made
only through persistence: a feature counts when it survives a longer
truncation and a finer grid.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from . import operators as op
from .decompositions import NumericalError
from .fields import UsageError, harmonic_oneform, l2_norm
from .geometry import SurfaceModel
from .identities import fit_order, kernel_leak, kernel_residual, rayleigh
from .quasimodes import ScanConfig, quasimode_scan


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray = field(repr=False)
    residual: float
    wall_fraction: float


def _wall_fraction(A: op.AssembledOperator, vec: np.ndarray, model: SurfaceModel | None,
                   width: float) -> float:
    if model is None:
        return float("nan")
    t = model.chart.t_nodes
    near = np.tile(t >= t[-1] - width, len(vec) // len(t))
    mass = A.weight * vec**2
    return float(mass[near].sum() / mass.sum())


def eigensolve_block(A: op.AssembledOperator, count: int, model: SurfaceModel | None = None,
                     wall_width: float = 1.0, tol: float = 1e-8) -> list[EigenPair]:
    """Lowest ``count`` eigenpairs of ``A v = lambda v`` in the ``W``-weighted product.

    Wall unknowns are excluded.  Every pair carries its residual
    ``|K v - lambda W v| / |W v|`` with ``K = W A`` and, when ``model`` is
    given, the share of its weighted mass within ``wall_width`` of the
    outer wall.
    """
    keep = np.flatnonzero(A.interior_mask)
    n = len(keep)
    if not 1 <= count <= n:
        raise UsageError(f"count must be in [1, {n}], got {count}")
    K = A.symmetric_form().toarray()[np.ix_(keep, keep)]
    Ks = 0.5 * (K + K.T)
    Wd = A.weight[keep]
    log = [f"dense generalized eigh, dimension {n}",
           f"symmetry defect {float(np.abs(K - K.T).max() / max(np.abs(K).max(), 1e-300)):.2e}",
           f"weight range [{Wd.min():.3e}, {Wd.max():.3e}]"]
    if not (np.all(np.isfinite(K)) and np.all(Wd > 0)):
        raise NumericalError("; ".join(log + ["non-finite matrix or non-positive weight"]))
    try:
        vals, vecs = sla.eigh(Ks, np.diag(Wd), subset_by_index=[0, count - 1])
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericalError("; ".join(log + [f"LAPACK failure: {exc}"])) from exc
    out = []
    for k in range(count):
        v = vecs[:, k]
        Wv = Wd * v
        res = float(np.linalg.norm(K @ v - vals[k] * Wv) / np.linalg.norm(Wv))
        if not res <= tol:
            raise NumericalError("; ".join(log + [f"pair {k}: residual {res:.2e} > {tol:.0e}"]))
        full = np.zeros(A.matrix.shape[0])
        full[keep] = v
        out.append(EigenPair(float(vals[k]), full, res, _wall_fraction(A, full, model, wall_width)))
    return out


def pair_symmetry_defect(A: op.AssembledOperator, pairs: list[EigenPair]) -> float:
    """Asymmetry of ``V^T K V`` over the returned vectors."""
    V = np.stack([p.vector for p in pairs], axis=1)
    G = V.T @ (A.symmetric_form() @ V)
    return float(np.abs(G - G.T).max() / max(np.abs(G).max(), 1e-300))


# -- explicit eigentensors -----------------------------------------------------

@dataclass(frozen=True)
class EigenTensorRow:
    n: int
    r_minus2: float
    r_minus2_order: float
    r_zero: float
    r_zero_order: float
    leak: float
    tol: float = 1e-3

    @property
    def minus2_ok(self) -> bool:
        return self.r_minus2 <= self.tol

    @property
    def zero_ok(self) -> bool:
        return self.r_zero <= self.tol + self.leak


def minus2_residual(model: SurfaceModel, n: int, core_margin: int = 4) -> float:
    """``|Delta_L h + 2 h| / |h|`` on core nodes for ``h = S(w_n)``."""
    h = op.traceless_square(harmonic_oneform(n, model))
    core = model.chart.core(core_margin)
    return l2_norm(op.laplacian("Lichnerowicz", h) + 2.0 * h, core) / l2_norm(h, core)


def _ladder(model: SurfaceModel, t_min: float, levels: int = 3) -> list[SurfaceModel]:
    t_max = float(model.chart.t_nodes[-1])
    n = model.chart.n_t
    return [model.with_grid(t_min, t_max, n // 2**k) for k in reversed(range(levels))]


def known_eigentensor_check(n_range, model: SurfaceModel, t_min: float = 0.5,
                            core_margin: int = 4) -> list[EigenTensorRow]:
    """Residuals of ``S(w_n)`` against eigenvalue ``-2`` and of ``Lring w_n`` against 0.

    Evaluated on ``[t_min, t_max]`` at ``N``, ``N/2`` and ``N/4`` nodes;
    the finest residual and the fitted order are reported together with
    the share of ``|Lring w_n|^2`` lying outside the window.
    """
    ladder = _ladder(model, max(t_min, float(model.chart.t_nodes[0])))
    hs = [m.chart.h for m in ladder]
    rows = []
    for n in n_range:
        rm2 = [minus2_residual(m, n, core_margin) for m in ladder]
        r0 = [kernel_residual(m, n, core_margin) for m in ladder]
        t = ladder[-1].chart.t_nodes
        rows.append(EigenTensorRow(n, rm2[-1], fit_order(hs, rm2), r0[-1], fit_order(hs, r0),
                                   kernel_leak(n, float(t[core_margin]), float(t[-1 - core_margin]))))
    return rows


def rayleigh_floor(kind, samples, model: SurfaceModel | None = None) -> float:
    """Minimum Rayleigh quotient of ``kind`` over ``samples`` (fields on one model)."""
    samples = list(samples)
    if not samples:
        raise UsageError("rayleigh_floor needs at least one sample")
    if model is not None and any(s.model is not model for s in samples):
        raise UsageError("samples must live on the given model")
    return float(min(rayleigh(kind, s) for s in samples))


# -- spectral picture ------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumConfig:
    modes: tuple[int, ...] = tuple(range(9))
    count: int = 10
    kind: str = "Lichnerowicz"
    t_extra: float = 2.0
    refine: int = 2
    windows: tuple[tuple[float, float], ...] = ((-1.9, -0.1), (0.05, 0.2))
    persist_tol: float = 0.1
    clusters: tuple[float, ...] = (-2.0, 0.0)
    cluster_tol: float = 1e-3
    eigentensor_n: tuple[int, ...] = (2, 3, 4, 5, 6)
    eigentensor_t_min: float = 0.5
    scan: ScanConfig = ScanConfig()


@dataclass
class SpectrumReport:
    model: dict
    config: dict
    blocks: dict
    variants: dict
    eigentensors: list
    quasimode: dict
    verdicts: dict

    @property
    def passed(self) -> bool:
        """No verdict failed; verdicts outside the constant-curvature hypothesis do not count."""
        return all(v["status"] != "fail" for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {"model": self.model, "config": self.config, "blocks": self.blocks,
                "variants": self.variants, "eigentensors": self.eigentensors,
                "quasimode": self.quasimode, "verdicts": self.verdicts}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def eigen_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(["run", "mode", "index", "eigenvalue", "residual", "wall_fraction"])
        for m, blk in sorted(self.blocks.items(), key=lambda kv: int(kv[0])):
            for k, (v, r, f) in enumerate(zip(blk["eigenvalues"], blk["residuals"],
                                              blk["wall_fraction"])):
                w.writerow(["base", m, k, repr(v), repr(r), repr(f)])
        for name, per_mode in sorted(self.variants.items()):
            for m, vals in sorted(per_mode.items(), key=lambda kv: int(kv[0])):
                for k, v in enumerate(vals):
                    w.writerow([name, m, k, repr(v), "", ""])
        return buf.getvalue()

    def histogram_data(self, lo: float = -2.5, hi: float = 2.5, width: float = 0.05) -> str:
        """Bin centre and count of base-run eigenvalues, two columns."""
        vals = np.concatenate([blk["eigenvalues"] for blk in self.blocks.values()])
        edges = np.arange(lo, hi + width / 2, width)
        counts, _ = np.histogram(vals, edges)
        centres = 0.5 * (edges[1:] + edges[:-1])
        return "\n".join(f"{c!r} {int(n)}" for c, n in zip(centres, counts)) + "\n"


def _block_values(model, cfg: SpectrumConfig, modes) -> dict:
    out = {}
    for m in modes:
        pairs = eigensolve_block(op.assemble(cfg.kind, m, model), cfg.count, model)
        out[m] = pairs
    return out


def _nearest(values, target) -> float:
    values = np.asarray(values)
    return float(values[np.argmin(np.abs(values - target))])


def persistent_in_windows(base: dict, variants: dict, windows, tol: float) -> list[dict]:
    """Base eigenvalues inside ``windows`` that move by less than ``tol`` (relative) in every variant."""
    hits = []
    for m, vals in base.items():
        for v in vals:
            if not any(lo < v < hi for lo, hi in windows):
                continue
            moves = {name: abs(_nearest(per[m], v) - v) / abs(v) for name, per in variants.items()}
            hits.append({"mode": int(m), "eigenvalue": float(v), "moves": moves,
                         "persistent": all(x < tol for x in moves.values())})
    return hits


def _curvature_constant(model: SurfaceModel, tol: float = 1e-8) -> bool:
    R = model.curvature
    return float(np.max(np.abs(R - R.mean()))) <= tol * max(1.0, abs(float(R.mean())))


def _model_descriptor(model: SurfaceModel) -> dict:
    try:
        return model.snapshot()
    except Exception:
        return {"kind": model.kind.value, "t_max": float(model.chart.t_nodes[-1]),
                "n_t": model.chart.n_t, "n_theta": model.chart.n_theta}


def spectral_picture(model: SurfaceModel, config: SpectrumConfig = SpectrumConfig(),
                     scan=None) -> SpectrumReport:
    """Block spectra, explicit eigentensors and quasi-mode scan combined into three verdicts.

    (a) eigenvalue clusters at -2 and 0, each witnessed by a persistent block
        eigenvalue and an explicit tensor;
    (b) quasi-mode ratios decay for every sampled ``lambda >= 1/4``;
    (c) no block eigenvalue inside the forbidden windows persists under a
        longer truncation and a finer grid.

    ``scan`` may pass a precomputed quasi-mode scan result.
    """
    modes = tuple(int(m) for m in config.modes)
    if not modes:
        raise UsageError("spectral_picture needs at least one Fourier mode")
    if max(modes) > model.chart.modes[-1] or min(modes) < 0:
        raise UsageError(f"modes {modes} not resolved by n_theta={model.chart.n_theta}")
    if config.refine < 2 or config.t_extra <= 0:
        raise UsageError("persistence needs refine >= 2 and t_extra > 0")
    chart = model.chart
    t_lo = 0.0 if chart.center else float(chart.t_nodes[0])
    t_hi = float(chart.t_nodes[-1])
    longer_n = int(round(chart.n_t * (t_hi + config.t_extra - t_lo) / (t_hi - t_lo)))
    runs = {
        "longer": model.with_grid(t_lo, t_hi + config.t_extra, longer_n),
        "finer": model.with_grid(t_lo, t_hi, config.refine * chart.n_t),
    }
    base_pairs = _block_values(model, config, modes)
    base = {m: [p.value for p in pairs] for m, pairs in base_pairs.items()}
    variants = {name: {m: [p.value for p in pairs]
                       for m, pairs in _block_values(mdl, config, modes).items()}
                for name, mdl in runs.items()}
    blocks = {str(m): {"eigenvalues": base[m],
                       "residuals": [p.residual for p in base_pairs[m]],
                       "wall_fraction": [p.wall_fraction for p in base_pairs[m]]}
              for m in modes}

    # (a)
    rows = known_eigentensor_check(config.eigentensor_n, model, config.eigentensor_t_min)
    row_dicts = [{**asdict(r), "minus2_ok": r.minus2_ok, "zero_ok": r.zero_ok} for r in rows]
    clusters = {}
    for c in config.clusters:
        witnesses = []
        for m in modes:
            v = _nearest(base[m], c)
            if abs(v - c) <= config.cluster_tol and all(
                    abs(_nearest(variants[name][m], c) - c) <= config.cluster_tol for name in runs):
                witnesses.append({"mode": m, "eigenvalue": v,
                                  **{name: _nearest(variants[name][m], c) for name in runs}})
        key = "minus2_ok" if c == -2.0 else "zero_ok"
        tensor_rows = [f"n={r['n']}" for r in row_dicts if r[key]]
        clusters[repr(c)] = {"block_witnesses": witnesses, "tensor_witnesses": tensor_rows,
                             "witnessed": bool(witnesses) and bool(tensor_rows)}
    if _curvature_constant(model):
        status_a = "pass" if all(v["witnessed"] for v in clusters.values()) else "fail"
    else:
        status_a = "hypothesis-not-met"
    verdict_a = {"status": status_a, "clusters": clusters,
                 "rows": [f"eigentensors n={r['n']}" for r in row_dicts]}

    # (b)
    if scan is None:
        scan = quasimode_scan(config.scan)
    ratio_ok = {lam: flags["ratio"] for lam, flags in scan.passed.items()}
    monotone = {lam: s["monotone_ratio"] for lam, s in scan.slopes.items()}
    verdict_b = {"status": "pass" if all(ratio_ok.values()) and all(monotone.values()) else "fail",
                 "ratio_slope_ok": ratio_ok, "monotone": monotone,
                 "rows": [f"quasimode lambda={lam}" for lam in scan.slopes]}

    # (c)
    hits = persistent_in_windows(base, variants, config.windows, config.persist_tol)
    persistent = [h for h in hits if h["persistent"]]
    status_c = "fail" if persistent else "pass"
    if status_a == "hypothesis-not-met":
        status_c = "hypothesis-not-met"
    verdict_c = {"status": status_c, "candidates": hits,
                 "windows": [list(w) for w in config.windows],
                 "rows": [f"block m={h['mode']} eigenvalue={h['eigenvalue']!r}" for h in persistent]}

    cfg = asdict(config)
    return SpectrumReport(_model_descriptor(model), cfg, blocks,
                          {name: {str(m): v for m, v in per.items()} for name, per in variants.items()},
                          row_dicts, scan.summary(), {"a": verdict_a, "b": verdict_b, "c": verdict_c})
