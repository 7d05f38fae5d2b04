"""Figure builders over the documented artifact schemas.

Input contracts (fixed by the primary package's docs):
  * report JSON: checkpoints, casimir, charges {k: [[re, im], ...]},
    optional transfer_scan {lambdas: [[re, im]...], values: [...]}, final.
  * snapshot CSV header: index,x,S+re,S+im,S-re,S-im,Szre,Szim
    (+ Sig columns on dual grids).
  * scan CSV header: lambda_re,lambda_im,t_re,t_im.

Column-name drift is an error, not a warning.  Output is a static PNG/SVG;
no display server is needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_KINDS = ("drift", "scan_overlay", "casimir_map", "sphere_path")

SNAPSHOT_SPIN_COLS = ["index", "x", "S+re", "S+im", "S-re", "S-im",
                      "Szre", "Szim"]
SNAPSHOT_SIGMA_COLS = ["Sig+re", "Sig+im", "Sig-re", "Sig-im",
                       "Sigzre", "Sigzim"]


class SchemaError(ValueError):
    """An input file does not match the documented artifact schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    output: str
    report: str | None = None
    snapshots: tuple = ()
    style: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path) -> "FigureSpec":
        with open(path) as fh:
            doc = json.load(fh)
        known = {"kind", "output", "report", "snapshots", "style"}
        unknown = set(doc) - known
        if unknown:
            raise SchemaError(f"unknown figure-spec keys: {sorted(unknown)}")
        if doc.get("kind") not in FIGURE_KINDS:
            raise SchemaError(f"kind must be one of {FIGURE_KINDS}")
        if "output" not in doc:
            raise SchemaError("figure spec needs an output path")
        return cls(doc["kind"], doc["output"], doc.get("report"),
                   tuple(doc.get("snapshots", ())), doc.get("style", {}))


def _require(path, what):
    if path is None:
        raise SchemaError(f"{what} input is required for this figure kind")
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} input {p} does not exist")
    return p


def load_report(path) -> dict:
    with open(_require(path, "report")) as fh:
        doc = json.load(fh)
    missing = {"checkpoints", "casimir", "charges", "final"} - set(doc)
    if missing:
        raise SchemaError(f"report is missing keys: {sorted(missing)}")
    return doc


def load_snapshot(path) -> dict:
    p = _require(path, "snapshot")
    with open(p) as fh:
        header = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[: len(SNAPSHOT_SPIN_COLS)] != SNAPSHOT_SPIN_COLS:
        raise SchemaError(f"snapshot columns {header[:8]} do not match "
                          f"{SNAPSHOT_SPIN_COLS}")
    extra = header[len(SNAPSHOT_SPIN_COLS):]
    if extra and extra != SNAPSHOT_SIGMA_COLS:
        raise SchemaError(f"unexpected trailing snapshot columns: {extra}")
    cols = {name: body[:, i] for i, name in enumerate(header)}
    out = {
        "x": cols["x"],
        "sp": cols["S+re"] + 1j * cols["S+im"],
        "sm": cols["S-re"] + 1j * cols["S-im"],
        "sz": cols["Szre"] + 1j * cols["Szim"],
    }
    return out


def _new_axes(style, three_d=False):
    fig = plt.figure(figsize=style.get("figsize", (6.0, 4.0)),
                     dpi=style.get("dpi", 110))
    ax = fig.add_subplot(111, projection="3d" if three_d else None)
    return fig, ax


def _save(fig, spec: FigureSpec):
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={} if out.suffix == ".png" else None)
    plt.close(fig)


def _fig_drift(spec: FigureSpec) -> dict:
    doc = load_report(spec.report)
    t = np.asarray(doc["checkpoints"], dtype=float)
    fig, ax = _new_axes(spec.style)
    maxima = {}
    if doc["casimir"]:
        cas = np.asarray(doc["casimir"], dtype=float)
        ax.plot(t, cas, marker="o", label="Casimir deviation")
        maxima["casimir"] = float(np.max(cas))
    for k, pairs in sorted(doc["charges"].items()):
        vals = np.array([complex(re, im) for re, im in pairs])
        drift = np.abs(vals - vals[0])
        ax.plot(t, drift, marker=".", label=f"charge k={k} drift")
        maxima[f"charge_{k}"] = float(np.max(drift))
    ax.set_xlabel("checkpoint")
    ax.set_ylabel("absolute drift")
    ax.set_title(spec.style.get("title", "conservation drift"))
    ax.legend(fontsize=8)
    _save(fig, spec)
    return {"output": spec.output, "series_maxima": maxima}


def _fig_scan_overlay(spec: FigureSpec) -> dict:
    doc = load_report(spec.report)
    scan = doc.get("transfer_scan")
    if not scan:
        raise SchemaError("report has no transfer_scan block")
    lams = np.array([complex(re, im) for re, im in scan["lambdas"]])
    first = np.array([complex(re, im) for re, im in scan["values"][0]])
    last = np.array([complex(re, im) for re, im in scan["values"][-1]])
    drift = doc["final"].get("transfer_scan")
    if drift is None:
        raise SchemaError("report final block lacks transfer_scan")
    annotation = f"max relative drift = {drift:.17g}"
    fig, ax = _new_axes(spec.style)
    order = np.argsort(lams.real)
    ax.semilogy(lams.real[order], np.abs(first[order]), "o-",
                label="initial scan")
    ax.semilogy(lams.real[order], np.abs(last[order]), "x--",
                label="final scan")
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("|transfer value|")
    ax.set_title(spec.style.get("title", "transfer scan invariance"))
    ax.annotate(annotation, xy=(0.02, 0.02), xycoords="axes fraction",
                fontsize=8)
    ax.legend(fontsize=8)
    _save(fig, spec)
    return {"output": spec.output, "annotation": annotation,
            "drift_value": drift}


def _fig_casimir_map(spec: FigureSpec) -> dict:
    if not spec.snapshots:
        raise SchemaError("casimir_map needs a snapshot list")
    rows = []
    x = None
    for path in spec.snapshots:
        snap = load_snapshot(path)
        if x is None:
            x = snap["x"]
        elif len(x) != len(snap["x"]):
            raise SchemaError("snapshots have inconsistent grids")
        rows.append(snap["sz"] ** 2 + snap["sp"] * snap["sm"])
    cas = np.array(rows)
    c2 = np.median(cas[0].real)
    dev = np.abs(cas - c2)
    fig, ax = _new_axes(spec.style)
    im = ax.imshow(dev, aspect="auto", origin="lower",
                   extent=(x[0], x[-1], 0, len(rows) - 1))
    fig.colorbar(im, ax=ax, label="|Casimir deviation|")
    ax.set_xlabel("position")
    ax.set_ylabel("snapshot")
    ax.set_title(spec.style.get("title", "Casimir deviation map"))
    _save(fig, spec)
    return {"output": spec.output, "max_deviation": float(np.max(dev)),
            "reference_c2": float(c2)}


def _fig_sphere_path(spec: FigureSpec) -> dict:
    if not spec.snapshots:
        raise SchemaError("sphere_path needs at least one snapshot")
    fig, ax = _new_axes(spec.style, three_d=True)
    worst = 0.0
    radius = None
    for path in spec.snapshots:
        snap = load_snapshot(path)
        sx = (snap["sp"] + snap["sm"]).real / 2.0
        sy = (snap["sp"] - snap["sm"]).imag / 2.0
        sz = snap["sz"].real
        r2 = sx**2 + sy**2 + sz**2
        radius = float(np.sqrt(np.median(r2))) if radius is None else radius
        worst = max(worst, float(np.max(np.abs(r2 - radius**2))))
        closed_x = np.append(sx, sx[0])
        closed_y = np.append(sy, sy[0])
        closed_z = np.append(sz, sz[0])
        ax.plot(closed_x, closed_y, closed_z, lw=1.2,
                label=Path(path).stem)
    ax.set_box_aspect((1, 1, 1))
    ax.set_title(spec.style.get("title",
                                f"spin profile on the radius-{radius:g} sphere"))
    ax.legend(fontsize=7)
    _save(fig, spec)
    return {"output": spec.output, "radius": radius,
            "max_radius_deviation": worst}


_BUILDERS = {
    "drift": _fig_drift,
    "scan_overlay": _fig_scan_overlay,
    "casimir_map": _fig_casimir_map,
    "sphere_path": _fig_sphere_path,
}


def plot(spec: FigureSpec) -> dict:
    """Render one figure; returns the output path plus displayed numbers."""
    if spec.kind not in _BUILDERS:
        raise SchemaError(f"unknown figure kind {spec.kind!r}")
    return _BUILDERS[spec.kind](spec)
