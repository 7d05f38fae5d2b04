import json

import numpy as np
import pytest


def spin_circle_rows(n=16, tilt=0.3, radius=1.0):
    """Closed spin profile on the sphere in the documented column layout."""
    theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
    sx = radius * np.cos(theta) * np.cos(tilt)
    sy = radius * np.sin(theta) * np.cos(tilt)
    sz = np.full(n, radius * np.sin(tilt))
    x = np.linspace(-np.pi, np.pi, n, endpoint=False)
    rows = []
    for i in range(n):
        rows.append([i, x[i], sx[i], sy[i], sx[i], -sy[i], sz[i], 0.0])
    return rows


def write_snapshot(path, rows, header=None):
    header = header or "index,x,S+re,S+im,S-re,S-im,Szre,Szim"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(f"{v:.17g}" for v in r) + "\n")


@pytest.fixture()
def golden(tmp_path):
    """Golden artifact set in the primary package's documented formats."""
    lams = [[0.5, 0.0], [1.0, 0.0], [2.0, 0.0]]
    scan0 = [[535.49352296706530, 0.0], [23.183906551848932, 0.0],
             [5.0183569573182229, 0.0]]
    scan1 = [[535.49352296739884, 0.0], [23.183906551850303, 0.0],
             [5.0183569573182344, 0.0]]
    drift = max(abs(a[0] - b[0]) / abs(a[0]) for a, b in zip(scan0, scan1))
    report = {
        "kind": "hm",
        "convention": "real",
        "checkpoints": [0.0, 0.5, 1.0],
        "casimir": [0.0, 1.2e-14, 2.5e-14],
        "dual_casimir": [],
        "charges": {"-1": [[3.14159, 0.0]] * 3,
                    "0": [[0.21, -0.04], [0.21, -0.04000000012],
                          [0.20999999985, -0.04]],
                    "1": [[-1.589, 0.0], [-1.58900000021, 0.0],
                          [-1.58899999978, 0.0]]},
        "boundary_residuals": [],
        "transfer_scan": {"lambdas": lams,
                          "values": [scan0, scan1]},
        "final": {"casimir_drift": 2.5e-14,
                  "charges": {"-1": 0.0, "0": 6.0e-10, "1": 1.4e-10},
                  "transfer_scan": drift},
    }
    report_path = tmp_path / "report.json"
    report_path.write_text(json.dumps(report))

    flat_report = {
        "kind": "hm", "convention": "real",
        "checkpoints": [0.0, 0.5, 1.0],
        "casimir": [0.0, 0.0, 0.0],
        "dual_casimir": [],
        "charges": {"-1": [[3.14159, 0.0]] * 3,
                    "0": [[0.0, 0.0]] * 3},
        "boundary_residuals": [],
        "final": {"casimir_drift": 0.0, "charges": {"-1": 0.0, "0": 0.0}},
    }
    flat_path = tmp_path / "flat_report.json"
    flat_path.write_text(json.dumps(flat_report))

    snaps = []
    for i, tilt in enumerate((0.3, 0.32, 0.34)):
        p = tmp_path / f"snapshot_{i:06d}.csv"
        write_snapshot(p, spin_circle_rows(tilt=tilt))
        snaps.append(str(p))

    bad = tmp_path / "bad.csv"
    write_snapshot(bad, spin_circle_rows(),
                   header="index,x,SPre,S+im,S-re,S-im,Szre,Szim")

    return {"report": str(report_path), "flat_report": str(flat_path),
            "snapshots": snaps, "bad_snapshot": str(bad),
            "tmp": tmp_path, "drift": drift}
