"""CSV/JSON writers for estimates, diagnostics and Monte Carlo tables.

Floats are written with 17 significant digits so that re-reading a file
reproduces the in-memory values bit for bit.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

FLOAT_FMT = "%.17g"


def _clean(obj):
    # strict JSON: numpy scalars -> python, nan/inf -> null / string
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_matrix_csv(mat, path, prefix="topic"):
    """Dense matrix with a ``prefix_1, ..., prefix_K`` header row."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    header = ",".join(f"{prefix}_{j + 1}" for j in range(mat.shape[1]))
    np.savetxt(path, mat, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")


def read_matrix_csv(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1, dtype=float))


def write_spectral_csv(sd, path):
    """Singular values and left vectors: row ``k`` is ``sigma_k, xi_k(1..p)``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "sigma"] + [f"xi_{j + 1}" for j in range(sd.left_vectors.shape[0])])
        for k in range(sd.k):
            w.writerow([k + 1, FLOAT_FMT % sd.singular_values[k]]
                       + [FLOAT_FMT % x for x in sd.left_vectors[:, k]])


def write_points_csv(points, path, flags=None, flag_name="anchor"):
    """One row per point: ``r_1..r_d`` and optionally an integer flag column."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = [f"r_{j + 1}" for j in range(points.shape[1])]
        if flags is not None:
            header.append(flag_name)
        w.writerow(header)
        for i, row in enumerate(points):
            out = [FLOAT_FMT % x for x in row]
            if flags is not None:
                out.append(int(flags[i]))
            w.writerow(out)


def write_results_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rep", "loss", "wall_time_ms"])
        for r in rows:
            w.writerow([r["rep"], FLOAT_FMT % r["loss"], "%.3f" % r["wall_time_ms"]])


def read_results_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            {"rep": int(r["rep"]), "loss": float(r["loss"]), "wall_time_ms": float(r["wall_time_ms"])}
            for r in csv.DictReader(fh)
        ]


def diagnostics(est, **extra):
    """JSON-ready summary of a :class:`~topicscore.estimator.TopicEstimate`."""
    sd = est.spectral
    out = {
        "k": est.k,
        "singular_values": sd.singular_values,
        "next_singular_value": sd.next_singular_value,
        "svd_method": sd.method,
        "zero_rows": est.zero_rows,
        "l_used": est.l_used,
        "timing_s": est.timings,
    }
    if est.vh is not None:
        out.update(
            vertices=est.vh.vertices,
            selected_indices=list(est.vh.selected_indices),
            vh_max_residual=est.vh.max_residual,
            fallback_used=est.vh.fallback_used,
        )
    if est.km is not None:
        out.update(centers=est.km.centers, kmeans_inertia=est.km.inertia)
    out.update(extra)
    return out
