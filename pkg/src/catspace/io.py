"""File formats: CSV ingestion, the binary model container, run manifests.

The model container is a versioned text header followed by raw little-endian
float64 matrix payloads, so save -> load -> project round-trips are
bit-exact and the format stays trivially parseable from other languages.
"""

import json
import os

import numpy as np

from . import baselines, core, kernel
from .exceptions import DataError

__all__ = [
    "load_csv",
    "save_model",
    "load_model",
    "write_manifest",
]

_DELIMITERS = (",", ";", "\t")
MODEL_MAGIC = "catspace-model v1"


def _sniff_delimiter(line):
    counts = [(line.count(d), -i) for i, d in enumerate(_DELIMITERS)]
    best = max(range(len(_DELIMITERS)), key=lambda i: counts[i])
    if line.count(_DELIMITERS[best]) == 0:
        raise DataError("could not detect a delimiter (comma, semicolon or tab)")
    return _DELIMITERS[best]


def _is_float(cell):
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_csv(path, label_col="last", header="auto", delimiter=None):
    """Load a delimited numeric table with one label column into a Dataset.

    The label column may hold arbitrary strings or numbers; labels are mapped
    to contiguous class ids in order of first appearance and the original
    names are kept on the dataset. ``label_col`` is a 0-based column index or
    "last". ``header`` may be True, False or "auto" (first row is a header
    when any of its feature cells is non-numeric).
    """
    with open(path, encoding="utf-8") as fh:
        raw_lines = [ln.rstrip("\r\n") for ln in fh]
    lines = [(i + 1, ln) for i, ln in enumerate(raw_lines) if ln.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty file")
    if delimiter is None:
        delimiter = _sniff_delimiter(lines[0][1])

    rows = [(lineno, ln.split(delimiter)) for lineno, ln in lines]
    width = len(rows[0][1])
    if width < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    for lineno, cells in rows:
        if len(cells) != width:
            raise DataError(f"{path}: row at line {lineno} has {len(cells)} cells, expected {width}")

    if label_col == "last":
        label_idx = width - 1
    else:
        label_idx = int(label_col)
        if label_idx < 0:
            label_idx += width
        if not 0 <= label_idx < width:
            raise DataError(f"{path}: label column {label_col} out of range for width {width}")
    feature_cols = [j for j in range(width) if j != label_idx]

    if header == "auto":
        first = rows[0][1]
        header = any(not _is_float(first[j]) for j in feature_cols)
    if header:
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: no data rows below the header")

    n = len(rows)
    x = np.empty((n, len(feature_cols)))
    labels = []
    for r, (lineno, cells) in enumerate(rows):
        for c, j in enumerate(feature_cols):
            cell = cells[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at line {lineno}, column {j + 1}"
                ) from None
            if not np.isfinite(value):
                raise DataError(
                    f"{path}: non-finite value {cell!r} at line {lineno}, column {j + 1}"
                )
            x[r, c] = value
        labels.append(cells[label_idx].strip())

    names = []
    ids = {}
    y = np.empty(n, dtype=int)
    for r, lab in enumerate(labels):
        if lab not in ids:
            ids[lab] = len(names)
            names.append(lab)
        y[r] = ids[lab]
    if len(names) < 2:
        raise DataError(f"{path}: found a single class {names[0]!r}")
    return core.Dataset(x, y, label_names=tuple(names))


# --- model container ---------------------------------------------------------

_KIND_BY_CLASS = {
    baselines.PcaModel: "pca",
    baselines.KpcaModel: "kpca",
    baselines.FldModel: "fld",
    baselines.KfldModel: "kfld",
}


def _model_kind(model):
    if isinstance(model, core.LinearModel):
        return "cqs" if model.variant == "quad" else "cas"
    if isinstance(model, kernel.KernelModel):
        return "kcqs" if model.variant == "quad" else "kcas"
    kind = _KIND_BY_CLASS.get(type(model))
    if kind is None:
        raise DataError(f"cannot serialize {type(model).__name__}")
    return kind


def _scalar_lines(pairs):
    out = []
    for key, value in pairs:
        if value is None:
            continue
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, float):
            value = repr(value)
        out.append(f"{key} {value}")
    return out


def save_model(path, model):
    """Write a fitted model (any reducer kind) to the binary container."""
    kind = _model_kind(model)
    scalars = [("kind", kind)]
    matrices = []

    def put(name, arr):
        if arr is None:
            return
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        matrices.append((name, arr))

    if isinstance(model, core.LinearModel):
        cfg = model.config or core.FitConfig(variant=model.variant, epsilon=model.epsilon)
        scalars += _scalar_lines([
            ("epsilon", float(model.epsilon)),
            ("delta", float(cfg.delta)),
            ("max_iter", int(cfg.max_iter)),
            ("seed", int(cfg.seed)),
            ("zscore", model.feature_mean is not None),
            ("converged", model.converged),
            ("degenerate", model.degenerate),
            ("n_iter", int(model.n_iter)),
        ])
        put("axes", model.axes)
        put("feature_mean", model.feature_mean)
        put("feature_scale", model.feature_scale)
        put("objective_trace", model.objective_trace)
    elif isinstance(model, kernel.KernelModel):
        cfg = model.config or core.FitConfig(variant=model.variant, epsilon=model.epsilon)
        scalars += _scalar_lines([
            ("kernel", model.spec.kind),
            ("sigma", float(model.spec.sigma)),
            ("degree", int(model.spec.degree)),
            ("offset", float(model.spec.offset)),
            ("epsilon", float(model.epsilon)),
            ("delta", float(cfg.delta)),
            ("max_iter", int(cfg.max_iter)),
            ("seed", int(cfg.seed)),
            ("zscore", model.feature_mean is not None),
            ("converged", model.converged),
            ("degenerate", model.degenerate),
            ("n_iter", int(model.n_iter)),
            ("retained_rank", int(model.retained_rank)),
        ])
        put("coef", model.coef)
        put("train_X", model.train_X)
        put("ginvhalf", model.ginvhalf)
        put("reduced_frame", model.reduced_frame)
        put("feature_mean", model.feature_mean)
        put("feature_scale", model.feature_scale)
        put("objective_trace", model.objective_trace)
    elif isinstance(model, baselines.PcaModel):
        scalars += _scalar_lines([("degenerate", model.degenerate)])
        put("mean", model.mean)
        put("components", model.components)
        put("eigenvalues", model.eigenvalues)
    elif isinstance(model, baselines.KpcaModel):
        scalars += _scalar_lines([
            ("kernel", model.spec.kind),
            ("sigma", float(model.spec.sigma)),
            ("degree", int(model.spec.degree)),
            ("offset", float(model.spec.offset)),
            ("total_mean", float(model.total_mean)),
            ("degenerate", model.degenerate),
        ])
        put("train_X", model.train_X)
        put("alphas", model.alphas)
        put("col_means", model.col_means)
        put("eigenvalues", model.eigenvalues)
    elif isinstance(model, baselines.FldModel):
        scalars += _scalar_lines([
            ("degenerate", model.degenerate),
            ("ridged", model.ridged),
        ])
        put("directions", model.directions)
        put("eigenvalues", model.eigenvalues)
    elif isinstance(model, baselines.KfldModel):
        scalars += _scalar_lines([
            ("kernel", model.spec.kind),
            ("sigma", float(model.spec.sigma)),
            ("degree", int(model.spec.degree)),
            ("offset", float(model.spec.offset)),
            ("degenerate", model.degenerate),
            ("ridged", model.ridged),
        ])
        put("train_X", model.train_X)
        put("coef", model.coef)
        put("eigenvalues", model.eigenvalues)

    header_lines = [MODEL_MAGIC, "format little-endian float64 row-major"]
    header_lines += scalars
    for name, arr in matrices:
        header_lines.append(f"matrix {name} {arr.shape[0]} {arr.shape[1]}")
    header_lines.append("end")
    blob = b"".join(arr.astype("<f8", copy=False).tobytes(order="C") for _, arr in matrices)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header_lines) + "\n").encode("utf-8"))
        fh.write(blob)


def _parse_header(path):
    header = []
    offset = 0
    with open(path, "rb") as fh:
        for raw in fh:
            offset += len(raw)
            line = raw.decode("utf-8").rstrip("\n")
            header.append(line)
            if line == "end":
                break
        else:
            raise DataError(f"{path}: truncated model header")
        blob = fh.read()
    if not header or header[0] != MODEL_MAGIC:
        raise DataError(f"{path}: not a catspace model file")
    scalars = {}
    matrices = []
    for line in header[1:-1]:
        key, _, rest = line.partition(" ")
        if key == "matrix":
            name, rows, cols = rest.rsplit(" ", 2)
            matrices.append((name, int(rows), int(cols)))
        else:
            scalars[key] = rest
    return scalars, matrices, blob


def load_model(path):
    """Read a model container back into the matching model object."""
    scalars, matrix_decls, blob = _parse_header(path)
    arrays = {}
    pos = 0
    for name, rows, cols in matrix_decls:
        count = rows * cols
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).reshape(rows, cols)
        pos += count * 8
        arrays[name] = np.array(arr)  # writable, native-order copy
    if pos != len(blob):
        raise DataError(f"{path}: payload size mismatch")

    kind = scalars.get("kind")
    flat = lambda name: arrays[name][0] if name in arrays else None

    if kind in ("cqs", "cas"):
        cfg = core.FitConfig(
            variant="quad" if kind == "cqs" else "abs",
            epsilon=float(scalars["epsilon"]),
            delta=float(scalars["delta"]),
            max_iter=int(scalars["max_iter"]),
            seed=int(scalars["seed"]),
            zscore=scalars["zscore"] == "1",
        )
        return core.LinearModel(
            axes=arrays["axes"],
            variant=cfg.variant,
            epsilon=cfg.epsilon,
            feature_mean=flat("feature_mean"),
            feature_scale=flat("feature_scale"),
            objective_trace=flat("objective_trace"),
            converged=scalars["converged"] == "1",
            degenerate=scalars["degenerate"] == "1",
            n_iter=int(scalars["n_iter"]),
            config=cfg,
        )
    if kind in ("kcqs", "kcas"):
        cfg = core.FitConfig(
            variant="quad" if kind == "kcqs" else "abs",
            epsilon=float(scalars["epsilon"]),
            delta=float(scalars["delta"]),
            max_iter=int(scalars["max_iter"]),
            seed=int(scalars["seed"]),
            zscore=scalars["zscore"] == "1",
        )
        spec = kernel.KernelSpec(
            kind=scalars["kernel"],
            sigma=float(scalars["sigma"]),
            degree=int(scalars["degree"]),
            offset=float(scalars["offset"]),
        )
        return kernel.KernelModel(
            coef=arrays["coef"],
            train_X=arrays["train_X"],
            spec=spec,
            variant=cfg.variant,
            epsilon=cfg.epsilon,
            ginvhalf=arrays.get("ginvhalf"),
            retained_rank=int(scalars["retained_rank"]),
            reduced_frame=arrays.get("reduced_frame"),
            feature_mean=flat("feature_mean"),
            feature_scale=flat("feature_scale"),
            objective_trace=flat("objective_trace"),
            converged=scalars["converged"] == "1",
            degenerate=scalars["degenerate"] == "1",
            n_iter=int(scalars["n_iter"]),
            config=cfg,
        )
    if kind == "pca":
        return baselines.PcaModel(
            kind="pca",
            mean=flat("mean"),
            components=arrays["components"],
            eigenvalues=flat("eigenvalues"),
            degenerate=scalars["degenerate"] == "1",
        )
    if kind == "kpca":
        spec = kernel.KernelSpec(
            kind=scalars["kernel"], sigma=float(scalars["sigma"]),
            degree=int(scalars["degree"]), offset=float(scalars["offset"]),
        )
        return baselines.KpcaModel(
            kind="kpca",
            train_X=arrays["train_X"],
            spec=spec,
            alphas=arrays["alphas"],
            col_means=flat("col_means"),
            total_mean=float(scalars["total_mean"]),
            eigenvalues=flat("eigenvalues"),
            degenerate=scalars["degenerate"] == "1",
        )
    if kind == "fld":
        return baselines.FldModel(
            kind="fld",
            directions=arrays["directions"],
            eigenvalues=flat("eigenvalues"),
            degenerate=scalars["degenerate"] == "1",
            ridged=scalars["ridged"] == "1",
        )
    if kind == "kfld":
        spec = kernel.KernelSpec(
            kind=scalars["kernel"], sigma=float(scalars["sigma"]),
            degree=int(scalars["degree"]), offset=float(scalars["offset"]),
        )
        return baselines.KfldModel(
            kind="kfld",
            train_X=arrays["train_X"],
            spec=spec,
            coef=arrays["coef"],
            eigenvalues=flat("eigenvalues"),
            degenerate=scalars["degenerate"] == "1",
            ridged=scalars["ridged"] == "1",
        )
    raise DataError(f"{path}: unknown model kind {kind!r}")


def write_manifest(out_dir, command, params):
    """Record how an output directory was produced (enough to rerun it)."""
    from . import __version__

    payload = {
        "tool": "catspace",
        "version": __version__,
        "command": command,
        "params": params,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
