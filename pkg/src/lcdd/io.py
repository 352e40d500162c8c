"""Dataset recipes, CSV reading and writing, and model persistence.

CSV dialect: comma separated, mandatory header row, dot decimal separator,
UTF-8. Floats are written with 17 significant digits so that every value
reads back bit for bit. All writers go through :func:`atomic_write_text`,
so an interrupted run never leaves a partial file behind.
"""

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ._validation import DataError, UNIT_TOL
from .classifier import DDClassifier, Orientation, PolynomialSeparator
from .sphere import SqrtCompositionalTransformer

__all__ = [
    "DatasetRecipe",
    "RECIPES",
    "IngestError",
    "LabeledSample",
    "get_recipe",
    "ingest",
    "atomic_write_text",
    "read_csv",
    "write_csv",
    "write_sample",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
    "MODEL_SCHEMA",
    "MODEL_SCHEMA_VERSION",
]

MODEL_SCHEMA = "lcdd.dd-model"
MODEL_SCHEMA_VERSION = 1
PREPROCESSING = ("sqrt_compositional", "sqrt_compositional_complement", "none")


class IngestError(DataError):
    """Input rows failed validation.

    ``errors`` holds ``(row, message)`` pairs; rows are 1-based data-row
    numbers (the header is row 0).
    """

    def __init__(self, errors, source=""):
        self.errors = list(errors)
        head = "; ".join(f"row {r}: {m}" for r, m in self.errors[:20])
        more = f" (+{len(self.errors) - 20} more)" if len(self.errors) > 20 else ""
        super().__init__(f"{source}: {len(self.errors)} invalid rows: {head}{more}")


@dataclass(frozen=True)
class DatasetRecipe:
    """How to turn a delimited file into a labeled spherical sample.

    Parameters
    ----------
    name : str
    columns : tuple of str or int, or None
        Feature columns by header name or 0-based position. None selects
        every column except the label.
    label : str or int or None
        Label column by name or position (negative positions count from the
        end). None for unlabeled data.
    preprocessing : {"sqrt_compositional", "sqrt_compositional_complement", "none"}
        ``none`` normalizes rows to unit length and leaves exact unit rows
        untouched.
    scale_divisor : float or None
        Raw values are divided by this before preprocessing.
    header : {"required", "auto"}
        ``auto`` accepts files without a header row when the first row is
        entirely numeric; columns must then be given by position.
    label_map : dict or None
        Maps raw label strings to output labels.
    """

    name: str
    columns: Optional[tuple] = None
    label: object = None
    preprocessing: str = "none"
    scale_divisor: Optional[float] = None
    header: str = "required"
    label_map: Optional[dict] = None
    complement_tol: float = 1e-9

    def __post_init__(self):
        if self.preprocessing not in PREPROCESSING:
            raise ValueError(f"preprocessing must be one of {PREPROCESSING}, got {self.preprocessing!r}")
        if self.header not in ("required", "auto"):
            raise ValueError(f"header must be 'required' or 'auto', got {self.header!r}")
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(self.columns))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


WHOLESALE_COLUMNS = ("Fresh", "Milk", "Grocery", "Frozen", "Detergents_Paper", "Delicassen")

RECIPES = {
    # UCI "Wholesale customers": six annual spend categories, Channel 1/2.
    "wholesale": DatasetRecipe(
        name="wholesale", columns=WHOLESALE_COLUMNS, label="Channel", preprocessing="sqrt_compositional"
    ),
    # UCI "Spambase": the 48 word-frequency percentages only; the character
    # frequency and capital-run columns are not compositional and are dropped.
    # The public file has no header row, hence positional columns.
    "spambase": DatasetRecipe(
        name="spambase",
        columns=tuple(range(48)),
        label=-1,
        preprocessing="sqrt_compositional_complement",
        scale_divisor=100.0,
        header="auto",
        label_map={"0": 1, "1": 2},
    ),
    "sphere": DatasetRecipe(name="sphere", columns=None, label=None, preprocessing="none"),
    "sphere-labeled": DatasetRecipe(name="sphere-labeled", columns=None, label="label", preprocessing="none"),
}


def get_recipe(spec):
    """Return a preset by name, a recipe loaded from a JSON file, or ``spec`` itself."""
    if isinstance(spec, DatasetRecipe):
        return spec
    if spec in RECIPES:
        return RECIPES[spec]
    if isinstance(spec, str) and os.path.isfile(spec):
        with open(spec, encoding="utf-8") as fh:
            return DatasetRecipe.from_dict(json.load(fh))
    raise DataError(f"unknown recipe {spec!r}; presets are {sorted(RECIPES)}")


@dataclass
class LabeledSample:
    X: np.ndarray
    y: Optional[np.ndarray]
    feature_names: list = field(default_factory=list)


# -- CSV ------------------------------------------------------------------------


def atomic_write_text(path, text):
    """Write ``text`` to a temporary file beside ``path`` and rename it in place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    """Write a header plus rows; floats use the shortest exact repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path, header="required"):
    """Read a CSV file into ``(header, rows)`` with rows as lists of strings.

    With ``header="auto"`` an all-numeric first row is treated as data and
    the returned header is ``None``.
    """
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    first = rows[0]
    if header == "auto" and all(_is_number(c) for c in first):
        return None, rows
    if all(_is_number(c) for c in first):
        raise DataError(f"{path}: header row is required (first row is numeric)")
    return [c.strip() for c in first], rows[1:]


def _resolve(col, names, width, path):
    if isinstance(col, (int, np.integer)):
        j = int(col) + (width if col < 0 else 0)
        if not 0 <= j < width:
            raise DataError(f"{path}: column position {col} out of range for {width} columns")
        return j
    if names is None:
        raise DataError(f"{path}: column {col!r} given by name but the file has no header")
    if col not in names:
        raise DataError(f"{path}: missing column {col!r}")
    return names.index(col)


def ingest(path, recipe):
    """Read ``path`` and apply ``recipe``.

    Returns
    -------
    LabeledSample
        Unit-norm rows and labels (None when the recipe has no label).

    Raises
    ------
    IngestError
        Listing every offending row with its 1-based row number.
    """
    recipe = get_recipe(recipe)
    names, rows = read_csv(path, recipe.header)
    width = len(names) if names is not None else len(rows[0]) if rows else 0
    if not rows:
        raise DataError(f"{path}: no data rows")
    label_j = None if recipe.label is None else _resolve(recipe.label, names, width, path)
    if recipe.columns is None:
        cols = [j for j in range(width) if j != label_j]
    else:
        cols = [_resolve(c, names, width, path) for c in recipe.columns]
    feature_names = [names[j] if names is not None else str(j) for j in cols]

    errors = []
    X = np.full((len(rows), len(cols)), np.nan)
    labels = []
    for r, row in enumerate(rows):
        if len(row) != width:
            errors.append((r + 1, f"expected {width} fields, got {len(row)}"))
            labels.append(None)
            continue
        try:
            X[r] = [float(row[j]) for j in cols]
        except ValueError:
            errors.append((r + 1, "non-numeric value in a feature column"))
        if label_j is not None:
            raw = row[label_j].strip()
            if recipe.label_map is not None:
                if raw not in recipe.label_map:
                    errors.append((r + 1, f"unexpected label {raw!r}"))
                labels.append(recipe.label_map.get(raw))
            else:
                labels.append(int(raw) if raw.lstrip("-").isdigit() else raw)

    bad = {r for r, _ in errors}
    ok = np.array([r + 1 not in bad for r in range(len(rows))])
    out = np.zeros_like(X)
    if recipe.preprocessing == "none":
        Xs = X / recipe.scale_divisor if recipe.scale_divisor else X
        norms = np.linalg.norm(Xs, axis=1)
        for r in np.flatnonzero(ok & ~(norms > 0)):
            errors.append((int(r) + 1, "zero or non-finite row"))
        exact = np.abs(norms - 1.0) <= UNIT_TOL
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(exact[:, None], Xs, Xs / norms[:, None])
    else:
        tr = SqrtCompositionalTransformer(
            scale=recipe.scale_divisor,
            complement=recipe.preprocessing == "sqrt_compositional_complement",
            complement_tol=recipe.complement_tol,
        )
        parts, row_errors = tr._prepare(np.where(ok[:, None], X, 1.0))
        errors += [(r + 1, m) for r, m in row_errors if ok[r]]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.sqrt(parts / parts.sum(axis=1, keepdims=True))
            out = out / np.linalg.norm(out, axis=1, keepdims=True)
    if errors:
        raise IngestError(sorted(errors), source=str(path))
    y = None if label_j is None else np.asarray(labels)
    if y is not None and y.dtype == object:
        y = y.astype(str)
    return LabeledSample(out, y, feature_names)


def write_sample(path, X, y=None, feature_names=None):
    """Write unit vectors (and optional labels) in the ``sphere`` recipe layout."""
    X = np.asarray(X, dtype=float)
    names = list(feature_names) if feature_names else [f"x{j + 1}" for j in range(X.shape[1])]
    header = names + (["label"] if y is not None else [])
    rows = (list(X[i]) + ([y[i]] if y is not None else []) for i in range(X.shape[0]))
    write_csv(path, header, rows)


# -- model persistence ------------------------------------------------------------


def _label_out(v):
    return v.item() if isinstance(v, np.generic) else v


def model_to_dict(clf):
    """Self-describing JSON-ready dict for a fitted :class:`DDClassifier`.

    Floats are stored as Python floats; JSON serializes them with the
    shortest repr that round-trips exactly.
    """
    if not hasattr(clf, "separator_"):
        raise ValueError("model is not fitted")
    return {
        "schema": MODEL_SCHEMA,
        "schema_version": MODEL_SCHEMA_VERSION,
        "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in clf.get_params().items()},
        "classes": [_label_out(c) for c in clf.classes_],
        "beta": float(clf.beta),
        "degree": int(clf.separator_.degree),
        "coefficients": [float(c) for c in clf.separator_.coeffs],
        "orientation": clf.separator_.orientation.value,
        "priors": [float(p) for p in clf.priors_],
        "training_risk": float(clf.training_risk_),
        "train1": clf.train1_.tolist(),
        "train2": clf.train2_.tolist(),
    }


def model_from_dict(d):
    if d.get("schema") != MODEL_SCHEMA:
        raise DataError(f"not a DD model document (schema {d.get('schema')!r})")
    if d.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise DataError(f"unsupported model schema version {d.get('schema_version')!r}")
    params = dict(d["params"])
    for k in ("degrees", "priors", "random_state"):
        if isinstance(params.get(k), list):
            params[k] = tuple(params[k])
    clf = DDClassifier(**params)
    clf.classes_ = np.array(d["classes"])
    clf.separator_ = PolynomialSeparator(np.array(d["coefficients"], dtype=float), Orientation(d["orientation"]))
    clf.degree_ = clf.separator_.degree
    clf.priors_ = tuple(d["priors"])
    clf.training_risk_ = d["training_risk"]
    clf.train1_ = np.array(d["train1"], dtype=float)
    clf.train2_ = np.array(d["train2"], dtype=float)
    clf.n_features_in_ = clf.train1_.shape[1]
    return clf


def save_model(clf, path):
    atomic_write_text(path, json.dumps(model_to_dict(clf), indent=1))


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read model ({exc})") from exc
    return model_from_dict(d)
