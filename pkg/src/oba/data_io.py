"""Dataset loading, writing, scaling and the synthetic generator."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .numkit import SparseMatrix


class LibsvmFormatError(ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Dataset:
    A: SparseMatrix
    y: np.ndarray | None = None
    b: np.ndarray | None = None
    feature_names: list | None = field(default=None)

    @property
    def shape(self):
        return self.A.shape

    @property
    def targets(self):
        return self.y if self.y is not None else self.b


def _parse_line(line, lineno):
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    tokens = body.split(" ")
    try:
        label = float(tokens[0])
    except ValueError:
        raise LibsvmFormatError(lineno, f"bad label {tokens[0]!r}") from None
    idx = []
    val = []
    prev = 0
    for tok in tokens[1:]:
        if not tok:
            raise LibsvmFormatError(lineno, "features must be separated by single spaces")
        key, sep, value = tok.partition(":")
        if not sep or not key.isdigit():
            raise LibsvmFormatError(lineno, f"malformed feature {tok!r}")
        j = int(key)
        if j < 1:
            raise LibsvmFormatError(lineno, f"feature index {j} is not positive")
        if j == prev:
            raise LibsvmFormatError(lineno, f"duplicate feature index {j}")
        if j < prev:
            raise LibsvmFormatError(lineno, f"feature index {j} follows {prev}")
        try:
            v = float(value)
        except ValueError:
            raise LibsvmFormatError(lineno, f"bad value {value!r}") from None
        if not np.isfinite(v):
            raise LibsvmFormatError(lineno, f"non-finite value {value!r}")
        prev = j
        idx.append(j - 1)
        val.append(v)
    return label, idx, val


def read_libsvm(path, label_map=None, n_features=None, regression=False) -> Dataset:
    """Read a LIBSVM/SVMlight text file.

    Labels are mapped to -1/+1 unless ``regression`` is set, in which case
    they are returned as the target vector ``b``. ``label_map`` overrides
    the default mapping ``{0: -1, -1: -1, 1: +1}``.
    """
    rows = []
    labels = []
    width = 0
    with open(path, "r", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            parsed = _parse_line(line.rstrip("\r\n"), lineno)
            if parsed is None:
                continue
            label, idx, val = parsed
            if idx:
                width = max(width, idx[-1] + 1)
            rows.append((idx, val))
            labels.append((lineno, label))
    if n_features is not None:
        if n_features < width:
            raise ValueError(f"file uses {width} features, more than n_features={n_features}")
        width = n_features
    A = SparseMatrix.from_rows(rows, width)
    raw = np.array([lab for _, lab in labels], dtype=np.float64)
    if regression:
        return Dataset(A=A, b=raw)
    mapping = {0.0: -1.0, -1.0: -1.0, 1.0: 1.0}
    if label_map is not None:
        mapping.update({float(k): float(v) for k, v in label_map.items()})
    y = np.empty(len(labels))
    for i, (lineno, lab) in enumerate(labels):
        if lab not in mapping:
            raise LibsvmFormatError(lineno, f"label {lab:g} has no mapping to -1/+1")
        y[i] = mapping[lab]
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("label_map must map onto -1/+1")
    return Dataset(A=A, y=y)


def write_libsvm(ds: Dataset, path):
    targets = ds.targets
    with open(path, "w", newline="\n") as fh:
        for (idx, val), t in zip(ds.A.rows(), targets):
            parts = [f"{int(t):+d}" if ds.y is not None else repr(float(t))]
            parts.extend(f"{j + 1}:{float(v)!r}" for j, v in zip(idx, val))
            fh.write(" ".join(parts) + "\n")


def normalize_features(ds: Dataset, method: str = "maxabs") -> Dataset:
    """Scale every column into ``[-1, 1]``.

    ``maxabs`` divides each column by its largest magnitude and keeps
    sparsity. ``minmax`` maps each column's range affinely onto ``[-1, 1]``
    (what LIBSVM's ``svm-scale`` does by default); zeros generally become
    nonzero, so the result is dense. Constant columns are left unchanged.
    """
    csr = ds.A.csr
    if method == "none":
        return ds
    if method == "maxabs":
        scale = np.asarray(abs(csr).max(axis=0).todense()).ravel()
        scale[scale == 0] = 1.0
        A = SparseMatrix(csr @ sp.diags(1.0 / scale))
    elif method == "minmax":
        X = csr.toarray()
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        span = hi - lo
        const = span == 0
        span[const] = 1.0
        Y = 2.0 * (X - lo) / span - 1.0
        Y[:, const] = X[:, const]
        del X
        A = SparseMatrix(Y)
    else:
        raise ValueError(f"unknown normalization {method!r}")
    return Dataset(A=A, y=ds.y, b=ds.b, feature_names=ds.feature_names)


@dataclass
class SyntheticSpec:
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")


def _smallest_eigenvalue(M):
    return float(scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[0, 0])[0])


def generate_synthetic(spec: SyntheticSpec, normalize: str = "none") -> Dataset:
    """Balanced, strongly non-diagonally-dominant classification problem.

    Labels are +-1 with probability 1/2. With ``R`` uniform on ``[0, 1]``,
    ``M = R + R^T`` is shifted by ``-2 * lambda_min(M) * I`` when indefinite
    and the data matrix is its upper Cholesky factor, so ``X^T X = M``.
    Randomness comes from numpy's PCG64 seeded with ``spec.seed``.
    """
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    y = -1.0 + (rng.random(n) > 0.5) * 2.0
    R = rng.random((n, n))
    M = R + R.T
    del R
    mineig = _smallest_eigenvalue(M)
    if mineig < 0:
        M[np.diag_indices(n)] += -2.0 * mineig
    try:
        X = scipy.linalg.cholesky(M, lower=False)
    except np.linalg.LinAlgError:
        M[np.diag_indices(n)] += 1e-10
        X = scipy.linalg.cholesky(M, lower=False, overwrite_a=True)
    ds = Dataset(A=SparseMatrix(X), y=y)
    return normalize_features(ds, normalize)


def fingerprint(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
