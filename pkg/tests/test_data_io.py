from pathlib import Path

import numpy as np
import pytest

from oba.data_io import (Dataset, LibsvmFormatError, SyntheticSpec, fingerprint,
                         generate_synthetic, normalize_features, read_libsvm, write_libsvm)
from oba.numkit import SparseMatrix

TINY = Path(__file__).parent / "data" / "tiny.svm"


def test_read_tiny():
    ds = read_libsvm(TINY)
    assert ds.shape == (10, 4)
    np.testing.assert_array_equal(ds.y, [1, -1, 1, -1, 1, -1, 1, -1, 1, -1])
    np.testing.assert_array_equal(ds.A.toarray()[0], [0.5, 0.0, -1.25, 0.0])
    assert ds.A.nnz == 24


def _write(tmp_path, text, name="f.svm"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("text, lineno", [
    ("+1 1:1\n-1 2:1 2:3\n", 2),
    ("+1 3:1 1:2\n", 1),
    ("+1 0:1\n", 1),
    ("+1 1:abc\n", 1),
    ("+1 1=2\n", 1),
    ("x 1:1\n", 1),
    ("+1 1:1  2:1\n", 1),
    ("+1 1:nan\n", 1),
])
def test_malformed_lines(tmp_path, text, lineno):
    with pytest.raises(LibsvmFormatError) as info:
        read_libsvm(_write(tmp_path, text))
    assert info.value.lineno == lineno


def test_label_mapping(tmp_path):
    p = _write(tmp_path, "0 1:1\n1 1:2\n2 1:3\n")
    with pytest.raises(LibsvmFormatError):
        read_libsvm(p)
    ds = read_libsvm(p, label_map={2: 1})
    np.testing.assert_array_equal(ds.y, [-1, 1, 1])
    ds = read_libsvm(p, regression=True)
    np.testing.assert_array_equal(ds.b, [0, 1, 2])
    assert ds.y is None


def test_crlf_comments_and_width(tmp_path):
    p = tmp_path / "crlf.svm"
    p.write_bytes(b"# header\r\n+1 2:1.5 # trailing\r\n\r\n-1\r\n")
    ds = read_libsvm(p, n_features=5)
    assert ds.shape == (2, 5)
    np.testing.assert_array_equal(ds.A.toarray(), [[0, 1.5, 0, 0, 0], [0, 0, 0, 0, 0]])
    with pytest.raises(ValueError):
        read_libsvm(p, n_features=1)


def test_roundtrip(tmp_path):
    ds = read_libsvm(TINY)
    out = tmp_path / "copy.svm"
    write_libsvm(ds, out)
    back = read_libsvm(out)
    np.testing.assert_array_equal(back.A.toarray(), ds.A.toarray())
    np.testing.assert_array_equal(back.y, ds.y)
    write_libsvm(back, tmp_path / "again.svm")
    assert fingerprint(out) == fingerprint(tmp_path / "again.svm")


def test_roundtrip_regression_exact(tmp_path, rng):
    A = SparseMatrix(rng.standard_normal((5, 3)))
    ds = Dataset(A=A, b=rng.standard_normal(5) / 3)
    write_libsvm(ds, tmp_path / "r.svm")
    back = read_libsvm(tmp_path / "r.svm", regression=True)
    np.testing.assert_array_equal(back.b, ds.b)
    np.testing.assert_array_equal(back.A.toarray(), A.toarray())


def test_normalize_maxabs_and_minmax():
    ds = Dataset(A=SparseMatrix(np.array([[2.0, 0.0, 1.0], [-4.0, 0.0, 3.0]])), y=np.array([1.0, -1.0]))
    m = normalize_features(ds, "maxabs").A.toarray()
    np.testing.assert_array_equal(m, [[0.5, 0.0, 1 / 3], [-1.0, 0.0, 1.0]])
    mm = normalize_features(ds, "minmax").A.toarray()
    np.testing.assert_array_equal(mm, [[1.0, 0.0, -1.0], [-1.0, 0.0, 1.0]])
    assert normalize_features(ds, "none") is ds
    with pytest.raises(ValueError):
        normalize_features(ds, "zscore")


def test_synthetic_shape_and_factor():
    ds = generate_synthetic(SyntheticSpec(n=40, seed=3))
    X = ds.A.toarray()
    assert X.shape == (40, 40)
    assert np.allclose(np.tril(X, -1), 0.0)
    assert set(np.unique(ds.y)) <= {-1.0, 1.0}
    rng = np.random.default_rng(3)
    rng.random(40)
    R = rng.random((40, 40))
    M = R + R.T
    lam = np.linalg.eigvalsh(M).min()
    if lam < 0:
        M += -2 * lam * np.eye(40)
    np.testing.assert_allclose(X.T @ X, M, rtol=1e-10, atol=1e-10)


def test_synthetic_deterministic(tmp_path):
    a = generate_synthetic(SyntheticSpec(n=30, seed=7), normalize="minmax")
    b = generate_synthetic(SyntheticSpec(n=30, seed=7), normalize="minmax")
    write_libsvm(a, tmp_path / "a.svm")
    write_libsvm(b, tmp_path / "b.svm")
    assert fingerprint(tmp_path / "a.svm") == fingerprint(tmp_path / "b.svm")
    c = generate_synthetic(SyntheticSpec(n=30, seed=8))
    assert not np.array_equal(a.y, c.y) or not np.array_equal(a.A.toarray(), c.A.toarray())


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(n=1)
