import numpy as np
import pytest
from collections import Counter

from helpers import nearest_mean_accuracy
from pathnet import tasks as tk
from pathnet.tensorcore import make_rng


def test_blobs_shape_at_default_scale():
    ds = tk.make_blobs(6, 100, 30, 0.5, seed=1)
    assert ds.features.shape == (180, 100)
    assert ds.num_classes == 6
    assert Counter(ds.labels.tolist()) == {c: 30 for c in range(6)}


def test_blobs_deterministic():
    a = tk.make_blobs(3, 5, 10, 0.3, seed=4)
    b = tk.make_blobs(3, 5, 10, 0.3, seed=4)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()
    assert a.fingerprint() == b.fingerprint()
    assert tk.make_blobs(3, 5, 10, 0.3, seed=5).fingerprint() != a.fingerprint()


def test_zero_spread_is_exactly_separable():
    ds = tk.make_blobs(6, 8, 5, 0.0, seed=2)
    assert nearest_mean_accuracy(ds, ds) == 1.0


def test_blobs_errors():
    with pytest.raises(tk.DatasetError):
        tk.make_blobs(1, 3, 4, 0.1, 0)
    with pytest.raises(tk.DatasetError):
        tk.make_blobs(2, 3, 0, 0.1, 0)


def test_dataset_validation_and_immutability():
    with pytest.raises(tk.DatasetError):
        tk.Dataset(np.zeros((2, 2)), [0, 2], 2)
    with pytest.raises(tk.DatasetError):
        tk.Dataset(np.array([[np.nan, 1.0]]), [0], 1)
    ds = tk.Dataset(np.zeros((2, 2)), [0, 1], 2)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


def test_identity_permutation_is_noop():
    ds = tk.make_blobs(4, 3, 5, 0.2, 0)
    out = tk.derive_related_task(ds, "label-permutation", 1, permutation=[0, 1, 2, 3])
    assert out.features.tobytes() == ds.features.tobytes()
    assert out.labels.tobytes() == ds.labels.tobytes()


def test_label_permutation_keeps_features():
    ds = tk.make_blobs(4, 3, 5, 0.2, 0)
    out = tk.derive_related_task(ds, "label-permutation", 7)
    assert out.features.tobytes() == ds.features.tobytes()
    mapping = {}
    for old, new in zip(ds.labels, out.labels):
        assert mapping.setdefault(old, new) == new
    assert sorted(mapping.values()) == [0, 1, 2, 3]


def test_rotation_preserves_distances():
    ds = tk.make_blobs(3, 12, 10, 0.5, 0)
    out = tk.derive_related_task(ds, "fixed-rotation", 3)
    # Gram-matrix oracle: an orthogonal map leaves every inner product unchanged
    np.testing.assert_allclose(out.features @ out.features.T, ds.features @ ds.features.T, atol=1e-9)
    d0 = np.linalg.norm(ds.features[:, None] - ds.features[None], axis=2)
    d1 = np.linalg.norm(out.features[:, None] - out.features[None], axis=2)
    assert np.abs(d0 - d1).max() < 1e-9
    assert not np.allclose(out.features, ds.features)


def test_class_subset():
    ds = tk.make_blobs(6, 3, 5, 0.2, 0)
    out = tk.derive_related_task(ds, "class-subset", 2, subset_size=3)
    assert out.num_classes == 3
    assert set(out.labels.tolist()) == {0, 1, 2}
    assert len(out) == 15
    with pytest.raises(tk.DatasetError):
        tk.derive_related_task(ds, "class-subset", 2, subset_size=1)
    with pytest.raises(tk.DatasetError):
        tk.derive_related_task(ds, "mirror", 2)


def test_split_union_and_stratification():
    ds = tk.make_blobs(5, 3, 37, 0.2, 0)
    train, ev = tk.split(ds, 0.2, seed=3)
    rows = lambda d: Counter(map(tuple, np.column_stack([d.features, d.labels]).tolist()))
    assert rows(train) + rows(ev) == rows(ds)
    for c in range(5):
        share = int((ev.labels == c).sum())
        assert abs(share - 0.2 * 37) <= 1


def test_split_deterministic():
    ds = tk.make_blobs(3, 3, 10, 0.2, 0)
    a, b = tk.split(ds, 0.3, 1), tk.split(ds, 0.3, 1)
    assert a[0].features.tobytes() == b[0].features.tobytes()


def test_split_errors():
    ds = tk.make_blobs(2, 3, 5, 0.2, 0)
    with pytest.raises(tk.DatasetError):
        tk.split(ds, 0.05, 0)
    with pytest.raises(tk.DatasetError):
        tk.split(ds, 1.0, 0)


def test_batch_stream_covers_epoch():
    ds = tk.make_blobs(2, 3, 16, 0.2, 0)
    stream = tk.batch_stream(ds, 16, make_rng(0))
    first, second = next(stream), next(stream)
    seen = np.vstack([first[0], second[0]])
    assert sorted(map(tuple, seen.tolist())) == sorted(map(tuple, ds.features.tolist()))


def test_batch_stream_drops_short_tail_and_is_deterministic():
    ds = tk.make_blobs(2, 3, 25, 0.2, 0)
    a = tk.batch_stream(ds, 16, make_rng(4))
    b = tk.batch_stream(ds, 16, make_rng(4))
    for _ in range(6):
        (xa, ya), (xb, yb) = next(a), next(b)
        assert xa.shape == (16, 3)
        assert xa.tobytes() == xb.tobytes() and ya.tobytes() == yb.tobytes()
    with pytest.raises(tk.DatasetError):
        next(tk.batch_stream(ds, 51, make_rng(0)))


def test_load_csv_small(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("0.5,1.5,0\n2,3,1\n-1,4e-3,1\n")
    ds = tk.load_csv(p, label_column=-1)
    assert ds.features.shape == (3, 2)
    assert ds.num_classes == 2
    np.testing.assert_array_equal(ds.features[2], [-1.0, 4e-3])


def test_load_csv_header_and_first_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("label,a,b\n2,0.1,0.2\n0,0.3,0.4\n")
    ds = tk.load_csv(p, label_column=0, header=True)
    assert ds.labels.tolist() == [2, 0]
    assert ds.num_classes == 3


@pytest.mark.parametrize("text,error,row", [
    ("1,2,0\n1,2\n", tk.RaggedRowError, 2),
    ("1,2,0\n1,x,1\n", tk.NonNumericCellError, 2),
    ("1,2,0\n3,4,1\n5,6,-1\n", tk.NegativeLabelError, 3),
])
def test_load_csv_errors(tmp_path, text, error, row):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(error) as info:
        tk.load_csv(p)
    assert info.value.row == row
    assert f"row {row}" in str(info.value)


def test_csv_round_trip(tmp_path):
    ds = tk.make_blobs(3, 4, 6, 0.7, 2)
    p = tmp_path / "rt.csv"
    tk.save_csv(ds, p, header=True)
    back = tk.load_csv(p, header=True)
    assert back.features.tobytes() == ds.features.tobytes()
    assert back.labels.tolist() == ds.labels.tolist()
