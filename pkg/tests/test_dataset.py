import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from npc.dataset import (
    Dataset,
    DatasetError,
    MinMaxNormalizer,
    apply_minmax,
    find_keel_partitions,
    fit_minmax,
    load_dataset,
    load_partition,
    parse_csv,
    parse_keel,
    stratified_folds,
    to_csv,
    to_keel,
)

HEADER = """@relation tiny
@attribute a real [0.0, 1.0]
@attribute b real [0.0, 2.0]
@attribute Class {positive, negative}
@inputs a, b
@outputs Class
@data
"""


def keel(body, header=HEADER):
    return header + body


def test_parse_keel_basic():
    ds = parse_keel(keel("1.0,2.0,negative\n1.0,2.0,negative\n1.0,2.0,negative\n0.0,0.0,positive\n"))
    assert len(ds) == 4
    assert ds.labels.tolist() == [0, 0, 0, 1]
    assert ds.name == "tiny"
    assert ds.feature_names == ("a", "b")
    assert ds.class_values == ("negative", "positive")


def test_parse_keel_comments_spaces_and_case():
    text = "% leading comment\n" + keel(" 1.0 , 2.0 , Negative\n\n0,0,POSITIVE\n").replace(
        "{positive, negative}", "{POSITIVE, Negative}"
    )
    ds = parse_keel(text)
    assert ds.labels.tolist() == [0, 1]


def test_minority_fallback_mapping():
    # 7 "g" rows and 3 "b" rows, no positive/negative spelling
    header = "@relation gb\n@attribute x real\n@attribute Class {g, b}\n@data\n"
    body = "".join(f"{i},g\n" for i in range(7)) + "".join(f"{i},b\n" for i in range(3))
    ds = parse_keel(header + body)
    assert ds.labels.tolist() == [0] * 7 + [1] * 3
    assert ds.class_values == ("g", "b")


def test_tie_goes_to_smaller_spelling():
    header = "@relation t\n@attribute x real\n@attribute Class {zz, aa}\n@data\n"
    ds = parse_keel(header + "1,zz\n2,aa\n")
    assert ds.labels.tolist() == [0, 1]


def test_class_attribute_from_outputs_when_not_last():
    text = (
        "@relation r\n@attribute Class {positive, negative}\n@attribute x real\n"
        "@inputs x\n@outputs Class\n@data\npositive, 3\nnegative, 4\n"
    )
    ds = parse_keel(text)
    assert ds.features.ravel().tolist() == [3.0, 4.0]
    assert ds.labels.tolist() == [1, 0]


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        (keel("1.0,x,negative\n"), 8, "non-numeric"),
        (keel("1.0,2.0\n"), 8, "expected 3 values"),
        (keel("1.0,2.0,negative\n1.0,2.0,maybe\n"), 9, "undeclared class"),
        (HEADER.replace("{positive, negative}", "{a, b, c}") + "1,2,a\n", 4, "two values"),
        ("@relation r\n@attribute x real\n@bogus\n@data\n", 3, "unexpected header"),
        ("@relation r\n@attribute x {p, q}\n@attribute Class {positive, negative}\n@data\n", 2, "nominal input"),
        (keel("1.0,nan,negative\n"), 8, "non-finite"),
    ],
)
def test_parse_keel_errors_carry_line(text, line, fragment):
    with pytest.raises(DatasetError, match=fragment) as info:
        parse_keel(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_missing_data_section():
    with pytest.raises(DatasetError, match="@data"):
        parse_keel("@relation r\n@attribute x real\n")


def test_parse_csv_named_label():
    ds = parse_csv("a,b,y\n1,2,0\n3,4,0\n5,6,1\n", label_column="y")
    assert ds.labels.tolist() == [0, 0, 1]
    assert ds.features.tolist() == [[1, 2], [3, 4], [5, 6]]
    assert ds.feature_names == ("a", "b")


def test_parse_csv_blank_lines_skipped():
    ds = parse_csv("a,b,y\n1,2,0\n\n3,4,0\n5,6,1\n\n", label_column="y")
    assert len(ds) == 3


def test_parse_csv_minority_letters():
    ds = parse_csv("1,A\n2,A\n3,A\n4,B\n", label_column=1)
    assert ds.labels.tolist() == [0, 0, 0, 1]


def test_parse_csv_zero_one_labels_kept_as_given():
    # "1" is the majority here but the 0/1 spelling is taken literally
    ds = parse_csv("x,y\n1,1\n2,1\n3,0\n", label_column="y")
    assert ds.labels.tolist() == [1, 1, 0]


def test_parse_csv_header_autodetect():
    ds = parse_csv("f1,f2,cls\n1,2,a\n3,4,b\n5,6,b\n")
    assert ds.feature_names == ("f1", "f2")
    assert ds.labels.tolist() == [1, 0, 0]


@pytest.mark.parametrize(
    "text, kwargs, fragment",
    [
        ("a,y\n1,0\n", {"label_column": "z"}, "missing label column"),
        ("a,y\n1,0\nq,1\n", {"label_column": "y"}, "non-numeric"),
        ("a,y\n1,0\n2,0\n", {"label_column": "y"}, "two classes"),
        ("a,y\n1,0\n2,1,3\n", {"label_column": "y"}, "expected 2 values"),
    ],
)
def test_parse_csv_errors(text, kwargs, fragment):
    with pytest.raises(DatasetError, match=fragment):
        parse_csv(text, **kwargs)


def test_dataset_rejects_nan():
    with pytest.raises(ValueError):
        Dataset("x", [[np.nan]], [0])


def test_dataset_is_immutable():
    ds = parse_csv("a,y\n1,0\n2,1\n", label_column="y")
    with pytest.raises(ValueError):
        ds.features[0, 0] = 9


def test_unlabeled_dataset():
    ds = Dataset("queries", [[1.0, 2.0]], None)
    assert not ds.is_labeled
    with pytest.raises(ValueError):
        ds.check_trainable()


def test_load_dataset_reads_both_formats(tmp_path):
    (tmp_path / "d.csv").write_text("a,y\n1,0\n2,0\n3,1\n")
    (tmp_path / "d.dat").write_text(keel("1,2,negative\n0,0,positive\n"))
    assert len(load_dataset(tmp_path / "d.csv")) == 3
    assert len(load_dataset(tmp_path / "d.dat")) == 2
    with pytest.raises(DatasetError, match="cannot read"):
        load_dataset(tmp_path / "missing.dat")


# --- round trips ----------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def datasets(draw):
    n = draw(st.integers(2, 30))
    d = draw(st.integers(1, 5))
    X = draw(hnp.arrays(np.float64, (n, d), elements=finite))
    y = draw(hnp.arrays(np.int64, n, elements=st.integers(0, 1)))
    y[0], y[1] = 0, 1
    return Dataset("rt", X, y, tuple(f"f{i}" for i in range(d)), ("negative", "positive"))


@given(datasets())
def test_keel_round_trip(ds):
    assert parse_keel(to_keel(ds)) == ds


@given(datasets())
def test_csv_round_trip(ds):
    assert parse_csv(to_csv(ds), label_column="Class", name="rt") == ds


# --- folds -----------------------------------------------------------------


def make(n_maj, n_min):
    X = np.arange(n_maj + n_min, dtype=float).reshape(-1, 1)
    return Dataset("f", X, [0] * n_maj + [1] * n_min)


def test_folds_divisible_counts():
    ds = make(100, 20)
    plan = stratified_folds(ds, 5, seed=0)
    for fold in range(5):
        labels = ds.labels[plan.test_indices(fold)]
        assert (np.sum(labels == 0), np.sum(labels == 1)) == (20, 4)


def test_folds_deterministic():
    ds = make(100, 20)
    assert stratified_folds(ds, 5, seed=7) == stratified_folds(ds, 5, seed=7)
    assert stratified_folds(ds, 5, seed=7) != stratified_folds(ds, 5, seed=8)


def test_folds_uneven_counts():
    ds = make(23, 5)
    plan = stratified_folds(ds, 5, seed=3)
    maj = [int(np.sum(ds.labels[plan.test_indices(f)] == 0)) for f in range(5)]
    mino = [int(np.sum(ds.labels[plan.test_indices(f)] == 1)) for f in range(5)]
    assert mino == [1, 1, 1, 1, 1]
    assert sorted(maj) == [4, 4, 5, 5, 5]


def test_folds_errors():
    with pytest.raises(ValueError):
        stratified_folds(make(3, 1), 5)
    with pytest.raises(ValueError):
        stratified_folds(make(30, 5), 1)


def test_single_class_training_fold_raises():
    # the only minority sample lands in one test fold, leaving its training part single-class
    ds = make(10, 1)
    plan = stratified_folds(ds, 2, seed=0)
    with pytest.raises(ValueError, match="single class"):
        list(plan.split(ds))


@given(
    n_maj=st.integers(1, 80),
    n_min=st.integers(1, 40),
    k=st.integers(2, 10),
    seed=st.integers(0, 2**32 - 1),
)
def test_fold_partition_properties(n_maj, n_min, k, seed):
    ds = make(n_maj, n_min)
    if k > len(ds):
        with pytest.raises(ValueError):
            stratified_folds(ds, k, seed)
        return
    plan = stratified_folds(ds, k, seed)
    tests = [plan.test_indices(f) for f in range(k)]
    joined = np.concatenate(tests)
    assert sorted(joined.tolist()) == list(range(len(ds)))
    assert set(np.unique(plan.assignments).tolist()) == set(range(k))
    for label in (0, 1):
        counts = [int(np.sum(ds.labels[t] == label)) for t in tests]
        assert max(counts) - min(counts) <= 1


# --- partitions --------------------------------------------------------------


def test_partition_discovery_and_shared_mapping(tmp_path):
    header = "@relation p\n@attribute x real\n@attribute Class {g, b}\n@data\n"
    (tmp_path / "p-2-1tra.dat").write_text(header + "1,g\n2,g\n3,b\n")
    (tmp_path / "p-2-1tst.dat").write_text(header + "4,b\n5,b\n6,g\n")
    (tmp_path / "p-2-2tra.dat").write_text(header + "4,b\n5,g\n6,g\n")
    (tmp_path / "p-2-2tst.dat").write_text(header + "1,g\n2,g\n3,b\n")
    found = find_keel_partitions(tmp_path)
    assert list(found) == ["p"] and len(found["p"]) == 2
    train, test = load_partition(*found["p"][0])
    # test file has more b than g, but must follow the training mapping (b -> 1)
    assert train.labels.tolist() == [0, 0, 1]
    assert test.labels.tolist() == [1, 1, 0]


# --- normalization -----------------------------------------------------------


def test_minmax_examples():
    params = fit_minmax([[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]])
    out = apply_minmax(params, [[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]])
    assert out[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert out[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert apply_minmax(params, [[12.0, 9.0]])[0].tolist() == [1.2, 0.0]


def test_minmax_empty():
    with pytest.raises(ValueError):
        fit_minmax(np.empty((0, 2)))


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=20),
                  elements=st.floats(-1e6, 1e6)))
def test_minmax_training_range(X):
    out = apply_minmax(fit_minmax(X), X)
    for j in range(X.shape[1]):
        col = out[:, j]
        if X[:, j].min() == X[:, j].max():
            assert np.all(col == 0)
        else:
            assert col.min() == 0.0
            assert col.max() == pytest.approx(1.0, abs=1e-12)


def test_normalizer_estimator():
    norm = MinMaxNormalizer().fit([[0.0], [10.0]])
    assert norm.transform([[5.0], [12.0]]).ravel().tolist() == [0.5, 1.2]
    assert norm.get_params() == {}
    with pytest.raises(ValueError):
        norm.transform([[1.0, 2.0]])
