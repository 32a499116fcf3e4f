import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftmkit.core import Dataset, FtmFrame, FtmMeasurement
from ftmkit.errors import EmptyInput, NoGroundTruth
from ftmkit.eval import (
    ErrorRecord,
    baseline_records,
    compare,
    ecdf,
    percentile_below,
    rssi_profile,
    summary_table,
    write_comparison,
)


def test_ecdf_examples():
    c = ecdf([1, 2, 3, 4])
    assert percentile_below(c, 2.5) == 0.5
    c = ecdf([3, 3, 3])
    assert percentile_below(c, 2.999) == 0.0 and percentile_below(c, 3.0) == 1.0
    u = np.random.default_rng(0).uniform(0, 10, 1000)
    assert abs(percentile_below(ecdf(u), 5.0) - 0.5) <= 0.05
    assert percentile_below(ecdf([1.0, 2.0]), 0.5) == 0.0
    with pytest.raises(EmptyInput):
        ecdf([])


@given(st.lists(st.floats(0, 100), min_size=1, max_size=50), st.randoms())
def test_ecdf_properties(errs, rnd):
    c = ecdf(errs)
    assert c.cumulative[-1] == 1.0
    assert np.all(np.diff(c.sorted_errors) >= 0) and np.all(np.diff(c.cumulative) >= 0)
    shuffled = list(errs)
    rnd.shuffle(shuffled)
    assert np.array_equal(ecdf(shuffled).sorted_errors, c.sorted_errors)
    ts = sorted(rnd.uniform(-1, 101) for _ in range(10))
    vals = [percentile_below(c, t) for t in ts]
    assert vals == sorted(vals)


def test_compare_single_and_dominance():
    r = compare({"a": [0.0, 0.0, 0.0]})
    assert r.summaries[0].median == 0.0
    rng = np.random.default_rng(1)
    b = rng.uniform(0, 5, 200)
    rep = compare({"A": list(b + 1.0), "B": list(b)})
    A, B = (next(s for s in rep.summaries if s.estimator == k) for k in "AB")
    assert A.median > B.median and A.mean > B.mean and A.p75 > B.p75 and A.p90 > B.p90
    assert [s.estimator for s in rep.ranked()] == ["B", "A"]


def test_compare_accepts_records():
    recs = [ErrorRecord.make("x", 5.0, 7.0), ErrorRecord.make("x", 5.0, 4.0)]
    assert recs[0].abs_error == 2.0
    assert compare(recs).summaries[0].mean == 1.5


def test_reports_byte_identical(tmp_path):
    groups = {"tree": [0.5, 1.25, 3.0], "raw w/ space": [2.0, 4.0]}
    a = write_comparison(compare(groups), tmp_path / "a", {"config_sha256": "x"})
    b = write_comparison(compare(dict(reversed(list(groups.items())))), tmp_path / "b", {"config_sha256": "x"})
    assert [p.name for p in a] == [p.name for p in b] == ["summary.tsv", "ecdf_raw_w_space.tsv", "ecdf_tree.tsv"]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(a, b))
    assert summary_table(compare(groups)).splitlines()[0] == "estimator\tn\tmedian_m\tmean_m\tp75_m\tp90_m"


def _m(d, rssi):
    return FtmMeasurement("a", 1.0, (FtmFrame(rssi, 1.0),), true_distance=d)


def test_rssi_profile():
    rows = rssi_profile(Dataset("d", "test", [_m(2.0, -50.0)]))
    assert len(rows) == 1 and rows[0].std_rssi == 0.0
    with pytest.raises(NoGroundTruth):
        rssi_profile(Dataset("d", "test", [FtmMeasurement("a", 1.0, (FtmFrame(-50, 1.0),))]))


def test_rssi_profile_monotone_without_shadowing():
    from ftmkit.channel import generate_dataset, load_preset
    from dataclasses import replace

    spec = load_preset("outdoor-40", seed=1)
    spec = replace(spec, channel=replace(spec.channel, shadowing_sigma=0.0, frame_rssi_jitter=0.0))
    rows = rssi_profile(generate_dataset(spec))
    means = [r.mean_rssi for r in rows]
    assert all(a >= b for a, b in zip(means, means[1:]))


def test_tree_beats_raw_outdoor(outdoor_dataset):
    from ftmkit.ml import SplitSpec, split, train

    tr, te = split([list(outdoor_dataset.measurements)], SplitSpec(0.7, 5, 0))
    model = train("tree", [m for m in map(_labeled, tr)])
    X = [[m.rtt_raw, m.mean_rssi] for m in te]
    tree_err = np.abs(model.predict_array(X) - [m.true_distance for m in te])
    raw = [r.abs_error for r in baseline_records(Dataset("t", "outdoor", te)) if r.estimator_name == "rtt_raw"]
    rep = compare({"tree": list(tree_err), "raw": raw})
    p90 = {s.estimator: s.p90 for s in rep.summaries}
    assert p90["tree"] <= p90["raw"]


def _labeled(m):
    from ftmkit.core import to_labeled_sample

    return to_labeled_sample(m)
