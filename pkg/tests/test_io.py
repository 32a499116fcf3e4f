import warnings

import pytest

from ftmkit.channel import generate_dataset, load_preset
from ftmkit.core import Dataset, FtmFrame, FtmMeasurement
from ftmkit.errors import (
    ConfigError,
    DataError,
    MissingRequiredColumn,
    ParseError,
    UnitMismatch,
    UnsupportedVersion,
    ValidationFailed,
)
from ftmkit.io import (
    decode_dataset,
    encode_dataset,
    experiment_config_from_dict,
    import_external,
    read_dataset,
    write_dataset,
)


@pytest.fixture(scope="module")
def small():
    spec = load_preset("outdoor-20", seed=2)
    return generate_dataset(spec)


def test_round_trip_and_determinism(small, tmp_path):
    write_dataset(small, tmp_path / "a.ftm")
    write_dataset(small, tmp_path / "b.ftm")
    assert (tmp_path / "a.ftm").read_bytes() == (tmp_path / "b.ftm").read_bytes()
    assert read_dataset(tmp_path / "a.ftm") == small


def test_optional_fields_are_empty_cells():
    m = FtmMeasurement("a1", 10.0, (FtmFrame(-40, 10.0),))
    text = encode_dataset(Dataset("one", "test", [m]))
    lines = text.splitlines()
    assert lines[7] == "0,a1,10.000,,,,1,"
    assert lines[8:] == ["[frames]", "measurement,frame,rssi_dbm,rtt_ns,t1_ps,t2_ps,t3_ps,t4_ps", "0,0,-40.00,10.000,,,,"]
    assert len(lines) == 11
    assert decode_dataset(text).measurements[0] == m


def test_quoted_anchor_ids_survive():
    m = FtmMeasurement('AP "3", hall', 10.0, (FtmFrame(-40, 10.0),), true_distance=1.5)
    d = Dataset("q", "indoor", [m])
    assert decode_dataset(encode_dataset(d)) == d


def _numbered(small):
    text = encode_dataset(Dataset(small.name, small.scenario, small.measurements[:6]))
    return text.splitlines(keepends=True)


def test_num_frames_mismatch_reports_line(small):
    lines = _numbered(small)
    # header is 7 lines, so measurement 4 sits on line 12
    cells = lines[11].split(",")
    cells[6] = "9"
    lines[11] = ",".join(cells)
    with pytest.raises(ValidationFailed) as e:
        decode_dataset("".join(lines))
    assert (e.value.line, e.value.code) == (12, "FrameCountMismatch")
    with pytest.warns(UserWarning, match="line 12"):
        d = decode_dataset("".join(lines), lenient=True)
    assert d.measurements[4].num_frames == 9


def test_parse_errors_carry_position(small):
    lines = _numbered(small)
    cells = lines[9].split(",")
    cells[2] = "abc"
    lines[9] = ",".join(cells)
    with pytest.raises(ParseError) as e:
        decode_dataset("".join(lines))
    assert (e.value.line, e.value.column) == (10, 3)
    with pytest.raises(ParseError) as e:
        decode_dataset("nothing here\n")
    assert e.value.line == 1


def test_frame_row_must_reference_measurement(small):
    text = "".join(_numbered(small)) + "99,0,-40.00,1.000,,,,\n"
    with pytest.raises(ParseError, match="unknown measurement"):
        decode_dataset(text)


def test_version_and_empty(tmp_path):
    with pytest.raises(UnsupportedVersion):
        decode_dataset("# ftmkit-dataset v2\n")
    empty = encode_dataset(Dataset("e", "test"))
    with pytest.warns(UserWarning, match="no measurements"):
        assert len(decode_dataset(empty)) == 0


def test_mixed_bandwidth_rejected():
    a = FtmMeasurement("a", 1.0, (FtmFrame(-40, 1.0),), bandwidth=20)
    b = FtmMeasurement("a", 1.0, (FtmFrame(-40, 1.0),), bandwidth=40)
    with pytest.raises(DataError):
        encode_dataset(Dataset("m", "test", [a, b]))


CSV = """mac;burst;rssi;rtt_us;gt_cm
ap1;1;-40;0.0660;1000
ap1;1;-42;0.0680;1000
ap2;2;-60;0.1000;1500
"""


def test_import_external_frames_and_units(tmp_path):
    (tmp_path / "log.csv").write_text(CSV)
    mapping = {
        "delimiter": ";",
        "scenario": "indoor",
        "bandwidth": 40,
        "group_by": ["burst"],
        "columns": {"anchor_id": "mac", "frame_rssi": "rssi", "frame_rtt": "rtt_us", "true_distance": "gt_cm"},
        "units": {"rtt": "us", "distance": "cm"},
    }
    d = import_external(tmp_path / "log.csv", mapping)
    assert len(d) == 2
    m = d.measurements[0]
    assert [f.rtt for f in m.frames] == pytest.approx([66.0, 68.0])
    assert m.rtt_raw == pytest.approx(67.0) and m.true_distance == pytest.approx(10.0)
    assert m.dist_est is None and m.num_frames == 2


def test_import_without_truth_defers_failure(tmp_path):
    (tmp_path / "log.csv").write_text(CSV)
    mapping = {
        "delimiter": ";",
        "bandwidth": 20,
        "group_by": "burst",
        "columns": {"anchor_id": "mac", "frame_rssi": "rssi", "frame_rtt": "rtt_us"},
        "units": {"rtt": "us"},
    }
    d = import_external(tmp_path / "log.csv", mapping)
    from ftmkit.errors import NoGroundTruth

    with pytest.raises(NoGroundTruth):
        d.labeled_samples()


def test_import_errors(tmp_path):
    (tmp_path / "log.csv").write_text(CSV)
    base = {"delimiter": ";", "bandwidth": 20, "group_by": "burst"}
    with pytest.raises(MissingRequiredColumn):
        import_external(tmp_path / "log.csv", {**base, "columns": {"anchor_id": "mac", "frame_rssi": "rssi", "frame_rtt": "nope"}})
    with pytest.raises(MissingRequiredColumn):
        import_external(tmp_path / "log.csv", {**base, "columns": {"frame_rssi": "rssi", "frame_rtt": "rtt_us"}})
    with pytest.raises(UnitMismatch):
        import_external(tmp_path / "log.csv", {**base, "columns": {}, "units": {"rtt": "m"}})
    with pytest.raises(UnitMismatch):
        import_external(tmp_path / "log.csv", {**base, "columns": {}, "units": {"weight": "kg"}})


def test_identity_mapping_equals_read(small, tmp_path):
    write_dataset(small, tmp_path / "a.ftm")
    assert import_external(tmp_path / "a.ftm", {"format": "ftmkit-v1"}) == read_dataset(tmp_path / "a.ftm")
    assert import_external(tmp_path / "a.ftm") == small


def test_experiment_config():
    cfg = experiment_config_from_dict(
        {"seed": 3, "sources": ["indoor", {"path": "x.ftm"}], "estimators": {"tree": {"budget": 5}}}
    )
    assert cfg.seed == 3 and cfg.sources[0].preset == "indoor" and cfg.estimators[0].budget == 5
    assert cfg.config_hash() == experiment_config_from_dict(cfg.raw).config_hash()
    with pytest.raises(ConfigError):
        experiment_config_from_dict({"sources": ["indoor"]})
    with pytest.raises(ConfigError):
        experiment_config_from_dict({"seed": 1, "sources": [{"preset": "a", "path": "b"}]})
