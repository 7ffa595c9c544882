import json
import math

import numpy as np
import pytest

from vidtok import VideoTokens
from vidtok.cli import main
from vidtok.dtok import file_sha256, read_tokens, write_tokens
from vidtok.runstats import StatsFormatError, read_mask, read_stats


@pytest.fixture
def video_file(tmp_path):
    p = tmp_path / "v.dtok"
    assert main(["synth", "--out", str(p), "--frames", "32", "--tokens", "40", "--dim", "8", "--scene-cut", "4", "--seed", "1"]) == 0
    return p


def compress(tmp_path, video, *extra, tag="a"):
    m, s = tmp_path / f"{tag}.json", tmp_path / f"{tag}.jsonl"
    rc = main(["compress", "--input", str(video), "--out-mask", str(m), "--out-stats", str(s), *extra])
    return rc, m, s


def test_compress_budget_from_mask_file(tmp_path, video_file):
    rc, m, s = compress(tmp_path, video_file, "--retention", "0.25")
    assert rc == 0
    mask = read_mask(m)
    assert sum(len(v) for v in mask.values()) == math.floor(32 * 40 * 0.25 + 0.5)
    config, frames, summary = read_stats(s)
    assert config["config"]["alpha"] == 0.9 and config["config"]["beta"] == 0.1 and config["config"]["patch_size"] == 14
    assert config["input_sha256"] == file_sha256(video_file)
    assert len(frames) == 32
    for f in frames:
        assert f["indices"] == mask[f["t"]] == sorted(f["indices"])
        assert len(f["indices"]) == f["budget"]
        assert {"delta", "weight"} <= f.keys()
    assert summary["retained"] == 320


def test_timings_kept_out_of_stats(tmp_path, video_file):
    rc, _, s = compress(tmp_path, video_file, "--retention", "0.25", "--out-timings", str(tmp_path / "t.json"))
    assert rc == 0
    records = [json.loads(line) for line in s.read_text().splitlines()]
    assert not any(k.endswith("_s") for r in records for k in r)
    assert {"temporal_s", "spatial_s", "total_s"} <= json.loads((tmp_path / "t.json").read_text()).keys()


@pytest.mark.parametrize(
    "flags,needle",
    [
        (["--retention", "1.5"], "--retention"),
        (["--retention", "0"], "--retention"),
        (["--retention", "abc"], "--retention"),
        (["--retention", "0.2", "--alpha", "2"], "--alpha"),
        (["--retention", "0.2", "--patch-size", "0"], "--patch-size"),
        (["--retention", "0.2", "--frobnicate"], "--frobnicate"),
        ([], "--retention"),
    ],
)
def test_bad_flags_exit_2(tmp_path, video_file, capsys, flags, needle):
    with pytest.raises(SystemExit) as e:
        compress(tmp_path, video_file, *flags)
    assert e.value.code == 2
    assert needle in capsys.readouterr().err


def test_parse_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.dtok"
    bad.write_bytes(b"XTOK" + bytes(20))
    rc, _, _ = compress(tmp_path, bad, "--retention", "0.2")
    assert rc == 3 and "magic" in capsys.readouterr().err
    rc, _, _ = compress(tmp_path, tmp_path / "missing.dtok", "--retention", "0.2")
    assert rc == 3


def test_invariant_violation_exit_4(tmp_path, video_file, monkeypatch, capsys):
    import vidtok.cli as cli
    from vidtok.errors import InvariantError

    def broken(*a, **k):
        raise InvariantError("kept 3 tokens, budget was 4")

    monkeypatch.setattr(cli, "compress_batch", broken)
    rc, _, _ = compress(tmp_path, video_file, "--retention", "0.2")
    assert rc == 4 and "internal error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "flags",
    [
        ["--retention", "0.25"],
        ["--retention", "0.1", "--no-tba", "--no-sba"],
        ["--retention", "0.3", "--stream", "--window", "4"],
        ["--retention", "0.05", "--no-floor", "--beta", "0.5", "--patch-size", "7", "--first-frame", "max"],
        ["--retention", "0.25", "--backend", "python"],
    ],
)
def test_replay_is_byte_identical(tmp_path, video_file, flags):
    rc, m, s = compress(tmp_path, video_file, *flags)
    assert rc == 0
    r = tmp_path / "r"
    assert main(["replay", "--stats", str(s), "--out-mask", f"{r}.json", "--out-stats", f"{r}.jsonl"]) == 0
    assert m.read_bytes() == (tmp_path / "r.json").read_bytes()
    assert s.read_bytes() == (tmp_path / "r.jsonl").read_bytes()


def test_replay_with_moved_input(tmp_path, video_file):
    _, m, s = compress(tmp_path, video_file, "--retention", "0.25")
    moved = tmp_path / "moved.dtok"
    moved.write_bytes(video_file.read_bytes())
    video_file.unlink()
    assert main(["replay", "--stats", str(s), "--input", str(moved), "--out-mask", str(tmp_path / "r.json"), "--out-stats", str(tmp_path / "r.jsonl")]) == 0
    assert s.read_bytes() == (tmp_path / "r.jsonl").read_bytes()


def test_replay_rejects_changed_input(tmp_path, video_file, capsys):
    _, _, s = compress(tmp_path, video_file, "--retention", "0.25")
    v = read_tokens(video_file)
    write_tokens(VideoTokens(v.data * 2), video_file)
    assert main(["replay", "--stats", str(s), "--out-mask", str(tmp_path / "r.json"), "--out-stats", str(tmp_path / "r.jsonl")]) == 3
    assert "does not match" in capsys.readouterr().err


def test_replay_rejects_garbage_stats(tmp_path):
    p = tmp_path / "s.jsonl"
    p.write_text("not json\n")
    with pytest.raises(StatsFormatError):
        read_stats(p)
    assert main(["replay", "--stats", str(p), "--out-mask", str(tmp_path / "m"), "--out-stats", str(tmp_path / "s")]) == 3


def test_synth_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["synth", "--out", str(tmp_path / f"{name}.dtok"), "--hotspot", "--seed", "5"]) == 0
    assert file_sha256(tmp_path / "a.dtok") == file_sha256(tmp_path / "b.dtok")
    assert read_tokens(tmp_path / "a.dtok").shape == (32, 56, 16)


def test_bias_subcommand(tmp_path, capsys):
    curves, heat = tmp_path / "c.csv", tmp_path / "h.csv"
    assert main(["bias", "--seed", "0", "--out-curves", str(curves), "--out-heat", str(heat)]) == 0
    rows = [line.split(",") for line in curves.read_text().splitlines()[1:]]
    final = {v: int(c) for _, c, v in rows}
    assert final["ablation"] >= final["full"]
    assert len(heat.read_text().splitlines()) == 57


def test_bias_from_file_needs_position(tmp_path, video_file):
    assert main(["bias", "--input", str(video_file), "--out-curves", str(tmp_path / "c.csv")]) == 2
    assert main(["bias", "--input", str(video_file), "--bias-position", "3", "--out-curves", str(tmp_path / "c.csv")]) == 0


def test_bench_subcommand(tmp_path, capsys):
    out = tmp_path / "b.json"
    rc = main(["bench", "--retentions", "1.0,0.25,0.1", "--repeats", "2", "--frames", "8", "--tokens", "28", "--dim", "8", "--compare-backends", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert [lv["retention"] for lv in doc["levels"]] == [1.0, 0.25, 0.1]
    assert doc["backends"]["masks_agree"]
    with pytest.raises(SystemExit):
        main(["bench", "--retentions", "1.0,2.0"])


def test_plot(tmp_path):
    pytest.importorskip("matplotlib")
    curves, heat = tmp_path / "c.csv", tmp_path / "h.csv"
    main(["bias", "--seed", "0", "--out-curves", str(curves), "--out-heat", str(heat)])
    assert main(["plot", "--curves", str(curves), "--heat", str(heat), "--out", str(tmp_path / "p.png")]) == 0
    assert (tmp_path / "p.png").stat().st_size > 0
    assert main(["plot", "--out", str(tmp_path / "q.png")]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
