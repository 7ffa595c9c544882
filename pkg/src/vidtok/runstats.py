"""Mask files and JSON-lines run statistics.

A stats file opens with a ``config`` record that echoes everything needed to
replay the run, then holds one ``frame`` record per frame and a closing
``summary`` record. Wall-clock timings are kept out of it so a replay is
byte-identical; they go to a separate file when requested.
"""

from __future__ import annotations

import json
from typing import Iterable

from .errors import VidtokError

FORMAT = "vidtok-runstats/1"


class StatsFormatError(VidtokError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def write_mask(path, frames: Iterable[tuple[int, list[int]]]) -> None:
    doc = {"frames": [{"t": int(t), "indices": [int(i) for i in idx]} for t, idx in frames]}
    with open(path, "w") as fh:
        fh.write(_dump(doc))
        fh.write("\n")


def read_mask(path) -> dict[int, list[int]]:
    with open(path) as fh:
        doc = json.load(fh)
    return {int(f["t"]): list(f["indices"]) for f in doc["frames"]}


def write_stats(path, config: dict, frames: Iterable[dict], summary: dict) -> None:
    with open(path, "w") as fh:
        fh.write(_dump({"record": "config", "format": FORMAT, **config}) + "\n")
        for rec in frames:
            fh.write(_dump({"record": "frame", **rec}) + "\n")
        fh.write(_dump({"record": "summary", **summary}) + "\n")


def read_stats(path) -> tuple[dict, list[dict], dict]:
    try:
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
    except json.JSONDecodeError as exc:
        raise StatsFormatError(f"{path}: invalid JSON on a stats line: {exc}") from exc
    if not lines or lines[0].get("record") != "config":
        raise StatsFormatError(f"{path}: first record must be the config echo")
    if lines[0].get("format") != FORMAT:
        raise StatsFormatError(f"{path}: unsupported stats format {lines[0].get('format')!r}")
    config = {k: v for k, v in lines[0].items() if k not in ("record", "format")}
    frames = [r for r in lines if r.get("record") == "frame"]
    summaries = [r for r in lines if r.get("record") == "summary"]
    return config, frames, summaries[-1] if summaries else {}
