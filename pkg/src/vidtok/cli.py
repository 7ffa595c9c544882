"""Command-line interface.

Exit codes: 0 success, 2 bad flags or configuration, 3 unreadable or
malformed input, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__, _backend
from .bench import bench_video, compare_backends, run_bench
from .bias import (
    SynthSpec,
    accumulated_activation,
    hotspot_spec,
    paired_curves,
    scene_cut_schedule,
    synth_video,
    write_curves_csv,
    write_heat_csv,
)
from .dtok import TokenFileError, file_sha256, read_tokens, write_tokens
from .errors import ConfigurationError, InvariantError, SessionError, VidtokError
from .pipeline import STREAM_POLICY, CompressionConfig, StreamSession, compress_batch
from .runstats import StatsFormatError, read_stats, write_mask, write_stats

log = logging.getLogger("vidtok")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVARIANT = 0, 2, 3, 4


class InputError(VidtokError):
    pass


def _unit_interval(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not 0.0 < v <= 1.0:
            raise argparse.ArgumentTypeError(f"{name} must be in (0, 1], got {v}")
        return v

    return parse


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _retention_list(text):
    parse = _unit_interval("--retentions entries")
    return [parse(p) for p in text.split(",") if p.strip()]


def _add_config_flags(p: argparse.ArgumentParser, retention_required: bool) -> None:
    p.add_argument("--retention", type=_unit_interval("--retention"), required=retention_required,
                   default=None if retention_required else 0.25, help="fraction of tokens kept, in (0, 1]")
    p.add_argument("--alpha", type=_unit_interval("--alpha"), default=0.9, help="EMA rate for both memories")
    p.add_argument("--beta", type=_nonneg_float, default=0.1, help="redundancy penalty weight")
    p.add_argument("--patch-size", type=_positive_int, default=14)
    p.add_argument("--no-tba", action="store_true", help="uniform per-frame budgets")
    p.add_argument("--no-sba", action="store_true", help="plain activation top-k per frame")
    p.add_argument("--no-floor", action="store_true", help="allow frames with zero tokens")
    p.add_argument("--first-frame", choices=("mean", "max"), default="mean",
                   help="novelty assigned to frame 0")
    p.add_argument("--window", type=_positive_int, default=8, help="streaming novelty window")
    p.add_argument("--backend", choices=sorted(_backend.AVAILABLE), default=None)


def _config_from(args) -> CompressionConfig:
    return CompressionConfig(
        retention=args.retention,
        alpha=args.alpha,
        beta=args.beta,
        patch_size=args.patch_size,
        enable_tba=not args.no_tba,
        enable_sba=not args.no_sba,
        min_one_token_floor=not args.no_floor,
        stream_window=args.window,
        first_frame=args.first_frame,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidtok", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress a DTOK file")
    c.add_argument("--input", required=True)
    _add_config_flags(c, retention_required=True)
    c.add_argument("--stream", action="store_true", help="causal one-frame-at-a-time mode")
    c.add_argument("--out-mask", required=True)
    c.add_argument("--out-stats", required=True)
    c.add_argument("--out-timings", help="optional JSON file for wall-clock timings")

    r = sub.add_parser("replay", help="re-run a compression from its stats config echo")
    r.add_argument("--stats", required=True)
    r.add_argument("--input", help="override the input path recorded in the stats")
    r.add_argument("--out-mask", required=True)
    r.add_argument("--out-stats", required=True)

    s = sub.add_parser("synth", help="write a synthetic DTOK file")
    s.add_argument("--out", required=True)
    s.add_argument("--frames", type=_positive_int, default=32)
    s.add_argument("--tokens", type=_positive_int, default=56)
    s.add_argument("--dim", type=_positive_int, default=16)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--redundancy", type=float, help="constant frame-to-frame redundancy in [0, 1]")
    g.add_argument("--scene-cut", type=_positive_int, metavar="EVERY",
                   help="fresh content every EVERY frames, 0.98 redundancy otherwise")
    s.add_argument("--bias-position", type=int)
    s.add_argument("--bias-strength", type=_nonneg_float, default=0.0)
    s.add_argument("--hotspot", action="store_true",
                   help="bias-mitigation protocol: scene cuts plus a minimal patch-topping hotspot")
    s.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bias", help="cumulative selection curves at a bias position")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--seed", type=int, help="generate the hotspot protocol video for this seed")
    b.add_argument("--bias-position", type=int)
    _add_config_flags(b, retention_required=False)
    b.add_argument("--out-curves", required=True)
    b.add_argument("--out-heat")

    k = sub.add_parser("bench", help="latency versus retention")
    k.add_argument("--retentions", type=_retention_list, default=[1.0, 0.25, 0.1])
    k.add_argument("--repeats", type=_positive_int, default=20)
    k.add_argument("--frames", type=_positive_int, default=32)
    k.add_argument("--tokens", type=_positive_int, default=98)
    k.add_argument("--dim", type=_positive_int, default=64)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--backend", choices=sorted(_backend.AVAILABLE), default=None)
    k.add_argument("--compare-backends", action="store_true",
                   help="also time compression under every available kernel backend")
    k.add_argument("--out", help="write results as JSON")

    pl = sub.add_parser("plot", help="render curve and heat CSVs to an image (needs matplotlib)")
    pl.add_argument("--curves")
    pl.add_argument("--heat")
    pl.add_argument("--out", required=True)
    return parser


def _read_video(path):
    try:
        return read_tokens(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _run_compression(video, cfg: CompressionConfig, stream: bool, backend):
    """Returns (mask frames, frame records, summary, timings)."""
    t0 = time.perf_counter()
    if stream:
        session = StreamSession(cfg, backend)
        frames, records = [], []
        for t in range(video.T):
            mask, st = session.push(video.frame(t), t)
            frames.append((t, st.indices))
            records.append(
                {
                    "t": st.t,
                    "delta": st.delta,
                    "window_mean": st.window_mean,
                    "budget": st.budget,
                    "patch_budgets": st.patch_budgets,
                    "indices": st.indices,
                }
            )
        summary = {"retained": session.kept, "frames": video.T, "tokens_per_frame": video.N,
                   "retention_empirical": session.retention, "budget_policy": STREAM_POLICY}
        timings = {"total_s": time.perf_counter() - t0}
    else:
        res = compress_batch(video, cfg, backend)
        frames = [(r.t, r.indices) for r in res.records]
        records = [
            {"t": r.t, "delta": r.delta, "weight": r.weight, "budget": r.budget,
             "patch_budgets": r.patch_budgets, "indices": r.indices}
            for r in res.records
        ]
        summary = {"retained": res.retained, "total": res.budgets.total, "frames": video.T,
                   "tokens_per_frame": video.N, "floor_shortfall": res.budgets.floor_shortfall}
        timings = dict(res.timings, total_s=time.perf_counter() - t0)
    for (t, idx), rec in zip(frames, records):
        if len(idx) != rec["budget"]:
            raise InvariantError(f"frame {t}: {len(idx)} tokens kept, budget {rec['budget']}")
    return frames, records, summary, timings


def _compress_and_write(input_path, cfg, stream, backend, out_mask, out_stats, out_timings=None):
    video = _read_video(input_path)
    frames, records, summary, timings = _run_compression(video, cfg, stream, backend)
    echo = {
        "command": "compress",
        "mode": "stream" if stream else "batch",
        "input": str(input_path),
        "input_sha256": file_sha256(input_path),
        "shape": list(video.shape),
        "backend": backend or _backend.DEFAULT,
        "config": cfg.to_dict(),
    }
    write_mask(out_mask, frames)
    write_stats(out_stats, echo, records, summary)
    if out_timings:
        with open(out_timings, "w") as fh:
            json.dump(timings, fh, indent=2)
    log.info("kept %d of %d tokens in %.3f s", summary["retained"], video.T * video.N, timings["total_s"])
    return EXIT_OK


def cmd_compress(args) -> int:
    cfg = _config_from(args)
    return _compress_and_write(args.input, cfg, args.stream, args.backend,
                               args.out_mask, args.out_stats, args.out_timings)


def cmd_replay(args) -> int:
    echo, _, _ = read_stats(args.stats)
    try:
        cfg = CompressionConfig.from_dict(echo["config"])
        mode = echo["mode"]
        path = args.input or echo["input"]
        digest = echo["input_sha256"]
    except (KeyError, TypeError) as exc:
        raise StatsFormatError(f"{args.stats}: incomplete config echo ({exc})") from exc
    try:
        actual = file_sha256(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if actual != digest:
        raise InputError(f"{path} does not match the recorded input (sha256 {actual[:12]} != {digest[:12]})")
    backend = echo.get("backend")
    if backend not in _backend.AVAILABLE:
        log.warning("backend %r unavailable, replaying with %r", backend, _backend.DEFAULT)
        backend = None
    # the replay is keyed on content, so the recorded path is kept even when overridden
    rc = _compress_and_write(path, cfg, mode == "stream", backend, args.out_mask, args.out_stats)
    if args.input and args.input != echo["input"]:
        config, frames, summary = read_stats(args.out_stats)
        config["input"] = echo["input"]
        config.pop("format", None)
        write_stats(args.out_stats, config, [{k: v for k, v in f.items() if k != "record"} for f in frames],
                    {k: v for k, v in summary.items() if k != "record"})
    return rc


def cmd_synth(args) -> int:
    if args.hotspot:
        spec = hotspot_spec(args.seed, T=args.frames, N=args.tokens, D=args.dim)
    else:
        if args.scene_cut:
            red = scene_cut_schedule(args.frames, args.scene_cut)
        else:
            red = 0.0 if args.redundancy is None else args.redundancy
        spec = SynthSpec(args.frames, args.tokens, args.dim, red, args.bias_position, args.bias_strength, args.seed)
    write_tokens(synth_video(spec), args.out)
    log.info("wrote %s (%d x %d x %d, hotspot strength %.4f)", args.out, spec.T, spec.N, spec.D, spec.bias_strength)
    return EXIT_OK


def cmd_bias(args) -> int:
    cfg = _config_from(args)
    if args.input:
        video = _read_video(args.input)
        pos = args.bias_position
        if pos is None:
            raise ConfigurationError("--bias-position is required with --input")
    else:
        spec = hotspot_spec(args.seed, patch_size=args.patch_size)
        video = synth_video(spec)
        pos = spec.bias_position if args.bias_position is None else args.bias_position
    full, abl = paired_curves(video, cfg, pos, args.backend)
    write_curves_csv(args.out_curves, [full, abl])
    if args.out_heat:
        write_heat_csv(args.out_heat, accumulated_activation(video, args.backend))
    print(f"final selections at position {pos}: full={full.final} ablation={abl.final} of {video.T} frames")
    return EXIT_OK


def cmd_bench(args) -> int:
    video = bench_video(args.frames, args.tokens, args.dim, args.seed)
    levels = run_bench(video, args.retentions, args.repeats, backend=args.backend)
    print(f"backend={args.backend or _backend.DEFAULT} video={video.T}x{video.N}x{video.D} repeats={args.repeats}")
    print(f"{'R':>6} {'tokens':>7} {'compress ms':>14} {'attention ms':>14} {'total ms':>14} {'saving ms':>10}")
    base = levels[0].total_ms_mean
    for lv in levels:
        print(f"{lv.retention:6.3f} {lv.tokens:7d} {lv.compress_ms_mean:8.2f}±{lv.compress_ms_std:<5.2f}"
              f"{lv.downstream_ms_mean:8.2f}±{lv.downstream_ms_std:<5.2f}"
              f"{lv.total_ms_mean:8.2f}±{lv.total_ms_std:<5.2f}{base - lv.total_ms_mean:10.2f}")
    doc = {"levels": [lv.as_dict() for lv in levels], "backend": args.backend or _backend.DEFAULT,
           "shape": list(video.shape), "repeats": args.repeats}
    if args.compare_backends:
        cmp = compare_backends(video, repeats=max(3, args.repeats // 2))
        doc["backends"] = cmp
        for name in sorted(_backend.AVAILABLE):
            print(f"backend {name:>7}: compress {cmp[name]['compress_ms_mean']:.2f} ms")
        if "speedup" in cmp:
            print(f"compiled speedup x{cmp['speedup']:.2f}, masks agree: {cmp['masks_agree']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
    return EXIT_OK


def cmd_plot(args) -> int:
    import csv

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigurationError("plot needs matplotlib (pip install 'artifact[plot]')") from exc
    if not (args.curves or args.heat):
        raise ConfigurationError("nothing to plot; pass --curves and/or --heat")
    panels = [p for p in (args.curves, args.heat) if p]
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
    ax_iter = iter(axes[0])
    if args.curves:
        ax = next(ax_iter)
        series: dict[str, list[tuple[int, int]]] = {}
        with open(args.curves) as fh:
            for row in csv.DictReader(fh):
                series.setdefault(row["variant"], []).append((int(row["frame_index"]), int(row["cumulative_count"])))
        for name, pts in series.items():
            xs, ys = zip(*pts)
            ax.plot(xs, ys, label=name)
        ax.set_xlabel("frame")
        ax.set_ylabel("cumulative selections")
        ax.legend()
    if args.heat:
        ax = next(ax_iter)
        with open(args.heat) as fh:
            vals = [float(r["value"]) for r in csv.DictReader(fh)]
        ax.bar(range(len(vals)), vals)
        ax.set_xlabel("token index")
        ax.set_ylabel("mean activation")
    fig.tight_layout()
    fig.savefig(args.out)
    return EXIT_OK


COMMANDS = {
    "compress": cmd_compress,
    "replay": cmd_replay,
    "synth": cmd_synth,
    "bias": cmd_bias,
    "bench": cmd_bench,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (TokenFileError, StatsFormatError, InputError) as exc:
        print(f"vidtok: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvariantError as exc:
        print(f"vidtok: internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigurationError, SessionError) as exc:
        print(f"vidtok: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
