"""Compiled kernels versus the numpy fallback, plus latency by retention.

    python benchmarks/compare_backends.py [--frames 32 --tokens 196 --dim 64 --repeats 10]
"""

import argparse
import json

from vidtok import _backend
from vidtok.bench import bench_video, compare_backends, run_bench


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--tokens", type=int, default=196)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--json", action="store_true", help="print raw results as JSON")
    args = p.parse_args(argv)

    video = bench_video(args.frames, args.tokens, args.dim)
    backends = compare_backends(video, repeats=args.repeats)
    levels = {name: run_bench(video, repeats=args.repeats, backend=name) for name in sorted(_backend.AVAILABLE)}
    if args.json:
        print(json.dumps({"backends": backends, "levels": {k: [lv.as_dict() for lv in v] for k, v in levels.items()}}, indent=2))
        return
    print(f"video {video.T}x{video.N}x{video.D}, {args.repeats} repeats")
    for name in sorted(_backend.AVAILABLE):
        b = backends[name]
        print(f"  {name:>7}: compress {b['compress_ms_mean']:7.2f} ± {b['compress_ms_std']:.2f} ms")
    if "speedup" in backends:
        print(f"  compiled speedup x{backends['speedup']:.2f}; masks agree: {backends['masks_agree']}")
    print("total (compress + attention) by retention:")
    for name, lv in levels.items():
        print(f"  {name:>7}: " + "  ".join(f"R={x.retention}: {x.total_ms_mean:.2f} ms" for x in lv))


if __name__ == "__main__":
    main()
