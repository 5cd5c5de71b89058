"""Command line entry point: ``volu-stream run | pack | inspect-index``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cbm import ALGORITHMS
from .media import (
    IndexFormatError,
    IndexValidationError,
    SphereShell,
    build_all_indexes,
    default_ladder,
    make_manifest,
    parse_index,
    write_object,
)
from .network import ConfigurationError
from .scenario import Scenario, ScenarioError, run, write_outputs

EXIT_SCENARIO = 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="volu-stream", description="Volumetric streaming simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario and write metrics")
    r.add_argument("--scenario", required=True, help="scenario JSON file")
    r.add_argument("--algorithm", choices=ALGORITHMS)
    r.add_argument("--network", help="stable, variable or trace:<file>")
    r.add_argument("--camera", help="static, path1, path2, flip, pan or trace:<file>")
    r.add_argument("--depth", type=int, help="tile depth")
    r.add_argument("--seed", type=int)
    r.add_argument("--duration", type=float, help="user seconds to simulate")
    r.add_argument("--out", help="output directory")
    r.add_argument("--no-charts", action="store_true", help="skip SVG charts")

    p = sub.add_parser("pack", help="write a synthetic object: manifest, indexes and payloads")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--name", default="sphere")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--duration", type=float, default=10.0, help="clip length in seconds")
    p.add_argument("--radius", type=float, default=0.4, help="shell radius in meters")
    p.add_argument("--thickness", type=float, default=0.05)
    p.add_argument("--ladder-scale", type=float, default=1.0)
    p.add_argument("--gof-frames", type=int, default=4)
    p.add_argument("--no-payload", action="store_true", help="write only manifest and indexes")

    i = sub.add_parser("inspect-index", help="print a segment index file")
    i.add_argument("file")
    i.add_argument("--tiles", action="store_true", help="list every tile")
    return ap


def cmd_run(args) -> int:
    try:
        sc = Scenario.load(args.scenario).with_overrides(
            algorithm=args.algorithm,
            network=args.network,
            camera=args.camera,
            depth=args.depth,
            seed=args.seed,
            duration=args.duration,
            out=args.out,
        )
        result = run(sc)
    except (ScenarioError, ConfigurationError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    out = Path(sc.output_dir) if sc.output_dir else Path("out") / Path(args.scenario).stem
    write_outputs(result, out, charts=not args.no_charts)
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    print(f"wrote {out}", file=sys.stderr)
    return 0


def cmd_pack(args) -> int:
    manifest = make_manifest(
        name=args.name,
        tile_depth=args.depth,
        duration=args.duration,
        representations=default_ladder(args.ladder_scale),
    )
    shape = SphereShell(radius=args.radius, thickness=args.thickness)
    indexes = build_all_indexes(manifest, shape, args.gof_frames)
    files = write_object(Path(args.out), manifest, indexes, payload=not args.no_payload)
    print(f"{len(files)} files in {args.out}")
    return 0


def cmd_inspect(args) -> int:
    try:
        index = parse_index(Path(args.file).read_bytes())
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return 1
    except (IndexFormatError, IndexValidationError) as exc:
        print(f"bad index {args.file}: {exc}", file=sys.stderr)
        return 1
    reps = index.representation_count
    print(f"{args.file}: {len(index.gofs)} GOFs, {reps} representations")
    for g, gof in enumerate(index.gofs):
        sizes = [sum(t.byte_count[r] for t in gof.tiles) for r in range(reps)]
        print(
            f"  gof {g}: start {gof.start_time} dur {gof.duration} frames {gof.frame_count} "
            f"tiles {gof.tile_count} bytes/rep {sizes}"
        )
        for r, (off, head) in enumerate(gof.per_representation):
            print(f"    rep {r + 1}: offset {off} header {head}")
        if args.tiles:
            for t in gof.tiles:
                print(f"    tile {t.morton_code:>6} normal {t.normal_code} bytes {list(t.byte_count)}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": cmd_run, "pack": cmd_pack, "inspect-index": cmd_inspect}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
