"""Pack a synthetic hollow sphere and read back one of its segment indexes."""

import tempfile
from pathlib import Path

from volustream.media import (
    SphereShell,
    build_all_indexes,
    index_bitrate,
    make_manifest,
    morton_decode,
    morton_encode,
    parse_index,
    write_object,
)

manifest = make_manifest(name="ball", tile_depth=2, duration=4.0)
indexes = build_all_indexes(manifest, SphereShell(radius=0.4, thickness=0.05))

with tempfile.TemporaryDirectory() as tmp:
    files = write_object(Path(tmp), manifest, indexes)
    print(f"wrote {len(files)} files: manifest, {manifest.segment_count} indexes, payloads per representation")
    first = parse_index((Path(tmp) / manifest.index_name(0)).read_bytes())

gof = first.gofs[0]
print(f"segment 0 holds {len(first.gofs)} GOFs; the first has {gof.tile_count} occupied tiles out of {manifest.tile_count}")
for tile in gof.tiles[:3]:
    print(f"  tile {tile.morton_code:3d} at cell {morton_decode(tile.morton_code)} bytes per rung {tile.byte_count}")

print("cell (1, 2, 4) interleaves to", morton_encode(1, 2, 4))
print(f"index stream for 100 tiles, 4 rungs, 30 fps, 4-frame GOFs: {index_bitrate(100, 4, 30, 4) / 1e3:.0f} kbps")
