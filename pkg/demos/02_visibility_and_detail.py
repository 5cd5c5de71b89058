"""Which tiles a viewer sees, and how much detail each representation can show at a distance."""

import numpy as np

from volustream.geometry import Viewpoint, distinguishable_voxels, visible_mask
from volustream.media import AXIS_VECTORS, make_manifest, tile_world_position

manifest = make_manifest(tile_depth=1)
centers = np.array([tile_world_position(manifest, code) for code in range(manifest.tile_count)])
front = Viewpoint.look_at((0.0, 0.0, 2.0), (0.0, 0.0, 0.0))

print("faces of the 8 tiles that a viewer at +z can see:")
for code, normal in enumerate(["-x", "+x", "-y", "+y", "-z", "+z"]):
    seen = visible_mask(centers, np.tile(AXIS_VECTORS[code], (len(centers), 1)), front)
    print(f"  normal {normal}: {seen.sum()} of {len(centers)} visible")

tile = tuple(centers[7])
print("\ndistinguishable voxels per tile as the viewer backs away:")
for dist in (0.5, 1, 2, 4, 8):
    v = Viewpoint.look_at((tile[0], tile[1], tile[2] + dist), tile)
    row = [distinguishable_voxels(rep, manifest, tile, v).lod for rep in manifest.representations]
    print(f"  {dist:>4} m: {row}")
