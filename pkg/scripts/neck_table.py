"""Print neck constants for a few angle families: R0, C0 and the plane angles.

    python scripts/neck_table.py
"""

from __future__ import annotations

import numpy as np

from slaglab.lawlor import get_neck, match_angles, measure_C0

FAMILIES = [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0), (2.0, 2.0, 2.0), (1.0, 1.0, 4.0)]


def main() -> None:
    print(f"{'a':<18} {'R0':>10} {'C0':>10} {'angle sum/pi':>14}  plane angles")
    for a in FAMILIES:
        neck = get_neck(a)
        ang = neck.plane_angles()
        back = match_angles(ang).a
        err = np.max(np.abs(back / back[0] - np.asarray(a) / a[0]))
        print(f"{str(a):<18} {neck.R0:>10.6f} {measure_C0(neck):>10.5f} {ang.sum() / np.pi:>14.12f}  "
              + ", ".join(f"{t:.6f}" for t in ang) + f"  (round trip {err:.1e})")


if __name__ == "__main__":
    main()
