"""What a follower's camera reports, and what the parser makes of it.

Places a leader at a chosen bearing, elevation and range, prints the blobs,
adds a surface reflection and shows that the estimate does not change.

    python demos/estimator.py --bearing 40 --pitch 10 --range 600 --yaw 120
"""

import argparse
import math

from swarmsim.dynamics import AgentState
from swarmsim.geometry import bearing_of, pitch_of, world_to_pqr
from swarmsim.vision import REFLECTION, BlobObservation, LedLayout, VisionParams, led_world_positions, observe, parse_blobs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bearing", type=float, default=40.0, help="degrees")
    ap.add_argument("--pitch", type=float, default=10.0, help="degrees, positive when the leader is lower")
    ap.add_argument("--range", type=float, default=600.0, help="mm")
    ap.add_argument("--yaw", type=float, default=120.0, help="leader heading in degrees")
    args = ap.parse_args()

    layout, params = LedLayout(), VisionParams(noise_sigma=0.0)
    me = AgentState(0.0, 0.0, -1000.0, 0.0)
    b, p = math.radians(args.bearing), math.radians(args.pitch)
    leader = AgentState(args.range * math.cos(p) * math.cos(b), args.range * math.cos(p) * math.sin(b),
                        -1000.0 - args.range * math.sin(p), math.radians(args.yaw), leds_on=True)

    blobs = observe(0, [me, leader], layout, params)
    for bl in blobs:
        print(f"blob  azimuth {math.degrees(bl.azimuth):8.3f}  elevation {math.degrees(bl.elevation):8.3f}")
    est = parse_blobs(blobs, layout, params)
    if est is None:
        print("leader not seen")
        return
    heading = f"{math.degrees(math.atan2(est.heading.y, est.heading.x)):.3f}" if est.heading_valid else "unknown"
    print(f"estimate  bearing {math.degrees(est.bearing):.3f}  pitch {math.degrees(est.pitch):.3f}  "
          f"distance {est.distance:.1f}  heading {heading}")

    # mirror image of the top LED in the water surface
    top = led_world_positions(leader, layout)[1]
    pt = world_to_pqr(me, (top[0], top[1], -top[2]))
    mirror = BlobObservation(bearing_of(pt), pitch_of(pt), REFLECTION)
    print(f"reflection  azimuth {math.degrees(mirror.azimuth):8.3f}  elevation {math.degrees(mirror.elevation):8.3f}")
    print("estimate unchanged:", parse_blobs(blobs + [mirror], layout, params) == est)


if __name__ == "__main__":
    main()
