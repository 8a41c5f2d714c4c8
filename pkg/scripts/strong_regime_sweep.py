#!/usr/bin/env python3
"""Class-1 pointer slope in the strong regime as the recombination visibility drops.

At full visibility the class-1 pointer follows gamma (slope -gain); with no
visibility left it follows gamma/2, i.e. it converges onto the class-2 line.
"""
import argparse

import numpy as np

from twinmz.analysis import StageConfig, run_pipeline, strong_regime_slope
from twinmz.camera import CameraConfig
from twinmz.pointerlab import FidelityMode


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=6)
    args = ap.parse_args()

    stage, cam = StageConfig(), CameraConfig(quantize=False)
    frame = run_pipeline(stage, cam).frame
    print("   v    slope(400..650 um)   slope / gain")
    for v in np.linspace(1.0, 0.0, args.steps):
        res = run_pipeline(stage, cam, fidelity=FidelityMode.visibility(v, v), frame=frame)
        s = strong_regime_slope(res.framed[1])
        print(f"{v:5.2f}   {s:+.4f}              {s / stage.gain:+.4f}")


if __name__ == "__main__":
    main()
