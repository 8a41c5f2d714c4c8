#!/usr/bin/env python3
"""Modular momentum: translation moments, folded distributions and free flight."""
import argparse
from pathlib import Path

import numpy as np

from twinmz import modular as mod


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ell", type=float, default=20.0)
    ap.add_argument("--sigma", type=float, default=2.0)
    ap.add_argument("--out", default="out/modular")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    single = mod.make_single_packet(args.ell, args.sigma)
    rep = mod.complete_uncertainty_check(single, args.ell)
    print(f"single packet: max |<T^n>| = {rep.max_overlap:.2e}, uniformity deviation {rep.max_uniformity_deviation:.2e}")

    for alpha in (0.0, np.pi / 2, 1.0):
        st = mod.make_two_slit_state(args.ell, args.sigma, alpha)
        t = mod.translate_expectation(st, args.ell)
        tau = mod.packet_doubling_time(args.sigma)
        drift = abs(mod.translate_expectation(mod.free_evolve(st, tau), args.ell) - t)
        dist = mod.modular_distribution(st, args.ell)
        print(f"alpha {alpha:.3f}: <T> = {t.real:+.6f}{t.imag:+.6f}i  arg {np.angle(t):+.6f}  "
              f"drift after {tau:.1f} = {drift:.1e}  max/min fold {dist.max_min_ratio():.2f}")
        mod.write_distribution_csv(out / f"fold_alpha{alpha:.3f}.csv", dist, {"ell": args.ell, "alpha": alpha})

    both = mod.make_two_slit_state(args.ell, args.sigma, 0.0)
    for label, state in (("both", both), ("left_closed", mod.close_slit(both, "left"))):
        x, dens = mod.screen_pattern(state, 40.0)
        mod.write_density_csv(out / f"screen_{label}.csv", x, dens, {"t": 40.0, "slits": label})
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
