#!/usr/bin/env python3
"""Darcy solver verification on the unit disc.

Pressure error against the disc dipole oracle under uniform refinement, and
maximal boundary speed as a force approaches the circle.
"""
import argparse

from blebsim.verification import boundary_speed_study, convergence_orders, dipole_pressure_error


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    ap.add_argument("--rho", type=float, default=0.2, help="kernel radius of the dipole")
    ap.add_argument("--speed-h", type=float, default=0.02, help="mesh size for the boundary-speed study")
    args = ap.parse_args()

    errors = [dipole_pressure_error(h, rho=args.rho) for h in args.h]
    orders = [float("nan")] + convergence_orders(args.h, errors)
    print("h,l2_error,order")
    for h, e, o in zip(args.h, errors, orders):
        print(f"{h},{e:.6e},{o:.3f}")

    study = boundary_speed_study(h=args.speed_h)
    print("\ndistance,max_boundary_speed")
    for d, s in zip(study["distances"], study["speeds"]):
        print(f"{d},{s:.6g}")
    print(f"log-log slope {study['slope']:.3f}, monotone {study['monotone']}")


if __name__ == "__main__":
    main()
