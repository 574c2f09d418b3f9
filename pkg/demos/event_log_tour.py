"""A guided read of one tiny event log.

Runs a 3-server system for a short horizon, prints every event with the
five counters, and re-derives each counter from the others to show the
balance identities holding at every single row.  Good first stop for
understanding what the simulator records.

    python3 demos/event_log_tour.py
"""
import numpy as np

from queuelab.dists import ArrivalSpec, make_service_dist
from queuelab.microsim import (KIND_NAMES, InitialCondition, SimConfig,
                               conservation_check, simulate)


def main():
    config = SimConfig(
        N=3,
        arrival=ArrivalSpec("renewal", lambda_bar=1.2),
        service=make_service_dist({"family": "lognormal", "sigma": 0.5}),
        T=3.0,
        initial=InitialCondition(x0=2, ages="invariant"),
        seed=42,
    )
    path = simulate(config)

    print(f"3 servers, lognormal service, {path.ev_time.size} events "
          f"on [0, {config.T}], starting with 2 customers in service\n")
    print(f"{'time':>8}  {'event':<14} {'E':>3} {'D':>3} {'K':>3} "
          f"{'X':>3} {'busy':>4}   derived")
    for i in range(path.ev_time.size):
        e, d, k, x, b = (path.E[i], path.D[i], path.K[i], path.X[i],
                         path.B[i])
        # the two balance identities, re-derived per row
        derived = (f"D = x0-X+E = {path.x0}-{x}+{e} = {path.x0 - x + e}, "
                   f"K = B-b0+D = {b}-{path.b0}+{d} = {b - path.b0 + d}")
        print(f"{path.ev_time[i]:8.4f}  {KIND_NAMES[path.ev_kind[i]]:<14} "
              f"{e:>3} {d:>3} {k:>3} {x:>3} {b:>4}   {derived}")

    print("\nworst violation of each identity over the whole path:")
    for name, v in conservation_check(path).items():
        print(f"  {name:<24} {v}")

    t = config.T / 2
    ages = path.ages_at(t)
    print(f"\nages in service at t={t}: {np.sort(ages).round(3)}")


if __name__ == "__main__":
    main()
