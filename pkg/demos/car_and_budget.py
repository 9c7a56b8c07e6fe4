"""Loss ledgers per slot and the CAR trade-off against pair generation rate.

Higher mu buys coincidences at the price of multi-pair accidentals, so CAR
falls roughly as 1/mu once dark counts stop mattering.

    python3 demos/car_and_budget.py
"""
import numpy as np

from entmux.analysis import compute_car
from entmux.config import default_config, photon_transmittance
from entmux.oracle import OracleParams, analytic_car
from entmux.sim import run_car_experiment

cfg = default_config()
for slot in (1, 2, 3):
    ledger = cfg.ledger_for(slot)
    print(f"T{slot}: {ledger.total_db} dB with analyzer, "
          f"single-pass transmittance {photon_transmittance(cfg, slot, analyzers=False):.4f}")

print("\n    mu     coinc    acc      CAR   oracle")
for i, mu in enumerate(np.geomspace(0.01, 0.3, 6)):
    c = cfg.replace(mu=float(mu))
    r = run_car_experiment(c, point=i, n_periods=c.n_periods(1) // 6)
    car = compute_car(r.coincidences, r.accidentals)
    print(f"{mu:7.4f} {r.coincidences:8d} {r.accidentals:6d} {car:8.2f} "
          f"{analytic_car(OracleParams.from_config(c, analyzers=False)):8.2f}")
