# A small Monte Carlo campaign; the same grid with more replicates and
# n in {200, 300, 500} is what `modal-sdr simulate` runs by default.
from modal_sdr.simulation import SimSpec, run_monte_carlo

grid = [SimSpec(m, n, seed=11) for m in ("A3", "A4") for n in (100, 200)]
report = run_monte_carlo(grid, methods=("lmopg", "sir"), replicates=5)
print(report.to_csv())

row = report.row("A4", "normal", 200, "lmopg")
print("A4, n=200: individual R values", [round(v, 4) for v in row.values])
