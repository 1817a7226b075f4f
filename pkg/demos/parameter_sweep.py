"""
A small parameter sweep, end to end
===================================

Runs the experiment harness over two rectangle areas and two attacker
models, then reads the CSV back and prints the trend the defaults encode:
bigger rectangles mean fewer requests and a larger reconstruction area.

Takes around a minute; the full evaluation grid lives in the acceptance
tests and the `pmknn experiment` command.
"""

import tempfile
from pathlib import Path

from pmknn import (
    DataSpec,
    SweepConfig,
    TrajectorySpec,
    read_results_csv,
    sweep,
    write_results_csv,
)

config = SweepConfig(
    data=DataSpec(kind="uniform", n=20_000, seed=1),
    traj=TrajectorySpec(count=5, total_length=5000.0, seg_min=200.0, seg_max=800.0, seed=2),
    areas=(0.001, 0.01),
    cls=(1.0,),
    cl_rs=(0.75,),
    ks=(20,),
    k_rs=(10,),
    deltas=(10.0,),
    attacks=("overlap", "combined"),
    repeats=3,
    seed=4,
    audit_fraction=0.01,
    area_samples=20_000,
)

records = sweep(config)
out = Path(tempfile.mkdtemp()) / "results.csv"
write_results_csv(records, out)
print(f"wrote {out}\n")

print("area%    attack    frequency  traj-area%  |P|/run  audits  violations")
for r in read_results_csv(out):
    print(f"{r.area_pct:<8g} {r.attack:<9s} {r.frequency:9.1f}  {r.trajectory_area_pct:10.3f}"
          f"  {r.answer_size:7.0f}  {r.audit_checks:6d}  {r.audit_violations:10d}")

small = [r for r in records if r.area_pct == 0.001 and r.attack == "overlap"][0]
big = [r for r in records if r.area_pct == 0.01 and r.attack == "overlap"][0]
print(f"\ngrowing the rectangle 10x cut request frequency by "
      f"{small.frequency / big.frequency:.2f}x and grew the attacker's "
      f"uncertainty {big.trajectory_area_pct / small.trajectory_area_pct:.2f}x")
