"""A pocket-sized version of the noise ablation.

Both methods run on a few objects per jitter level; the table shows how
the mean errors grow with noise.  The full-size run is
``artic ablate --out DIR`` (20 objects per level, about an hour single-core).

Run:  python3 demos/03_small_ablation.py
"""

from artic import BenchmarkConfig, DegradeConfig, OptimizerConfig, run_benchmark
from artic.synth import ablation_suite

cfg = BenchmarkConfig(optimizer=OptimizerConfig(restarts=4, max_iters=200))
print(" jitter   MAE algo  MAE direct   MPE algo  MPE direct")
for jitter in (0.0, 0.01, 0.02):
    suite = ablation_suite(jitter, 5, ("door", "drawer", "lid", "laptop", "trashcan_lid"),
                           0.5, 0.05, points=1024, frames=10, seed=0)
    means = run_benchmark(suite, cfg=cfg).means
    a, d = means["algo"], means["direct"]
    print(f" {jitter:6.3f}  {a['mae_deg']:9.3f}  {d['mae_deg']:10.3f}  "
          f"{a['mpe']:9.4f}  {d['mpe']:10.4f}")
