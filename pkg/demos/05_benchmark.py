"""Compare the coarse-to-fine agent against the baselines on one synthetic
world, then show how the r_b / r_p weights steer basic vs preferred success.

Run:  python demos/05_benchmark.py      (~60 s)
"""

import time

from demandnav.bench import BenchJob, run_benchmark
from demandnav.explorers.coarse import CoarsePolicyConfig
from demandnav.metrics import report_to_dict
from demandnav.scene import EpisodeSpec
from demandnav.synth import SynthParams, synth_generate

params = SynthParams(dim=96, n_objects=24)
scene, tasks, table = synth_generate(101, params)
spec = EpisodeSpec()

print(f"{'agent':10s} {'SR_b':>7s} {'SR_p':>7s} {'SPL_b':>7s} {'SPL_p':>7s}")
for agent in ("c2f", "mopa", "fbe", "random"):
    t0 = time.time()
    job = BenchJob(agent=agent, scenes=[scene], tasks=tasks, spec=spec,
                   seeds=[1, 2], episodes_per_seed=25, table=table,
                   coarse=CoarsePolicyConfig(branch="llm"))
    report, _ = run_benchmark(job, workers=2)
    pooled = report_to_dict(report)["pooled"]
    print(f"{agent:10s} {pooled['sr_b']:6.2f}% {pooled['sr_p']:6.2f}% "
          f"{pooled['spl_b']:6.2f}% {pooled['spl_p']:6.2f}%   ({time.time()-t0:.0f}s)")

print("\nsteering with the preference weight (c2f):")
print(f"{'r_b, r_p':12s} {'SR_b':>7s} {'SR_p':>7s}")
for r_b, r_p in ((1.0, 0.0), (1.0, 1.0), (1.0, 2.0)):
    job = BenchJob(agent="c2f", scenes=[scene], tasks=tasks, spec=spec,
                   seeds=[1, 2], episodes_per_seed=25, table=table,
                   coarse=CoarsePolicyConfig(r_b=r_b, r_p=r_p, branch="llm"))
    report, _ = run_benchmark(job, workers=2)
    pooled = report_to_dict(report)["pooled"]
    print(f"r_b={r_b}, r_p={r_p}  {pooled['sr_b']:6.2f}% {pooled['sr_p']:6.2f}%")
