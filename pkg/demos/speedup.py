"""Call counts and component timings of both samplers on a 10-mark Hawkes process.

Run:
    python demos/speedup.py [step]
"""
import json
import sys

from spectpp.experiments import default_benchmark_hawkes, speedup_benchmark
from spectpp.sampler import SpecConfig

step = int(sys.argv[1]) if len(sys.argv) > 1 else 5
res = speedup_benchmark(default_benchmark_hawkes(), n_events=1000, cfg=SpecConfig(step=step))
print(json.dumps(res.to_dict(), indent=2))
