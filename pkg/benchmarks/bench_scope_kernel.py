"""Compare the numba and numpy candidate-scoring kernels.

    python3 benchmarks/bench_scope_kernel.py [--pairs 100] [--repeat 200]

Runs both kernels on the same random inputs (shaped like a full 4x4 window
search over ``--pairs`` context pairs), checks they agree, and reports the
median time per call.  A second section times whole turns through the
pipeline with each kernel selected by ``LATREPAIR_DISABLE_NUMBA``.
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from latrepair import _kernels


def random_inputs(n, W, rng):
    length = rng.random((W, W)) + 1e-3
    length /= length.sum(axis=0, keepdims=True)
    align = rng.random((W + 1, W, W, W)) + 1e-3
    align /= align.sum(axis=0, keepdims=True)
    R = rng.random((n, W, W + 1)) + 1e-6
    pre = rng.integers(1, W + 1, n)
    post = rng.integers(1, W + 1, n)
    return R, pre, post, length, align


def median_ms(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(1000 * (time.perf_counter() - t0))
    return statistics.median(times)


PIPELINE_SNIPPET = """
import time
from latrepair import _kernels
from latrepair.lattice import linear_lattice
from latrepair.pipeline import RepairModels, process_turn
from latrepair.synth import SynthSpec, build_lexicon, generate_synthetic
from latrepair.training import train_models
spec = SynthSpec(seed=1); lex = build_lexicon(spec)
models = RepairModels.from_bundle(train_models([t.gold for t in generate_synthetic(spec, 3000)], lex), lex)
lats = [linear_lattice(t.transliteration().split("\\t")[1].split()[:30], t.gold.turn_id)
        for t in generate_synthetic(SynthSpec(seed=2, min_words=30), {n})]
for lat in lats[:20]:
    process_turn(lat, models)  # warm-up, includes loading the compiled kernel
t0 = time.perf_counter()
for lat in lats:
    process_turn(lat, models)
print(_kernels.USE_NUMBA, 1000 * (time.perf_counter() - t0) / len(lats))
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--turns", type=int, default=300)
    args = ap.parse_args()
    if _kernels.pair_logprobs_numba is None:
        sys.exit("numba is not installed")
    rng = np.random.default_rng(0)
    inputs = random_inputs(args.pairs, 4, rng)
    a = _kernels.pair_logprobs_numpy(*inputs)
    b = _kernels.pair_logprobs_numba(*inputs)  # compiles (or loads the cache)
    finite = np.isfinite(a)
    assert np.array_equal(finite, np.isfinite(b)) and np.allclose(a[finite], b[finite], rtol=1e-12)
    t_np = median_ms(_kernels.pair_logprobs_numpy, inputs, args.repeat)
    t_nb = median_ms(_kernels.pair_logprobs_numba, inputs, args.repeat)
    print(f"kernel, {args.pairs} context pairs x 16 splits (median of {args.repeat}):")
    print(f"  numpy  {t_np:8.3f} ms")
    print(f"  numba  {t_nb:8.3f} ms   ({t_np / t_nb:.1f}x)")
    print(f"pipeline, {args.turns} 30-word turns, realistic triggers:")
    for flag in ("0", "1"):
        env = dict(os.environ, LATREPAIR_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", PIPELINE_SNIPPET.format(n=args.turns)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {'numba' if out[0] == 'True' else 'numpy':5}  {float(out[1]):8.3f} ms per turn")


if __name__ == "__main__":
    main()
