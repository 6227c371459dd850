"""Compare the compiled and numpy GRU recurrence backends.

    python benchmarks/bench_gru.py [--repeat 5] [--hidden 32,64,128] [--length 60]

Times one forward + backward pass through the recurrence for each hidden
size, then one training epoch of a small model on synthetic data per
backend, and checks the two backends agree.
"""
import argparse
import statistics
import time

import numpy as np

from lide import synthetic
from lide.features import NgramSpec
from lide.rnn import gru, kernels
from lide.rnn.gru import TrainConfig, train_gru


def _time(fn, repeat):
    runs = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t)
    return statistics.median(runs)


def bench_recurrence(backend, H, T, repeat, rng):
    a = [rng.normal(size=(T, H)) for _ in range(3)]
    u = [rng.uniform(-0.08, 0.08, size=(H, H)) for _ in range(3)]
    dh = rng.normal(size=(T, H))

    def step():
        fw = backend.recurrence_forward(*a, *u)
        backend.recurrence_backward(*fw, dh, *u)

    return _time(step, repeat)


def bench_epoch(name, corpus, repeat):
    # Swap the module-level kernel aliases for the duration of the run.
    saved = kernels.recurrence_forward, kernels.recurrence_backward
    impl = kernels.get(name)
    kernels.recurrence_forward, kernels.recurrence_backward = impl.recurrence_forward, impl.recurrence_backward
    cfg = TrainConfig(epochs=1, hidden=64, embed_dim=32, dropout=0.2)
    try:
        models = []
        t = _time(lambda: models.append(train_gru(corpus, None, NgramSpec("char", 2, 2), cfg)), repeat)
    finally:
        kernels.recurrence_forward, kernels.recurrence_backward = saved
    return t, models[-1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--hidden", default="32,64,128")
    ap.add_argument("--length", type=int, default=60)
    ap.add_argument("--sentences", type=int, default=50, help="per class, for the epoch benchmark")
    args = ap.parse_args()

    names = [n for n in ("python", "cython") if n in kernels.BACKENDS]
    print(f"backends available: {names} (default: {kernels.BACKEND})")
    rng = np.random.default_rng(0)

    print(f"\nrecurrence forward+backward, T={args.length}, median of {args.repeat}")
    print(f"{'H':>5}  " + "  ".join(f"{n:>10}" for n in names) + ("   speedup" if len(names) == 2 else ""))
    for H in (int(h) for h in args.hidden.split(",")):
        times = [bench_recurrence(kernels.get(n), H, args.length, args.repeat, rng) for n in names]
        row = f"{H:>5}  " + "  ".join(f"{t * 1e3:>8.2f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:>8.1f}x"
        print(row)

    corpus = synthetic.disjoint_corpus(args.sentences, seed=0)
    print(f"\none training epoch, {len(corpus)} sentences, char 2-grams, H=64, d=32")
    results = {}
    for n in names:
        t, model = bench_epoch(n, corpus, max(1, args.repeat // 2))
        results[n] = model
        print(f"{n:>8}: {t:.2f}s")
    if len(results) == 2:
        a, b = (results[n].params.arrays() for n in names)
        diff = max(float(np.max(np.abs(a[k] - b[k]))) for k in gru.PARAM_NAMES)
        print(f"max parameter difference between backends after one epoch: {diff:.1e}")


if __name__ == "__main__":
    main()
