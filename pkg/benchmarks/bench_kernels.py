"""Compare the compiled and pure-Python metric kernels.

    python3 benchmarks/bench_kernels.py [--tokens 20000] [--window 100] [--repeat 5]
"""

import argparse
import random
import timeit

from podforge.eval import _backend
from podforge.eval.metrics import distinct_n, info_density
from podforge.eval.text import load_stopwords, make_windows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tokens", type=int, default=20_000)
    ap.add_argument("--window", type=int, default=100)
    ap.add_argument("--vocab", type=int, default=2_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = random.Random(0)
    stop = sorted(load_stopwords())
    vocab = [f"w{i}" for i in range(args.vocab)] + stop
    toks = [rng.choice(vocab) for _ in range(args.tokens)]
    ws = make_windows(toks, args.window)
    cases = {
        "distinct_1": lambda b: distinct_n(toks, 1, ws, backend=b),
        "distinct_2": lambda b: distinct_n(toks, 2, ws, backend=b),
        "info_density": lambda b: info_density(toks, None, ws, backend=b),
    }
    backends = _backend.available()
    print(f"{args.tokens} tokens, window {args.window}, {ws.count} windows; backends: {', '.join(backends)}")
    print(f"{'metric':<14}" + "".join(f"{b + ' (ms)':>16}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        results = {b: fn(b) for b in backends}
        assert len(set(results.values())) == 1, f"{name}: backends disagree: {results}"
        times = {b: min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) * 1e3 for b in backends}
        speed = f"{times['python'] / times['cython']:.1f}x" if "cython" in times else "n/a"
        print(f"{name:<14}" + "".join(f"{times[b]:>16.2f}" for b in backends) + f"{speed:>10}")


if __name__ == "__main__":
    main()
