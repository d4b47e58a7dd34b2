"""Compare the compiled and numpy integrand backends.

Runs the integrand kernels of each backend directly, then times an end-to-end
kernel evaluation in a subprocess per backend (WORMKERN_PURE selects numpy).

    python3 benchmarks/bench_backends.py [--repeat 5]
"""
import argparse
import json
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from wormkern import backend

A = 2 * 1.5 * math.pi - math.pi

END_TO_END = """
import json, math, time
from wormkern import backend
from wormkern.geometry import StripPoint, make_params
from wormkern.kernel import clear_cache, kernel_strip
P = make_params(1.5 * math.pi)
z, w = StripPoint(0.4 + 0.2j, 1.1 + 0.3j), StripPoint(-0.3 - 0.1j, 0.9 - 0.2j)
best = float("inf")
for _ in range({repeat}):
    clear_cache()
    t = time.perf_counter()
    for route in ("brute", "split", "expansion"):
        kernel_strip(z, w, P, route)
    best = min(best, time.perf_counter() - t)
print(json.dumps({{"backend": backend.backend(), "seconds": best}}))
"""


def micro(name, repeat):
    impl = backend.implementation(name)
    xi = np.linspace(-30, 30, 20001)
    edges = np.linspace(-40.0, 40.0, 17)
    cases = {
        "mode_values (20k nodes)": lambda: impl.mode_values(xi, 1.3 - 0.4j, 1.0, A, 0.0, 1e-3),
        "split_values k=3 (20k nodes)": lambda: impl.split_values(xi, 1.3 - 0.4j, 1.0, A, 0.75, 3),
        "integrate_mode (adaptive)": lambda: impl.integrate_mode(edges[:-1], edges[1:], 0.8 + 0.2j, 0.5, A, 0.0,
                                                                 1e-3, 1e-12, 400, 1e-15),
    }
    return {k: min(timeit.repeat(f, number=20, repeat=repeat)) / 20 for k, f in cases.items()}


def end_to_end(pure, repeat):
    env = dict(os.environ)
    if pure:
        env["WORMKERN_PURE"] = "1"
    else:
        env.pop("WORMKERN_PURE", None)
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = ["numpy"]
    try:
        backend.implementation("cython")
        names.append("cython")
    except ImportError:
        print("compiled extension not built; timing numpy only")
    res = {n: micro(n, args.repeat) for n in names}
    for case in res["numpy"]:
        line = f"{case:32s}" + "".join(f"  {n} {res[n][case] * 1e3:8.3f} ms" for n in names)
        if "cython" in res:
            line += f"  speedup {res['numpy'][case] / res['cython'][case]:5.2f}x"
        print(line)
    runs = [end_to_end(True, args.repeat)] + ([end_to_end(False, args.repeat)] if "cython" in names else [])
    for r in runs:
        print(f"{'kernel, three routes':32s}  {r['backend']} {r['seconds'] * 1e3:8.1f} ms")
    if len(runs) == 2:
        print(f"{'end-to-end speedup':32s}  {runs[0]['seconds'] / runs[1]['seconds']:5.2f}x")


if __name__ == "__main__":
    main()
