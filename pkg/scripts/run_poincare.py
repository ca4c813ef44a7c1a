"""Certify the negative-order Poincare inequality on the analytic corpus.

For every function-type item with a closed-form kappa, checks the ratio
|(T - P)(phi)| / (Gamma kappa r^{k+n}) over a probe dictionary for
k in {1,2,3} and seminorm orders i in {0,1}, then reports the sharpness
of the dictionary kappa estimate against the analytic constant.
"""

import argparse
import sys
import time

from ptdiff import (QuadratureConfig, analytic_kappa, build_kernel,
                    has_analytic_kappa, load_corpus, make_dictionary,
                    measure_kappa, verify)

QUAD = QuadratureConfig(rel_tol=1e-9, abs_floor=1e-13, max_cells=2 ** 12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dict-size", type=int, default=6)
    ap.add_argument("--sharp-size", type=int, default=64,
                    help="dictionary size for the kappa sharpness diagnostic")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    corpus = load_corpus()
    items = [iid for iid, item in sorted(corpus.items())
             if item.is_function_type and has_analytic_kappa(iid)]
    kernels = {k: build_kernel(1, max(k, 2)) for k in (1, 2, 3)}
    dicts = {i: make_dictionary(1, 1, i, args.dict_size, args.seed)
             for i in (0, 1)}
    t0 = time.time()
    worst = 0.0
    failures = 0
    for iid in items:
        T = corpus[iid].build()
        for k in (1, 2, 3):
            for i in (0, 1):
                K = ([0.0], 1.0 + k)
                kap = analytic_kappa(iid, k, i, K)
                rep = verify(T, k, i, [0.0], kernels[k], dicts[i],
                             C=([0.0], 1.0), r=1.0, kappa=kap, config=QUAD)
                if kap == 0.0:
                    num = max(row.numerator for row in rep.rows)
                    print(f"{iid:8s} k={k} i={i} kappa=0      "
                          f"numerator={num:.2e}")
                    failures += 0 if num <= 1e-8 else 1
                    continue
                worst = max(worst, rep.max_ratio)
                tag = "ok" if rep.max_ratio <= 1.0 else "VIOLATION"
                failures += 0 if rep.max_ratio <= 1.0 else 1
                print(f"{iid:8s} k={k} i={i} kappa={kap:9.4f} "
                      f"ratio={rep.max_ratio:.4f} [{tag}]")
    print(f"matrix worst ratio {worst:.4f} in {time.time() - t0:.0f}s")

    big = make_dictionary(1, 1, 0, args.sharp_size, args.seed)
    for iid in items:
        T = corpus[iid].build()
        best = 0.0
        for k in (1, 2, 3):
            K = ([0.0], 1.0 + k)
            kap = analytic_kappa(iid, k, 0, K)
            if kap == 0.0:
                continue
            est = measure_kappa(T, k, 0, big, K, QUAD)
            best = max(best, est.value / kap)
        print(f"{iid:8s} sharpness max_k kappa_hat/kappa = {best:.3f}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
