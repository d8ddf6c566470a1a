"""
Watch the turbo loop clean up a heavily loaded link.

Four users share a spreading gain of four over a two-period multipath
channel.  The script runs the exact joint detector, the reduced-state
detector and plain soft cancellation side by side on the same blocks and
prints the bit error rate after each detector/decoder pass.

    python demos/turbo_iterations.py [ebno_db]
"""
import sys
import time

from turbomud import sysmodel
from turbomud.harness import ebno_to_sigma2, run_monte_carlo

K, N, L = 4, 4, 2     # exact detection is exponential in K * L
ITERS = 4
BITS = 100_000


def main():
    ebno = float(sys.argv[1]) if len(sys.argv) > 1 else 2.0
    cfg = sysmodel.SystemConfig(K=K, N=N, M=258, L=L, sigma_n2=ebno_to_sigma2(ebno), seed=3)
    print(f"K={K} users, N={N} chips, L={L}, Eb/N0={ebno:.1f} dB, about {BITS} bits per detector\n")

    runs = [("pic", {}), ("rs", {"kappa": 0.25}), ("rs", {"kappa": 0.5}), ("map", {})]
    print(f"{'detector':<14}" + "".join(f"  iter {i + 1:<6}" for i in range(ITERS)) + "   time")
    for det, kw in runs:
        t0 = time.time()
        c = run_monte_carlo(cfg, det, ITERS, min_errors=10**9, max_bits=BITS, **kw)
        label = det + (f" k={kw['kappa']}" if kw else "")
        bers = "".join(f"  {b:.2e}   " for b in c.ber)
        print(f"{label:<14}{bers}{time.time() - t0:6.1f} s")

    # the same blocks go through every detector, so the rows are directly comparable
    print("\nThe first pass starts from uniform priors; each later pass feeds the")
    print("decoders' extrinsic output back as soft symbol estimates, and the")
    print("widened search (larger kappa) moves the reduced-state curve toward exact detection.")


if __name__ == "__main__":
    main()
