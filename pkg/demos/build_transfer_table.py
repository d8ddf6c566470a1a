"""
Regenerate the decoder transfer table shipped in ``turbomud/data``.

A single-user coded BPSK link over real AWGN is simulated on a 0.25 dB SNR
grid; each row records data-bit errors, the soft-feedback error power and a
histogram of b * bhat.  Takes about twenty minutes on one core.

    python demos/build_transfer_table.py [out_path]
"""
import sys
import time
from pathlib import Path

import numpy as np

from turbomud.lsa.transfer import DEFAULT_TABLE, build_transfer_table

SNR_DB = np.round(np.arange(-12.0, 12.0 + 1e-9, 0.25), 2)
SEED = 20240917


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "turbomud" / "data" / DEFAULT_TABLE)
    t0 = time.time()
    table = build_transfer_table(SNR_DB, seed=SEED)
    table.save(out)
    print(f"wrote {out} ({SNR_DB.size} points, {time.time() - t0:.0f} s)")
    for s, b, e in zip(table.snr_db[::8], table.ber[::8], table.e_db2[::8]):
        print(f"  snr {s:6.2f} dB  ber {b:.3e}  E(db^2) {e:.3e}")


if __name__ == "__main__":
    main()
