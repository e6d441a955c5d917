"""Regenerate tests/data/tzitzeica.json: optimizer-built 4x4 Tzitzeica patches.

Usage: python make_tzitzeica.py [count] [first_seed]
"""
import json
import sys
import time
from pathlib import Path

from latticelie.classify import construct_special

OUT = Path(__file__).resolve().parent.parent / "data" / "tzitzeica.json"


def main(count=3, first=0, tol=1e-11):
    found = []
    seed = first
    while len(found) < count and seed < first + 60:
        t = time.time()
        res = construct_special("tzitzeica", seed, (4, 4), restarts=1, max_nfev=120, tol=tol)
        print(seed, f"{res.residual:.2e}", f"{time.time() - t:.0f}s", flush=True)
        if res.success:
            found.append({"seed": seed, "residual": res.residual,
                          "params": [repr(float(x)) for x in res.params]})
            OUT.write_text(json.dumps({"dims": [4, 4], "instances": found}, indent=1))
        seed += 1
    return found


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    main(*args)
