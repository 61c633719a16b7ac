"""L1 error of the two-hidden-layer ReLU approximant along a ladder of eps.

Prints one CSV row per eps and stores each approximant as JSON.
"""

import argparse
from pathlib import Path

from sigadmm.approx import relu_approx


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="runs/relu")
    p.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print("eps,L1_error,num_params,max_param")
    for eps in args.eps:
        r = relu_approx(eps)
        (out / f"relu_eps{eps:g}.json").write_text(r.to_json())
        print(f"{eps:g},{r.info['L1_error']:.3e},{r.num_params},{r.max_param:.3e}")


if __name__ == "__main__":
    main()
