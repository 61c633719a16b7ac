"""Per-epoch curves of SGD and ADMM from one MSRA-scale-32 initialization.

Writes ``sgd.csv`` and ``admm.csv`` into the output directory.
"""

import argparse
from pathlib import Path

from sigadmm.admm import HyperParams, train
from sigadmm.bench import make_dataset
from sigadmm.init import init_weights
from sigadmm.sgd import SGDConfig, train_sgd


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="runs/saturation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sgd-epochs", type=int, default=100)
    p.add_argument("--admm-epochs", type=int, default=500)
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ds = make_dataset("square", 2000, 1000, seed=args.seed)
    net0 = init_weights([1, 50, 50, 1], "msra:32", seed=args.seed)
    _, sgd = train_sgd(net0, ds, SGDConfig(epochs=args.sgd_epochs), seed=args.seed)
    sgd.to_csv(out / "sgd.csv")
    _, admm = train(net0, ds.X_train, ds.Y_train, HyperParams(lam=1e-6, beta=1.0, epochs=args.admm_epochs))
    admm.to_csv(out / "admm.csv")
    print(f"SGD: final loss {sgd.train_loss[-1]:.3g}, min layer-1 grad {min(sgd.grad_norm_layer1):.2e}")
    print(f"ADMM: final objective {admm.rows[-1].L_value:.3g}, KKT residual {admm.rows[-1].kkt_residual:.2e}")


if __name__ == "__main__":
    main()
