"""Run the desk-scale experiment and print learning curves, scores and baselines.

Usage: python scripts/desk_experiment.py [--epochs 500] [--arch st] [--baselines]
"""
import argparse
import dataclasses
import logging

import numpy as np

from nces.desk import DeskConfig, prepare_desk_data, run_desk
from nces.metrics import semantic_quality


def baselines(data):
    """Two non-learned references for test F1 on the same split.

    best-train-target: for each test problem, the best F1 any training
    target achieves on it (an upper bound for a model that only reproduces
    training targets).  nearest-neighbour: the target of the training problem
    whose mean positive/negative embeddings are closest.
    """
    kb, train_p, test_p = data.kb, data.train_problems, data.test_problems
    best = [max(semantic_quality(kb, p, q.target).f1 for q in train_p) for p in test_p]

    def feature(p):
        return np.concatenate([data.table.rows(p.positives).mean(0), data.table.rows(p.negatives).mean(0)])

    feats = np.array([feature(p) for p in train_p])
    nearest = []
    for p in test_p:
        j = int(np.argmin(((feats - feature(p)) ** 2).sum(1)))
        nearest.append(semantic_quality(kb, p, train_p[j].target).f1)
    return float(np.mean(best)), float(np.mean(nearest))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for f in dataclasses.fields(DeskConfig):
        ap.add_argument("--" + f.name.replace("_", "-"), type=type(f.default) if f.default is not None else int,
                        default=f.default)
    ap.add_argument("--baselines", action="store_true")
    ap.add_argument("--show", type=int, default=25, help="number of test predictions to print")
    args = vars(ap.parse_args())
    show, want_baselines = args.pop("show"), args.pop("baselines")
    cfg = DeskConfig(**args)
    logging.basicConfig(level=logging.WARNING)

    data = prepare_desk_data(cfg)
    print(f"{len(data.train_problems)} train / {len(data.test_problems)} test problems, C = {data.vocab.num_classes}")
    if want_baselines:
        best, nearest = baselines(data)
        print(f"baselines: best-train-target F1 {best:.3f}, nearest-neighbour F1 {nearest:.3f}")

    def on_epoch(m):
        if m.epoch in (1, 10) or m.epoch % 25 == 0:
            print(f"epoch {m.epoch:4d} loss {m.loss:.4f} soft {m.soft_acc:.3f} hard {m.hard_acc:.3f}", flush=True)

    result = run_desk(cfg, data, on_epoch=on_epoch)
    for name, s in (("train", result.train), ("test", result.test)):
        print(f"{name}: F1 {s.mean_f1:.3f} hard {s.mean_hard:.3f} parse rate {s.parse_rate:.2f}")
    print(f"first epoch with train hard >= 0.95: {result.first_epoch_reaching(0.95)}; {result.seconds:.0f}s")
    for p, r in list(zip(data.test_problems, result.test.results))[:show]:
        q = semantic_quality(data.kb, p, r.expression)
        print(f"  {str(p.target)!r:28} -> {r.expression_text!r:28} F1 {q.f1:.2f}")


if __name__ == "__main__":
    main()
