"""Sweep folds, iterations, epsilon and heuristic on one noisy synthetic corpus.

Reuses a single audit per (k, t) since epsilon and the heuristic only change the weights.
"""

import argparse
import itertools

from crossweigh.evaluation import NoiseSpec, entity_f1, inject_noise
from crossweigh.framework import CrossWeighConfig, Heuristic, build_report, estimate_mistakes
from crossweigh.synthetic import TemplateConfig, train_test_corpora
from crossweigh.tagger import TrainConfig, predict_corpus, train


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ks", type=int, nargs="+", default=[3, 5, 10])
    p.add_argument("--ts", type=int, nargs="+", default=[1, 3, 5])
    p.add_argument("--epsilons", type=float, nargs="+", default=[0.3, 0.5, 0.7, 0.9])
    p.add_argument("--heuristics", nargs="+", default=[h.value for h in Heuristic])
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()

    clean, test = train_test_corpora(TemplateConfig(seed=args.seed), unseen_names=0.2)
    noisy, truth = inject_noise(clean, NoiseSpec(0.1, seed=args.seed, surface_consistency=1.0))
    tc = TrainConfig(shuffle_seed=args.seed)
    baseline = entity_f1(test, predict_corpus(train(noisy, config=tc), test)).f1
    print(f"baseline F1 {baseline:.4f}")
    print("k  t  heuristic     eps   flagged  det.P  det.R   F1      gain")
    for k, t in itertools.product(args.ks, args.ts):
        counts = estimate_mistakes(noisy, CrossWeighConfig(k=k, t=t, seed=args.seed), tc, jobs=args.jobs)
        for h, eps in itertools.product(args.heuristics, args.epsilons):
            report = build_report(noisy, CrossWeighConfig(k=k, t=t, epsilon=eps, heuristic=h, seed=args.seed),
                                  counts, truth)
            f1 = entity_f1(test, predict_corpus(train(noisy, report.weights, tc), test)).f1
            d = report.detection
            print(f"{k:<2} {t:<2} {h:<13} {eps:<5} {len(report.flagged):<8} {d.precision:.3f}  "
                  f"{d.recall:.3f}  {f1:.4f}  {100 * (f1 - baseline):+.2f}", flush=True)


if __name__ == "__main__":
    main()
