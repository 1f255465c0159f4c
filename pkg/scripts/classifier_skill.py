"""Accuracy and Cohen's kappa of the JCD classifier against the zero-rule baseline.

Without arguments it runs on synthetic Markov chains with known transitions.
With ``--labeled FILE`` (a mined commits CSV/JSON plus a ``label`` column of
a/c/p) it trains on the oldest ``--train-fraction`` of the commits and
reports on the rest, for comparison with published figures.

    python3 scripts/classifier_skill.py
    python3 scripts/classifier_skill.py --labeled commits_labeled.csv --order 1
"""

import argparse

import numpy as np

from procscore.classification import (
    ACTIVITIES,
    DEFAULT_SCHEMA,
    Activity,
    FeatureSchema,
    build_chains,
    evaluate,
    fit_jcd,
    predict_jcd,
    zero_rule_fit,
    zero_rule_predict,
)
from procscore.mining import import_dataset, read_rows
from procscore.synthetic import skill_process, transition_dominated_process


def score(model, chains, zero):
    truth = [ch.principal_label for ch in chains]
    preds = [predict_jcd(model, ch.with_unlabeled_principal(), allow_shorter=True)[0] for ch in chains]
    m = evaluate(preds, truth, ACTIVITIES)
    zr = float(np.mean([t == zero for t in truth]))
    return m, zr


def synthetic(args):
    for name, proc, p in (("skill", skill_process(), 3), ("transition-dominated", transition_dominated_process(), 2)):
        schema = FeatureSchema.of([f"f{i}" for i in range(p)])
        train = proc.sample_chains(args.n_train, args.order + 1, seed=args.seed)
        test = proc.sample_chains(args.n_test, args.order + 1, seed=args.seed + 1)
        zero = zero_rule_predict(zero_rule_fit([ch.principal_label for ch in train]))
        for order in range(args.order + 1):
            tr = [type(ch)(ch.features[-order - 1:], ch.sojourns[-order - 1:], ch.labels[-order - 1:],
                           ch.ids[-order - 1:]) for ch in train]
            m, zr = score(fit_jcd(tr, order, schema), test, zero)
            print(f"{name:22s} order={order} accuracy={m.accuracy:.3f} kappa={m.kappa:.3f} zero-rule={zr:.3f}")


def labeled(args):
    records = sorted(import_dataset(args.labeled), key=lambda r: r.author_timestamp)
    labels = {r["id"]: Activity.parse(r["label"]) for r in read_rows(args.labeled) if (r.get("label") or "").strip()}
    cut = records[int(len(records) * args.train_fraction)].author_timestamp
    train_ids = {r.id for r in records if r.author_timestamp < cut}
    chains = build_chains(records, DEFAULT_SCHEMA, args.order + 1, labels, require_labels=True)
    train = [ch for ch in chains if ch.ids[-1] in train_ids and len(ch) > args.order]
    test = [ch for ch in chains if ch.ids[-1] not in train_ids]
    zero = zero_rule_predict(zero_rule_fit([ch.principal_label for ch in train]))
    m, zr = score(fit_jcd(train, args.order, DEFAULT_SCHEMA), test, zero)
    print(f"train={len(train)} test={len(test)} accuracy={m.accuracy:.3f} kappa={m.kappa:.3f} zero-rule={zr:.3f}")
    print("confusion (rows truth a/c/p, columns predicted):")
    print(m.confusion.astype(int))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--labeled", help="mined commits file with a 'label' column")
    ap.add_argument("--train-fraction", type=float, default=0.7)
    ap.add_argument("--order", type=int, default=1)
    ap.add_argument("--n-train", type=int, default=2000)
    ap.add_argument("--n-test", type=int, default=500)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args(argv)
    labeled(args) if args.labeled else synthetic(args)


if __name__ == "__main__":
    main()
