"""Write a synthetic knowledge base in the text format read by ``nces --kb``.

Usage: python scripts/make_kb.py out.kb [--kind random|hierarchy] [--individuals 50] [--seed 1]
"""
import argparse

from nces.synthetic import hierarchy_kb, random_kb


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("path")
    ap.add_argument("--kind", choices=("random", "hierarchy"), default="random")
    ap.add_argument("--individuals", type=int, default=50)
    ap.add_argument("--classes", type=int, default=8, help="random KBs only")
    ap.add_argument("--roles", type=int, default=2)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    if args.kind == "random":
        kb = random_kb(args.individuals, args.classes, args.roles, seed=args.seed)
    else:
        kb = hierarchy_kb(args.individuals, n_roles=args.roles, seed=args.seed)
    with open(args.path, "w", encoding="utf-8") as fh:
        fh.write(kb.to_text())
    print(f"{args.path}: {len(kb.individuals)} individuals, {len(kb.classes)} classes, {len(kb.roles)} roles")


if __name__ == "__main__":
    main()
