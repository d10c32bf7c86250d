#!/usr/bin/env python3
"""Build a Countries-S1 style link prediction dataset from world-countries data.

Entities are countries, subregions and regions. Relations are ``locatedIn``
and ``neighborOf``. Held-out countries (24 validation, 24 test) lose their
direct ``locatedIn(country, region)`` edge from training; that edge becomes
the evaluation triple. Their subregion and neighbour edges stay in training,
so the region is recoverable by a two-hop pattern.

Usage: make_countries_s1.py <world-countries-min.json> <out_dir> [--seed N]
"""

import argparse
import json
import os
import random
import re


def slug(name: str) -> str:
    s = re.sub(r"[^0-9a-zA-Z]+", "_", name.strip().lower())
    return s.strip("_")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("source")
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--held-out", type=int, default=24)
    args = ap.parse_args()

    with open(args.source, encoding="utf-8") as f:
        rows = json.load(f)
    rows = [r for r in rows if r["region"] and r["subregion"] and r["region"] != "Antarctic"]
    by_code = {r["cca3"]: r for r in rows}

    # Countries whose name equals a (sub)region name get a suffix.
    area_names = {slug(r["subregion"]) for r in rows} | {slug(r["region"]) for r in rows}

    def country(r):
        c = slug(r["name"])
        return c + "_country" if c in area_names else c

    located, neighbor = [], []
    subregion_region = {}
    for r in rows:
        c = country(r)
        sub = slug(r["subregion"])
        reg = slug(r["region"])
        located.append((c, "locatedIn", sub))
        located.append((c, "locatedIn", reg))
        subregion_region[sub] = reg
        for b in r["borders"]:
            if b in by_code:
                neighbor.append((c, "neighborOf", country(by_code[b])))
    for sub, reg in sorted(subregion_region.items()):
        located.append((sub, "locatedIn", reg))

    candidates = sorted(country(r) for r in rows if any(b in by_code for b in r["borders"]))
    rng = random.Random(args.seed)
    rng.shuffle(candidates)
    valid_c = set(candidates[: args.held_out])
    test_c = set(candidates[args.held_out : 2 * args.held_out])

    regions = set(subregion_region.values())
    train, valid, test = [], [], []
    for tr in located:
        h, _, t = tr
        if t in regions and h in valid_c:
            valid.append(tr)
        elif t in regions and h in test_c:
            test.append(tr)
        else:
            train.append(tr)
    train.extend(neighbor)

    os.makedirs(args.out_dir, exist_ok=True)
    for name, split in (("train", train), ("valid", valid), ("test", test)):
        with open(os.path.join(args.out_dir, f"{name}.txt"), "w", encoding="utf-8") as f:
            for h, r, t in split:
                f.write(f"{h}\t{r}\t{t}\n")

    ents = {h for h, _, _ in train + valid + test} | {t for _, _, t in train + valid + test}
    print(f"entities={len(ents)} train={len(train)} valid={len(valid)} test={len(test)}")


if __name__ == "__main__":
    main()
