#!/usr/bin/env python3
"""Convert relational datasets to the pltf triple format.

The triple format is a header line "N T" followed by one "i j t v" line per
observed entry, with 0-based indices and v in {0, 1}.

Subcommands:
  kinship    Alyawarra kinship tensor (MATLAB file, 104x104x26, variable Rs)
  countries  Nations/Countries tensor (MATLAB file, 14x14x56, variable R);
             NaN cells are treated as unobserved
  youtube    edge list "user user relation" with string ids; keeps the most
             active users and writes every pair among them
  dense      any dense N x N x T array from .mat, .npy or .npz
"""

import argparse
import collections
import sys

import numpy as np


def load_array(path, variable=None):
    if path.endswith(".npy"):
        return np.load(path)
    if path.endswith(".npz"):
        data = np.load(path)
        return data[variable or data.files[0]]
    from scipy.io import loadmat

    data = loadmat(path)
    names = [k for k in data if not k.startswith("__")]
    if variable is None:
        if len(names) != 1:
            sys.exit(f"{path}: pick one of {', '.join(names)} with --variable")
        variable = names[0]
    if variable not in data:
        sys.exit(f"{path}: no variable {variable!r} (have {', '.join(names)})")
    return data[variable]


def dense_to_triples(array, axes="ijt", threshold=0.0, drop_self=False):
    """Yields (n, t) then (i, j, t, v) tuples. NaN marks a missing cell."""
    array = np.asarray(array, dtype=float)
    if array.ndim != 3 or sorted(axes) != ["i", "j", "t"]:
        sys.exit(f"expected a 3-d array and a permutation of 'ijt', got shape {array.shape} and {axes!r}")
    array = np.transpose(array, [axes.index(c) for c in "ijt"])
    n, n2, t = array.shape
    if n != n2:
        sys.exit(f"sender and receiver axes differ: {array.shape}")
    yield n, t
    for i, j, k in zip(*np.nonzero(~np.isnan(array))):
        if drop_self and i == j:
            continue
        yield int(i), int(j), int(k), int(array[i, j, k] > threshold)


def youtube_triples(lines, users=3000, relations=None, drop_self=True):
    edges = []
    for number, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 3:
            sys.exit(f"line {number}: expected 'user user relation'")
        edges.append(tuple(fields[:3]))
    names = relations or sorted({r for _, _, r in edges})
    rel_index = {r: k for k, r in enumerate(names)}
    activity = collections.Counter()
    for a, b, r in edges:
        if r in rel_index:
            activity[a] += 1
            activity[b] += 1
    kept = sorted(activity, key=lambda u: (-activity[u], u))[:users]
    index = {u: k for k, u in enumerate(sorted(kept))}
    n, t = len(index), len(names)
    links = np.zeros((n, n, t), dtype=np.uint8)
    for a, b, r in edges:
        if a in index and b in index and r in rel_index:
            links[index[a], index[b], rel_index[r]] = 1
    yield n, t
    for i in range(n):
        for j in range(n):
            if drop_self and i == j:
                continue
            for k in range(t):
                yield i, j, k, int(links[i, j, k])


def write(rows, out):
    rows = iter(rows)
    n, t = next(rows)
    out.write(f"{n} {t}\n")
    for i, j, k, v in rows:
        out.write(f"{i} {j} {k} {v}\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="layout", required=True)

    def dense_args(p, variable, axes):
        p.add_argument("input")
        p.add_argument("output")
        p.add_argument("--variable", default=variable)
        p.add_argument("--axes", default=axes, help="order of the sender/receiver/relation axes in the file")
        p.add_argument("--threshold", type=float, default=0.0, help="cells above this become 1")
        p.add_argument("--drop-self", action="store_true", help="skip i == j cells")

    dense_args(sub.add_parser("kinship"), "Rs", "ijt")
    dense_args(sub.add_parser("countries"), "R", "ijt")
    dense_args(sub.add_parser("dense"), None, "ijt")
    yt = sub.add_parser("youtube")
    yt.add_argument("input")
    yt.add_argument("output")
    yt.add_argument("--users", type=int, default=3000)
    yt.add_argument("--relations", help="comma-separated relation names, in tensor order")
    yt.add_argument("--keep-self", action="store_true")

    args = parser.parse_args(argv)
    if args.layout == "youtube":
        with open(args.input) as f:
            rows = youtube_triples(
                f,
                users=args.users,
                relations=args.relations.split(",") if args.relations else None,
                drop_self=not args.keep_self,
            )
            with open(args.output, "w") as out:
                write(rows, out)
        return
    array = load_array(args.input, args.variable)
    with open(args.output, "w") as out:
        write(dense_to_triples(array, args.axes, args.threshold, args.drop_self), out)


if __name__ == "__main__":
    main()
