"""Factor a four-state adjustment variable into two binary ones.

Z -> X, Z -> Y, X -> Y with Z four-valued is rewritten as a diagram in
which Z is replaced by a binary U and a binary W (U -> W, both pointing
into X and Y). Prints the CPTs of the new diagram and the causal effect
on both sides.

    python demos/equivalent_tuple.py [--p 2] [--order u_major]
"""
import argparse

from causalbounds.fixtures import fourstate_example
from causalbounds.reduce import equivalent_cpts, make_equivalent_tuple, verify_equivalence


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=2, help="states of W")
    ap.add_argument("--order", choices=("w_major", "u_major"), default="u_major")
    args = ap.parse_args(argv)

    G, cpts = fourstate_example()
    tup = make_equivalent_tuple(G, cpts, "Z", args.p, order=args.order)
    mp = tup.mapping
    print(f"Z ({mp.m} states) -> W ({mp.p}) x U ({mp.q}), {mp.order}")
    for j in range(mp.p):
        for k in range(mp.q):
            z = mp.z_index(j, k)
            label = f"z{z}" if z < mp.m else "virtual"
            print(f"  (w{j}, u{k}) <-> {label}")
    print(f"edges: {', '.join(f'{a}->{b}' for a, b in tup.g_prime.edges)}")
    for c in equivalent_cpts(tup):
        given = f" | {', '.join(c.parent_names)}" if c.parent_names else ""
        print(f"P({c.child}{given}):")
        rows = c.table.reshape(-1, c.table.shape[-1])
        for r in rows:
            print("   " + "  ".join(f"{v:.4f}" for v in r))
    rep = verify_equivalence(G, cpts, tup, 0, 0)
    print(f"P(y | do(x)): original {rep.effect_original:.12g}, transformed {rep.effect_equivalent:.12g}")


if __name__ == "__main__":
    main()
