"""Writes the bundled DiscreteJoint corpus to data/oracle/."""
import itertools
import json
import os
import random

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "oracle")


def product(marginals):
    prob = []
    for combo in itertools.product(*[range(len(m)) for m in marginals]):
        p = 1.0
        for k, i in enumerate(combo):
            p *= marginals[k][i]
        prob.append(p)
    return prob


def dense(support, atoms):
    """atoms: {(i, j, ...): p} on index tuples."""
    shape = [len(s) for s in support]
    prob = []
    for combo in itertools.product(*[range(n) for n in shape]):
        prob.append(atoms.get(combo, 0.0))
    return prob


def markov(p1, trans):
    """Binary chain: p1 = P(Y1 = 1); trans[k] = (P(1 | 0), P(1 | 1)) for step k+1."""
    atoms = {}
    h = len(trans) + 1
    for combo in itertools.product([0, 1], repeat=h):
        p = p1 if combo[0] else 1 - p1
        for k in range(1, h):
            q = trans[k - 1][combo[k - 1]]
            p *= q if combo[k] else 1 - q
        atoms[combo] = p
    return atoms


def write(name, support, prob, description, twins=()):
    doc = {"version": 1, "name": name, "description": description, "marginal_twins": list(twins),
           "support": support, "prob": prob}
    with open(os.path.join(OUT, name + ".json"), "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    b = [[0.0, 1.0], [0.0, 1.0]]
    write("bern2_independent", b, [0.25, 0.25, 0.25, 0.25], "independent fair coins", ["bern2_diagonal", "bern2_antidiagonal"])
    write("bern2_diagonal", b, [0.5, 0.0, 0.0, 0.5], "perfectly dependent fair coins", ["bern2_independent"])
    write("bern2_antidiagonal", b, [0.0, 0.5, 0.5, 0.0], "perfectly anti-dependent fair coins", ["bern2_independent"])

    b3 = [[0.0, 1.0]] * 3
    write("bern3_independent", b3, product([[0.7, 0.3], [0.5, 0.5], [0.3, 0.7]]),
          "independent coins with P(1) = 0.3, 0.5, 0.7", ["bern3_markov"])
    # Same marginals as bern3_independent: 0.7 a + 0.3 * 0.9 = 0.5 and 0.5 c + 0.5 * 0.95 = 0.7.
    chain = markov(0.3, [(0.23 / 0.7, 0.9), (0.45, 0.95)])
    write("bern3_markov", b3, dense(b3, chain), "persistent binary chain with the marginals of bern3_independent",
          ["bern3_independent"])

    v = [-2.0, -1.0, 0.0, 1.0, 2.0]
    p = [0.1, 0.2, 0.4, 0.2, 0.1]
    s2 = [v, v]
    write("five_independent", s2, product([p, p]), "independent symmetric five-point steps",
          ["five_comonotonic", "five_countermonotonic"])
    write("five_comonotonic", s2, dense(s2, {(i, i): p[i] for i in range(5)}), "comonotonic five-point steps",
          ["five_independent"])
    write("five_countermonotonic", s2, dense(s2, {(i, 4 - i): p[i] for i in range(5)}),
          "countermonotonic five-point steps", ["five_independent"])

    rng = random.Random(20240601)
    s = [[-1.5, 0.25, 2.0], [-3.0, -0.5, 0.75, 1.25], [0.0, 3.5]]
    w = [rng.random() for _ in range(3 * 4 * 2)]
    write("mixed_random", s, [x / sum(w) for x in w], "random joint on uneven supports")

    s = [[-3.0, -1.0, 0.0, 0.5, 4.0]] * 3
    w = [rng.random() ** 3 if rng.random() < 0.6 else 0.0 for _ in range(125)]
    write("sparse_random", s, [x / sum(w) for x in w], "sparse random joint with many zero atoms")

    s = [[-0.5, 1.5], [-0.5, 1.5]]
    write("point_mass", s, [0.0, 0.0, 1.0, 0.0], "all mass on the path (1.5, -0.5)")

    write("single_step", [[-2.0, -0.5, 0.0, 1.0, 3.0]], [0.15, 0.25, 0.2, 0.3, 0.1], "horizon one")


if __name__ == "__main__":
    main()
