"""Seeded synthetic molecule-like regression sets.

Molecules are random trees of C/N/O heavy atoms with a few ring closures;
hydrogens are implicit and fill each atom's valence. The default target

    y = alpha * rings + beta * mean_degree + noise

depends on connectivity, which the global features (heavy-atom mass and
heteroatom count) do not reveal. ``target="global"`` instead makes the
target an exact affine function of the global features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encode import Column, FeatureSchema, build_molecule_graph, element_masses, element_valence
from .featurize import cycle_rank
from .graph import GraphTensor, degrees

ELEMENTS = ("C", "N", "O")
ELEMENT_PROBS = (0.7, 0.15, 0.15)

NODE_SCHEMA = FeatureSchema((Column("element", "categorical", ELEMENTS),
                             Column("h_count", "categorical", (0, 1, 2, 3))))
EDGE_SCHEMA = FeatureSchema((Column("cyclic", "binary"),))
GLOBAL_SCHEMA = FeatureSchema((Column("heavy_mass", "continuous", unit="100 g/mol"),
                               Column("heteroatoms", "continuous", unit="10 atoms")))


@dataclass(frozen=True)
class SyntheticSet:
    graphs: tuple[GraphTensor, ...]
    targets: np.ndarray  # n x 1
    records: tuple[dict, ...]  # raw atoms/bonds per graph, for writing graph files

    def split(self, test_fraction: float = 0.2, seed: int = 0):
        """Seeded shuffle split into ((train graphs, y), (test graphs, y))."""
        n = len(self.graphs)
        order = np.random.default_rng(seed).permutation(n)
        n_test = int(round(n * test_fraction))
        test, train = order[:n_test], order[n_test:]
        pick = lambda idx: ([self.graphs[i] for i in idx], self.targets[idx])  # noqa: E731
        return pick(train), pick(test)


def random_molecule(rng: np.random.Generator, min_atoms: int = 6, max_atoms: int = 14,
                    max_rings: int = 3) -> tuple[list[dict], list[dict]]:
    """Atoms and single bonds for a random connected molecule-like graph."""
    valence = element_valence()
    n = int(rng.integers(min_atoms, max_atoms + 1))
    atoms = [{"element": str(rng.choice(ELEMENTS, p=ELEMENT_PROBS))} for _ in range(n)]
    atoms[0]["element"] = "C"
    deg = [0] * n
    adj = [set() for _ in range(n)]
    bonds = []

    def link(a, b):
        bonds.append({"src": a, "dst": b, "order": "single"})
        adj[a].add(b)
        adj[b].add(a)
        deg[a] += 1
        deg[b] += 1

    for i in range(1, n):
        free = [j for j in range(i) if deg[j] < valence[atoms[j]["element"]]]
        link(int(rng.choice(free)), i)

    def far_apart(a, b, min_hops=4):
        # ring closures only between atoms at least min_hops apart (rings of 5+)
        frontier, seen = {a}, {a}
        for _ in range(min_hops - 1):
            frontier = {w for v in frontier for w in adj[v]} - seen
            seen |= frontier
        return b not in seen

    target_rings = int(rng.integers(0, max_rings + 1))
    for _ in range(40):
        if len(bonds) - (n - 1) >= target_rings:
            break
        a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
        if (deg[a] < valence[atoms[a]["element"]] and deg[b] < valence[atoms[b]["element"]]
                and far_apart(a, b)):
            link(a, b)
    for i, a in enumerate(atoms):
        a["h_count"] = valence[a["element"]] - deg[i]
    return atoms, bonds


def global_record(atoms) -> dict:
    masses = element_masses()
    heavy = sum(masses[a["element"]] for a in atoms)
    hetero = sum(a["element"] != "C" for a in atoms)
    return {"heavy_mass": heavy / 100.0, "heteroatoms": hetero / 10.0}


def molecule_graph(atoms, bonds) -> GraphTensor:
    return build_molecule_graph(
        atoms, bonds,
        schema={"node": NODE_SCHEMA, "edge": EDGE_SCHEMA, "global": GLOBAL_SCHEMA},
        global_features=global_record(atoms))


def connectivity_target(g: GraphTensor, alpha: float = 1.0, beta: float = 2.0) -> float:
    return alpha * cycle_rank(g) + beta * float(degrees(g).mean())


def make_dataset(n: int = 200, seed: int = 0, *, target: str = "connectivity", alpha: float = 1.0,
                 beta: float = 2.0, noise: float = 0.05) -> SyntheticSet:
    """``n`` random molecules with a seeded target.

    ``target="connectivity"`` uses rings and mean degree; ``target="global"``
    uses ``3 * heavy_mass - 2 * heteroatoms + 0.5`` plus noise.
    """
    if target not in ("connectivity", "global"):
        raise ValueError(f"unknown target {target!r}")
    rng = np.random.default_rng(seed)
    graphs, ys, records = [], [], []
    for _ in range(n):
        atoms, bonds = random_molecule(rng)
        g = molecule_graph(atoms, bonds)
        if target == "connectivity":
            y = connectivity_target(g, alpha, beta)
        else:
            y = 3.0 * g.U[0, 0] - 2.0 * g.U[0, 1] + 0.5
        graphs.append(g)
        ys.append(y + noise * rng.standard_normal())
        records.append({"atoms": atoms, "bonds": bonds})
    return SyntheticSet(tuple(graphs), np.array(ys).reshape(-1, 1), tuple(records))
