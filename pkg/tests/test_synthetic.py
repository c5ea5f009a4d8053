import numpy as np

from chemgraph.featurize import cycle_rank
from chemgraph.graph import degrees
from chemgraph.synthetic import connectivity_target, make_dataset, random_molecule


def test_dataset_is_seeded():
    a, b = make_dataset(15, seed=4), make_dataset(15, seed=4)
    assert np.array_equal(a.targets, b.targets)
    assert all(np.array_equal(g.X, h.X) for g, h in zip(a.graphs, b.graphs))
    assert not np.array_equal(a.targets, make_dataset(15, seed=5).targets)


def test_molecules_respect_valence():
    rng = np.random.default_rng(0)
    valence = {"C": 4, "N": 3, "O": 2}
    for _ in range(50):
        atoms, bonds = random_molecule(rng)
        deg = np.zeros(len(atoms), dtype=int)
        for b in bonds:
            deg[b["src"]] += 1
            deg[b["dst"]] += 1
        assert all(deg[i] + a["h_count"] == valence[a["element"]] for i, a in enumerate(atoms))


def test_targets():
    ds = make_dataset(20, seed=1, noise=0.0)
    for g, y in zip(ds.graphs, ds.targets[:, 0]):
        assert y == cycle_rank(g) + 2.0 * degrees(g).mean() == connectivity_target(g)
    lin = make_dataset(20, seed=1, target="global", noise=0.0)
    U = np.concatenate([g.U for g in lin.graphs])
    assert np.allclose(lin.targets[:, 0], 3 * U[:, 0] - 2 * U[:, 1] + 0.5)


def test_split_partitions():
    ds = make_dataset(50, seed=0)
    (tr, ytr), (te, yte) = ds.split(0.2, seed=0)
    assert len(tr) == 40 and len(te) == 10 and ytr.shape == (40, 1)
    ids = {id(g) for g in tr} | {id(g) for g in te}
    assert len(ids) == 50
