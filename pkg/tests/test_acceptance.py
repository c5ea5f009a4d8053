"""Acceptance criteria 1-9, one test each; a PASS/FAIL line per criterion is
printed in the terminal summary (and immediately with ``-s``)."""

import ast
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import conftest
from chemgraph import io
from chemgraph.cli import run_benchmark
from chemgraph.featurize import (SubgraphPattern, count_substructure, cycle_rank, default_patterns, fingerprint,
                                 graph_statistics, simple_cycles)
from chemgraph.gnn import (GraphBatch, graphnets_layer, init_graphnets_layer, init_graphnets_model,
                           loss_and_gradients, gnn_forward, predict)
from chemgraph.graph import Connectivity, GraphTensor, adjacency_matrix, contact_adjacency, permute_nodes
from chemgraph.baselines import gp_fit, gp_predict, linreg_fit
from chemgraph.nn import init_mlp, mlp_forward, mlp_gradients, mse_loss
from oracles import brute_force_count, central_difference, gp_two_point, max_relative_error
from strategies import random_graph


@contextmanager
def criterion(number: int, title: str):
    """Record PASS only if the block finishes without an assertion or error."""
    notes: list[str] = []
    status = "FAIL"
    try:
        yield notes
        status = "PASS"
    finally:
        line = f"criterion {number} {status}: {title}" + (f" ({'; '.join(notes)})" if notes else "")
        conftest.ACCEPTANCE_LINES[number] = line
        print(line)


def perturb(model, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    return model.with_arrays([a + scale * rng.normal(size=a.shape) for a in model.arrays()])


def test_criterion_1_fixture_dimensions(load_fixture):
    with criterion(1, "fixture dimension suite") as notes:
        start = time.perf_counter()
        g6p = load_fixture("g6p")
        g6p_h = load_fixture("g6p", explicit_hydrogens=True)
        cov = load_fixture("1l2y", hydrogen_bonds=False)
        hb = load_fixture("1l2y")
        gly17, gly11 = load_fixture("glycolysis17"), load_fixture("glycolysis11")
        teq8, teq10 = load_fixture("tequila8"), load_fixture("tequila10")
        methane = load_fixture("methane")
        observed = {
            "g6p": (g6p.X.shape, g6p.E.shape, adjacency_matrix(g6p).shape),
            "g6p-H": (g6p_h.X.shape, g6p_h.E.shape),
            "1l2y": (cov.X.shape, cov.E.shape),
            "1l2y-hb": (hb.X.shape, hb.E.shape),
            "glycolysis": ((gly17.num_nodes, gly17.num_edges), (gly11.num_nodes, gly11.num_edges, gly11.directed)),
            "tequila": ((teq8.num_nodes, teq8.num_edges), (teq10.num_nodes, teq10.num_edges)),
            "methane": (methane.X.shape, methane.E.shape, methane.U.shape),
        }
        elapsed = time.perf_counter() - start
        expected = {
            "g6p": ((16, 6), (16, 3), (16, 16)),
            "g6p-H": ((29, 4), (29, 3)),
            "1l2y": ((20, 13), (19, 1)),
            "1l2y-hb": ((20, 13), (32, 3)),
            "glycolysis": ((17, 16), (11, 19, True)),
            "tequila": ((8, 10), (10, 18)),
            "methane": ((5, 3), (4, 2), (1, 1)),
        }
        notes.append(f"{elapsed:.3f} s")
        assert observed == expected
        assert elapsed < 1.0


def test_criterion_2_methane_trace(load_fixture):
    with criterion(2, "methane message-passing shape trace"):
        g = load_fixture("methane")
        p = init_graphnets_layer(3, 2, 1, out=(3, 2, 1), hidden=(), activation="identity", rng=0)
        assert p.edge_mlp.in_width == 2 + 3 + 3 + 1 == 9
        out = graphnets_layer(g, p)
        assert out.E.shape == (4, 2) and out.E[:1].shape == (1, 2)
        carbon = int(np.argmax(g.X[:, 0]))
        carbon_in = np.concatenate([out.E.sum(axis=0, keepdims=True), g.X[carbon:carbon + 1], g.U], axis=1)
        assert carbon_in.shape == (1, 6) and p.node_mlp.in_width == 6
        assert out.X.shape == (5, 3) and out.X[carbon:carbon + 1].shape == (1, 3)
        assert np.allclose(mlp_forward(carbon_in, p.node_mlp), out.X[carbon:carbon + 1], rtol=0, atol=1e-12)
        global_in = np.concatenate([out.X.sum(axis=0, keepdims=True), out.E.sum(axis=0, keepdims=True), g.U], axis=1)
        assert global_in.shape == (1, 6) and p.global_mlp.in_width == 6
        assert out.U.shape == (1, 1)


def test_criterion_3_permutations():
    with criterion(3, "permutation suite, 200 random graphs") as notes:
        rng = np.random.default_rng(2024)
        global_model = perturb(init_graphnets_model(2, 2, 1, layer_widths=[(4, 3, 2)] * 2, seed=1), 1)
        node_model = perturb(init_graphnets_model(2, 2, 1, layer_widths=[(4, 3, 2)] * 2, task="node", seed=2), 2)
        pats = default_patterns()
        worst = 0.0
        for i in range(200):
            g = random_graph(rng, max_nodes=9, p=float(rng.uniform(0.1, 0.8)), directed=bool(i % 3 == 0))
            perm = rng.permutation(g.num_nodes)
            h = permute_nodes(g, perm)
            worst = max(worst, float(np.max(np.abs(predict(global_model, g) - predict(global_model, h)))))
            assert np.array_equal(predict(node_model, g)[perm], predict(node_model, h))
            assert np.array_equal(fingerprint(g, pats, 32).values, fingerprint(h, pats, 32).values)
            assert np.array_equal(graph_statistics(g).values, graph_statistics(h).values)
            assert cycle_rank(g) == cycle_rank(h) and len(simple_cycles(g)) == len(simple_cycles(h))
        notes.append(f"max global deviation {worst:.1e}")
        assert worst <= 1e-9


def test_criterion_4_gradients():
    with criterion(4, "gradient suite vs central differences") as notes:
        start = time.perf_counter()
        worst_mlp = worst_gnn = 0.0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            act = ("relu", "tanh", "identity")[seed % 3]
            widths = [int(rng.integers(1, 5)) for _ in range(int(rng.integers(2, 5)))]
            p = perturb(init_mlp(widths, act, rng), seed, 0.1)
            x = rng.normal(size=(int(rng.integers(1, 6)), widths[0]))
            y = rng.normal(size=(x.shape[0], widths[-1]))
            num = central_difference(lambda v: mse_loss(mlp_forward(x, p.from_vector(v)), y), p.to_vector())
            worst_mlp = max(worst_mlp, max_relative_error(mlp_gradients(x, y, p).to_vector(), num))

            g = random_graph(rng, max_nodes=5, p=0.6, directed=bool(seed % 4 == 0))
            task = ("global", "node")[seed % 2]
            model = perturb(init_graphnets_model(2, 2, 1, layer_widths=[(3, 2, 2)], hidden=(4,), head_hidden=(3,),
                                                 activation=("tanh", "relu")[seed % 2],
                                                 aggregator=("sum", "mean")[seed % 2], task=task, seed=seed), seed)
            b = GraphBatch([g])
            t = rng.normal(size=(1 if task == "global" else g.num_nodes, 1))
            _, grads = loss_and_gradients(model, b, t)
            num = central_difference(lambda v: mse_loss(gnn_forward(model.from_vector(v), b)[0], t),
                                     model.to_vector())
            worst_gnn = max(worst_gnn, max_relative_error(grads.to_vector(), num))
        elapsed = time.perf_counter() - start
        notes.append(f"MLP {worst_mlp:.1e}, GraphNets {worst_gnn:.1e}, {elapsed:.1f} s")
        assert worst_mlp <= 1e-4 and worst_gnn <= 1e-4
        assert elapsed < 30.0


def test_criterion_5_oracles():
    with criterion(5, "oracle equivalence") as notes:
        pool = [SubgraphPattern.path(2), SubgraphPattern.path(3), SubgraphPattern.path(["C", "O", "C"]),
                SubgraphPattern.path(4), SubgraphPattern.cycle(3), SubgraphPattern.cycle(4), SubgraphPattern.cycle(5),
                SubgraphPattern((None,) * 4, ((0, 1), (0, 2), (0, 3)), "motif"),
                SubgraphPattern.cycle(["C", "C", "O", "C", "N"])]
        rng = np.random.default_rng(5)
        for i in range(500):
            g = random_graph(rng, max_nodes=8, p=float(rng.uniform(0.2, 0.7)))
            pat = pool[i % len(pool)]
            assert count_substructure(g, pat) == brute_force_count(g, pat)
        gp_err = 0.0
        for _ in range(100):
            x1, x2, y1, y2, xs = rng.normal(size=5)
            ell, sf2, sn2 = rng.uniform(0.3, 2), rng.uniform(0.5, 2), rng.uniform(1e-3, 0.5)
            mean, var = gp_predict(gp_fit([[x1], [x2]], [y1, y2], ell, sf2, sn2), [[xs]])
            em, ev = gp_two_point(x1, x2, y1, y2, xs, ell, sf2, sn2)
            gp_err = max(gp_err, abs(mean[0, 0] - em), abs(var[0, 0] - ev))
        lin_err = 0.0
        for _ in range(100):
            n, d = int(rng.integers(5, 30)), int(rng.integers(1, 5))
            X, y = rng.normal(size=(n, d)), rng.normal(size=n)
            A = np.hstack([X, np.ones((n, 1))])
            beta = np.linalg.inv(A.T @ A) @ A.T @ y
            m = linreg_fit(X, y)
            lin_err = max(lin_err, float(np.max(np.abs(np.append(m.weights.ravel(), m.bias) - beta))))
        notes.append(f"500 matching cases, GP {gp_err:.1e}, linreg {lin_err:.1e}")
        assert gp_err <= 1e-10 and lin_err <= 1e-9


def path(values):
    n = len(values)
    return GraphTensor(np.asarray(values, dtype=float).reshape(n, 1), np.ones((n - 1, 1)), np.zeros((1, 0)),
                       Connectivity(tuple((i, i + 1) for i in range(n - 1)), n))


def test_criterion_6_locality():
    with criterion(6, "k-hop locality with zero-width globals, k = 1, 2, 3"):
        rng = np.random.default_rng(6)
        for k in (1, 2, 3):
            for trial in range(5):
                n = k + 4
                model = perturb(init_graphnets_model(1, 1, 0, layer_widths=[(3, 2, 0)] * k, task="node",
                                                     seed=10 * k + trial), trial)
                base = rng.normal(size=n)
                edited = base.copy()
                edited[-1] += 1.0 + rng.random()
                a, b = predict(model, path(base)), predict(model, path(edited))
                far = n - 1 - k  # nodes 0 .. far-1 are more than k hops from the edit
                assert np.array_equal(a[:far], b[:far])


def test_criterion_7_benchmark():
    with criterion(7, "GNN beats MLP on the connectivity target; linreg inverts a feature-linear target") as notes:
        start = time.perf_counter()
        rows = {r["model"]: r for r in run_benchmark(seed=7, n=200)}
        elapsed = time.perf_counter() - start
        sanity = {r["model"]: r for r in run_benchmark(seed=7, n=200, target="global", gnn_epochs=1, mlp_epochs=1)}
        gnn, mlp = rows["gnn"], rows["mlp"]
        notes.append(f"GNN mse {gnn['mse']:.3f} r2 {gnn['r2']:.3f}; MLP mse {mlp['mse']:.3f} r2 {mlp['r2']:.3f}; "
                     f"linreg r2 {sanity['linreg']['r2']:.4f}; {elapsed:.1f} s")
        assert gnn["mse"] < mlp["mse"] and gnn["r2"] > mlp["r2"]
        assert sanity["linreg"]["r2"] >= 0.99
        assert elapsed < 120.0


def test_criterion_8_contact_monotonicity(fixture_dir):
    with criterion(8, "contact-map monotonicity on 1L2Y") as notes:
        pos = io.load_document(fixture_dir / "1l2y.json")["positions"]
        a5, a10 = contact_adjacency(pos, 5.0), contact_adjacency(pos, 10.0)
        notes.append(f"{int(a5.sum()) // 2} contacts at 5 A, {int(a10.sum()) // 2} at 10 A")
        assert a10.sum() >= a5.sum()
        assert np.all(a10[a5 == 1] == 1)


def _metric_literals(path: Path) -> set[float]:
    """Numeric literals compared against anything named like an R^2 or MSE."""
    tree = ast.parse(path.read_text())
    found = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Compare):
            sides = [node.left, *node.comparators]
            text = " ".join(ast.unparse(s) for s in sides).lower()
            if "r2" in text or "mse" in text:
                found |= {s.value for s in sides if isinstance(s, ast.Constant) and isinstance(s.value, float)}
    return found


def test_criterion_9_no_published_metrics():
    with criterion(9, "only ordering properties are asserted on R^2/MSE") as notes:
        here = Path(__file__)
        sources = [here, Path(io.__file__).with_name("cli.py")]
        literals = set().union(*(_metric_literals(p) for p in sources))
        notes.append(f"metric thresholds in use: {sorted(literals)}")
        # 0.99 is the linear-target sanity floor; 120.0 and the like are runtimes, not metrics
        assert literals <= {0.99}


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
