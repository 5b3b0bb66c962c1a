"""Regular vine copulas: structure selection, fitting, density and simulation.

Variables are indexed ``0 .. d-1``. Tree ``t`` (0-based) of a structure holds
edges whose endpoints (``Edge.nodes``) are variables for ``t == 0`` and edge
indices of tree ``t - 1`` otherwise. An edge's pair copula takes
``(u_{j|D}, u_{k|D})`` for ``conditioned == (j, k)``; ``u_{j|D}`` is supplied
by the parent ``nodes[0]`` and ``u_{k|D}`` by ``nodes[1]``.

Structures are chosen greedily tree by tree (maximum spanning trees on
absolute Kendall's tau), optionally forcing one variable to be a leaf of
every tree so the vine restricted to the other variables is itself a vine.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import paircop
from .paircop import INDEPENDENCE, FitConfig, PairCopulaSpec
from .rng import make_rng

JSON_FORMAT = "retrovine.vine/1"
DEFAULT_TRUNCATION = 3


@dataclass(frozen=True)
class Edge:
    conditioned: tuple
    conditioning: frozenset
    nodes: tuple

    @property
    def complete(self):
        return frozenset(self.conditioned) | self.conditioning

    def label(self):
        j, k = (c + 1 for c in self.conditioned)
        if not self.conditioning:
            return f"{j},{k}"
        return f"{j},{k}|{','.join(str(c + 1) for c in sorted(self.conditioning))}"


@dataclass(frozen=True, eq=False)
class VineStructure:
    dimension: int
    trees: tuple

    @property
    def n_edges(self):
        return sum(len(t) for t in self.trees)

    def edges(self):
        for t, tree in enumerate(self.trees):
            for e, edge in enumerate(tree):
                yield t, e, edge

    def validate(self):
        """Raise ``ValueError`` unless the tree sequence is a regular vine."""
        d = self.dimension
        if d < 2:
            raise ValueError("a vine needs dimension >= 2")
        if len(self.trees) != d - 1:
            raise ValueError(f"expected {d - 1} trees, found {len(self.trees)}")
        for t, tree in enumerate(self.trees):
            n_nodes = d if t == 0 else len(self.trees[t - 1])
            if len(tree) != n_nodes - 1:
                raise ValueError(f"tree {t + 1} must have {n_nodes - 1} edges")
            if not _is_spanning_tree(n_nodes, [e.nodes for e in tree]):
                raise ValueError(f"tree {t + 1} is not a spanning tree of its nodes")
            for edge in tree:
                if t == 0:
                    if set(edge.conditioned) != set(edge.nodes) or edge.conditioning:
                        raise ValueError("first-tree edges join two variables")
                    continue
                p, q = (self.trees[t - 1][i] for i in edge.nodes)
                if len(set(p.nodes) & set(q.nodes)) != 1:
                    raise ValueError(f"proximity condition violated in tree {t + 1}")
                cp, cq = p.complete, q.complete
                j, k = edge.conditioned
                if (edge.conditioning != cp & cq or j not in cp - cq or k not in cq - cp):
                    raise ValueError(f"inconsistent sets on edge {edge.label()}")
        return self

    def is_valid(self):
        try:
            self.validate()
        except ValueError:
            return False
        return True

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "trees": [[{"conditioned": list(e.conditioned),
                        "conditioning": sorted(e.conditioning),
                        "nodes": list(e.nodes)} for e in tree] for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        trees = tuple(
            tuple(Edge(tuple(e["conditioned"]), frozenset(e["conditioning"]), tuple(e["nodes"]))
                  for e in tree)
            for tree in d["trees"])
        return cls(int(d["dimension"]), trees)


def _is_spanning_tree(n_nodes, pairs):
    parent = list(range(n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        if not (0 <= a < n_nodes and 0 <= b < n_nodes) or a == b:
            return False
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return len(pairs) == n_nodes - 1


def _make_edge(prev_tree, p, q):
    cp, cq = prev_tree[p].complete, prev_tree[q].complete
    (j,), (k,) = tuple(cp - cq), tuple(cq - cp)
    return Edge((j, k), frozenset(cp & cq), (p, q))


def _admissible_pairs(prev_tree):
    n = len(prev_tree)
    nodes = [set(e.nodes) for e in prev_tree]
    return [(p, q) for p in range(n) for q in range(p + 1, n) if len(nodes[p] & nodes[q]) == 1]


def max_spanning_tree(n_nodes, weights, leaf=None):
    """Prim's algorithm on ``weights`` ({(a, b): w} with a < b).

    Ties are broken towards the lexicographically smallest ``(a, b)``. When
    ``leaf`` is given it is attached last, by its heaviest edge, so it ends up
    with degree one.
    """
    core = [i for i in range(n_nodes) if i != leaf]
    if len(core) == 0:
        return []
    keyed = sorted(((-w, a, b) for (a, b), w in weights.items()))
    chosen = []
    in_tree = {core[0]}
    core_set = set(core)
    while len(in_tree) < len(core):
        for _, a, b in keyed:
            if a in core_set and b in core_set and ((a in in_tree) != (b in in_tree)):
                chosen.append((a, b))
                in_tree.update((a, b))
                break
        else:
            raise ValueError("admissible graph is disconnected")
    if leaf is not None and leaf < n_nodes:
        for _, a, b in keyed:
            if leaf in (a, b) and (b if a == leaf else a) in core_set:
                chosen.append((a, b))
                break
        else:
            raise ValueError("leaf node has no admissible neighbour")
    return chosen


@dataclass(frozen=True, eq=False)
class VineModel:
    """A vine structure with one pair copula per edge."""

    structure: VineStructure
    pair_copulas: tuple
    truncation_level: int
    preferred_last: int | None = None

    def __post_init__(self):
        s = self.structure
        if len(self.pair_copulas) != len(s.trees) or any(
                len(pc) != len(t) for pc, t in zip(self.pair_copulas, s.trees)):
            raise ValueError("one pair copula per edge is required")
        if not 1 <= self.truncation_level <= max(s.dimension - 1, 1):
            raise ValueError("truncation_level must lie in [1, d-1]")
        for t in range(self.truncation_level, len(s.trees)):
            if any(pc.family != "independence" for pc in self.pair_copulas[t]):
                raise ValueError("trees above the truncation level must be independence")

    @property
    def dimension(self):
        return self.structure.dimension

    @cached_property
    def _peeling(self):
        return _peel_order(self.structure, self.preferred_last)

    @property
    def order(self):
        """Sampling order: variable ``order[i]`` is drawn given ``order[:i]``."""
        return self._peeling[0]

    def chain(self, var):
        """Edge indices (one per tree) carrying ``var`` at its peeling step."""
        return self._peeling[1][var]

    def with_preferred_last(self, var):
        return replace(self, preferred_last=var)

    def n_fitted(self):
        return sum(pc.family != "independence" for tree in self.pair_copulas for pc in tree)

    def to_dict(self):
        trees = []
        for tree, pcs in zip(self.structure.trees, self.pair_copulas):
            trees.append([{"conditioned": list(e.conditioned),
                           "conditioning": sorted(e.conditioning),
                           "nodes": list(e.nodes),
                           "copula": pc.to_dict()} for e, pc in zip(tree, pcs)])
        d = {"format": JSON_FORMAT, "dimension": self.dimension,
             "truncation_level": self.truncation_level, "trees": trees}
        if self.preferred_last is not None:
            d["preferred_last"] = self.preferred_last
        return d

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != JSON_FORMAT:
            raise ValueError(f"not a {JSON_FORMAT} document")
        structure = VineStructure.from_dict(d)
        pcs = tuple(tuple(PairCopulaSpec.from_dict(e["copula"]) for e in tree) for tree in d["trees"])
        last = d.get("preferred_last")
        return cls(structure.validate(), pcs, int(d["truncation_level"]),
                   None if last is None else int(last))


def _peel_order(structure, prefer_last=None):
    d = structure.dimension
    trees = structure.trees
    alive = [set(range(len(t))) for t in trees]
    chains = {}
    peeled = []
    for k in range(d, 1, -1):
        (top,) = alive[k - 2]
        cands = list(trees[k - 2][top].conditioned)[::-1]
        if prefer_last in cands:
            cands.remove(prefer_last)
            cands.insert(0, prefer_last)
        for x in cands:
            chain = []
            for t in range(k - 1):
                hits = [e for e in alive[t] if x in trees[t][e].conditioned]
                if len(hits) != 1:
                    break
                chain.append(hits[0])
            else:
                break
        else:
            raise ValueError("structure admits no sampling order")
        for t, e in enumerate(chain):
            alive[t].remove(e)
        chains[x] = tuple(chain)
        peeled.append(x)
    (first,) = set(range(d)) - set(peeled)
    chains[first] = ()
    return tuple([first] + peeled[::-1]), chains


# --------------------------------------------------------------------------
# evaluation


class _Cascade:
    """Lazily computed conditional pseudo-observations for a data matrix."""

    def __init__(self, model, U):
        self.model = model
        self.U = U
        self.out = [[None] * len(tree) for tree in model.structure.trees]

    def arg(self, t, e, side):
        edge = self.model.structure.trees[t][e]
        var = edge.conditioned[side]
        if t == 0:
            return self.U[..., var]
        parent = edge.nodes[side]
        return self.outputs(t - 1, parent)[var]

    def outputs(self, t, e):
        cached = self.out[t][e]
        if cached is None:
            cached = self.compute(t, e)
        return cached

    def compute(self, t, e):
        edge = self.model.structure.trees[t][e]
        spec = self.model.pair_copulas[t][e]
        a, b = self.arg(t, e, 0), self.arg(t, e, 1)
        j, k = edge.conditioned
        if spec.family == "independence":
            res = {j: a, k: b}
        else:
            res = {j: paircop.hfunc(spec, a, b, "1|2"), k: paircop.hfunc(spec, a, b, "2|1")}
        self.out[t][e] = res
        return res


def _as_matrix(model, U):
    U = np.asarray(U, dtype=np.float64)
    single = U.ndim == 1
    U = np.atleast_2d(U)
    if U.shape[-1] != model.dimension:
        raise ValueError(f"expected {model.dimension} columns, got {U.shape[-1]}")
    if np.any(~(U > 0.0) | ~(U < 1.0)):
        raise ValueError("vine arguments must lie strictly inside (0, 1)")
    return U, single


def vine_logpdf(model, U):
    """Log copula density at each row of ``U``."""
    U, single = _as_matrix(model, U)
    cas = _Cascade(model, U)
    total = np.zeros(U.shape[0])
    for t in range(model.truncation_level):
        for e, spec in enumerate(model.pair_copulas[t]):
            if spec.family == "independence":
                continue
            total += paircop.pair_logpdf(spec, cas.arg(t, e, 0), cas.arg(t, e, 1))
    return float(total[0]) if single else total


def vine_pdf(model, U):
    """Copula density at each row of ``U``."""
    lp = vine_logpdf(model, U)
    return float(np.exp(lp)) if np.ndim(lp) == 0 else np.exp(lp)


def rosenblatt(model, U):
    """Map model-distributed points to independent uniforms."""
    U, single = _as_matrix(model, U)
    cas = _Cascade(model, U)
    W = np.empty_like(U)
    for x in model.order:
        chain = model.chain(x)
        if not chain:
            W[:, x] = U[:, x]
            continue
        t = len(chain) - 1
        W[:, x] = cas.outputs(t, chain[t])[x]
    return W[0] if single else W


def inverse_rosenblatt(model, W):
    """Inverse of :func:`rosenblatt`; simulates the model from uniform noise."""
    W, single = _as_matrix(model, W)
    U = np.empty_like(W)
    cas = _Cascade(model, U)
    trees = model.structure.trees
    for x in model.order:
        chain = model.chain(x)
        v = W[:, x]
        for t in range(len(chain) - 1, -1, -1):
            e = chain[t]
            spec = model.pair_copulas[t][e]
            if spec.family == "independence":
                continue
            side = 0 if trees[t][e].conditioned[0] == x else 1
            partner = cas.arg(t, e, 1 - side)
            v = paircop.hinv(spec, v, partner, "1|2" if side == 0 else "2|1")
        U[:, x] = v
        for t, e in enumerate(chain):
            cas.compute(t, e)
    return U[0] if single else U


def sample_vine(model, n, seed):
    """Draw ``n`` rows from the vine (deterministic given ``seed``)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    W = rng.uniform(paircop.EPS, 1.0 - paircop.EPS, size=(n, model.dimension))
    return inverse_rosenblatt(model, W)


def conditional_logpdf_last(model, var, U_rest, grid):
    """Log conditional density of ``var`` given the other coordinates.

    ``U_rest`` is (L, d) (column ``var`` ignored) and ``grid`` holds N values
    of ``var``; returns (L, N). Requires ``var`` to be last in the sampling
    order, so the product of the edges in its chain is exactly
    ``c(u) / c_rest(u_rest)``.
    """
    if model.order[-1] != var:
        raise ValueError("variable is not last in the sampling order")
    U_rest = np.array(U_rest, dtype=np.float64, ndmin=2)
    U_rest[:, var] = 0.5
    U_rest, _ = _as_matrix(model, U_rest)
    grid = np.asarray(grid, dtype=np.float64)
    cas = _Cascade(model, U_rest)
    trees = model.structure.trees
    v = np.broadcast_to(grid[None, :], (U_rest.shape[0], grid.size))
    total = np.zeros(v.shape)
    for t, e in enumerate(model.chain(var)):
        if t >= model.truncation_level:
            break
        spec = model.pair_copulas[t][e]
        if spec.family == "independence":
            continue
        side = 0 if trees[t][e].conditioned[0] == var else 1
        partner = cas.arg(t, e, 1 - side)[:, None]
        a, b = (v, partner) if side == 0 else (partner, v)
        total = total + paircop.pair_logpdf(spec, a, b)
        v = paircop.hfunc(spec, a, b, "1|2" if side == 0 else "2|1")
    return total


def conditional_logpdf_integrated(model, var, U_rest, grid, n_points=64):
    """Same as :func:`conditional_logpdf_last` for any structure.

    The normalising density of the remaining coordinates is obtained by a
    ``n_points`` midpoint rule over ``var``.
    """
    U_rest = np.array(U_rest, dtype=np.float64, ndmin=2)
    grid = np.asarray(grid, dtype=np.float64)
    L, N = U_rest.shape[0], grid.size
    mids = (np.arange(n_points) + 0.5) / n_points

    def joint(values):
        rows = np.repeat(U_rest, values.size, axis=0)
        rows[:, var] = np.tile(values, L)
        return vine_logpdf(model, rows).reshape(L, values.size)

    num = joint(grid)
    den = joint(mids)
    m = den.max(axis=1, keepdims=True)
    log_norm = m[:, 0] + np.log(np.mean(np.exp(den - m), axis=1))
    return num - log_norm[:, None]


# --------------------------------------------------------------------------
# fitting


def _map(fn, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def fit_vine(U, config=None, truncation_level=DEFAULT_TRUNCATION, leaf=None, threads=1):
    """Select a structure and fit all pair copulas, tree by tree.

    Parameters
    ----------
    U : array of shape (N, d)
        Pseudo-observations.
    config : FitConfig, optional
        Pair-copula options shared by every edge.
    truncation_level : int or None
        Trees above this level get independence copulas (``None`` keeps all
        ``d - 1`` trees). Values above ``d - 1`` are capped.
    leaf : int, optional
        Variable forced to be a leaf of every tree. It then comes last in the
        sampling order.
    threads : int
        Worker threads for the per-edge fits within a tree.
    """
    config = config or FitConfig()
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2:
        raise ValueError("U must be an N x d matrix")
    n, d = U.shape
    if d < 2:
        raise ValueError("a vine needs d >= 2")
    if n < 20:
        raise ValueError("fit_vine needs at least 20 observations")
    if np.any(~(U > 0.0) | ~(U < 1.0)):
        raise ValueError("pseudo-observations must lie strictly inside (0, 1)")
    for j in range(d):
        if np.all(U[:, j] == U[0, j]):
            raise ValueError(f"column {j} is constant")
    trunc = d - 1 if truncation_level is None else int(truncation_level)
    if trunc < 1:
        raise ValueError("truncation_level must be >= 1")
    trunc = min(trunc, d - 1)

    trees, pcs = [], []
    outputs = None
    for t in range(d - 1):
        fitted = t < trunc
        if t == 0:
            candidates = [(a, b) for a in range(d) for b in range(a + 1, d)]
            proto = {c: Edge(c, frozenset(), c) for c in candidates}
            n_nodes, leaf_node = d, leaf
        else:
            prev = trees[-1]
            candidates = _admissible_pairs(prev)
            proto = {c: _make_edge(prev, *c) for c in candidates}
            n_nodes = len(prev)
            leaf_node = None
            if leaf is not None:
                (leaf_node,) = [i for i, e in enumerate(prev) if leaf in e.complete]

        def edge_args(edge, t=t, outputs=outputs):
            j, k = edge.conditioned
            if t == 0:
                return U[:, j], U[:, k]
            p, q = edge.nodes
            return outputs[p][j], outputs[q][k]

        if fitted:
            def weight(c):
                a, b = edge_args(proto[c])
                return abs(paircop.kendall_tau(a, b))
            weights = dict(zip(candidates, _map(weight, candidates, threads)))
        else:
            weights = dict.fromkeys(candidates, 0.0)
        chosen = sorted(max_spanning_tree(n_nodes, weights, leaf_node))
        tree = tuple(proto[c] for c in chosen)

        if fitted:
            def fit_one(edge):
                a, b = edge_args(edge)
                return paircop.fit_pair(a, b, config)
            specs = tuple(_map(fit_one, tree, threads))
        else:
            specs = (INDEPENDENCE,) * len(tree)

        new_outputs = []
        for edge, spec in zip(tree, specs):
            a, b = edge_args(edge)
            j, k = edge.conditioned
            if spec.family == "independence":
                new_outputs.append({j: a, k: b})
            else:
                new_outputs.append({j: paircop.hfunc(spec, a, b, "1|2"),
                                    k: paircop.hfunc(spec, a, b, "2|1")})
        trees.append(tree)
        pcs.append(specs)
        outputs = new_outputs

    structure = VineStructure(d, tuple(trees)).validate()
    return VineModel(structure, tuple(pcs), trunc, leaf)


def select_structure(U, config=None, truncation_level=None, leaf=None):
    """Greedy maximum-spanning-tree structure (untruncated by default)."""
    return fit_vine(U, config, truncation_level, leaf).structure
