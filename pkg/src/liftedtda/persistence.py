"""Rips and DTM filtrations, Z/2 persistent homology and barcodes."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import _flag
from .errors import CapacityError, FiltrationError, ValidationError
from .geometry import as_point_cloud

MAX_SIMPLICES = 5_000_000
MAX_FLAG_VERTICES = 8000


@dataclass(frozen=True, order=True)
class Simplex:
    vertices: tuple
    value: float

    def __post_init__(self):
        v = tuple(int(x) for x in self.vertices)
        if len(v) == 0 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValidationError(f"simplex vertices must be non-empty and strictly increasing: {v}")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "value", float(self.value))

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def faces(self):
        if self.dim == 0:
            return []
        return [self.vertices[:i] + self.vertices[i + 1:] for i in range(len(self.vertices))]


def _sort_key(s: Simplex):
    return (s.value, s.dim, s.vertices)


class Filtration:
    """Explicit simplicial filtration sorted by (value, dimension, vertices).

    Construction checks that every face is present and enters no later
    than its cofaces.
    """

    def __init__(self, simplices, max_dim: int | None = None):
        simp = sorted((s if isinstance(s, Simplex) else Simplex(*s) for s in simplices), key=_sort_key)
        if any(not np.isfinite(s.value) for s in simp):
            raise FiltrationError("filtration values must be finite")
        index = {}
        for k, s in enumerate(simp):
            if s.vertices in index:
                raise FiltrationError(f"duplicate simplex {s.vertices}")
            index[s.vertices] = k
        for s in simp:
            for f in s.faces():
                if f not in index:
                    raise FiltrationError(f"face {f} of {s.vertices} is missing")
                if simp[index[f]].value > s.value:
                    raise FiltrationError(
                        f"face {f} enters at {simp[index[f]].value} after coface {s.vertices} at {s.value}")
        top = max((s.dim for s in simp), default=0)
        if max_dim is not None and top > max_dim:
            raise FiltrationError(f"simplex of dimension {top} exceeds max_dim={max_dim}")
        self.simplices = simp
        self.index = index
        self.max_dim = top if max_dim is None else int(max_dim)

    def __len__(self):
        return len(self.simplices)

    def __iter__(self):
        return iter(self.simplices)

    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.simplices])

    def dump(self) -> str:
        """One simplex per line: value followed by its vertices."""
        return "".join(f"{s.value!r} " + " ".join(map(str, s.vertices)) + "\n" for s in self.simplices)


class FlagFiltration:
    """Clique filtration given by vertex values and an edge-value matrix.

    A simplex enters at the largest value among its vertices and edges;
    simplices above ``max_value`` or of dimension above ``max_dim`` are
    left out.  Simplices are never stored, so large clouds are cheap.
    """

    def __init__(self, vertex_values, edge_values, max_dim: int = 2, max_value: float = np.inf):
        f = np.asarray(vertex_values, dtype=float).reshape(-1)
        E = np.array(edge_values, dtype=float)
        if E.shape != (len(f), len(f)):
            raise ValidationError("edge matrix must be square and match the vertex count")
        if max_dim < 0:
            raise ValidationError("max_dim must be nonnegative")
        if len(f) > MAX_FLAG_VERTICES:
            raise CapacityError(f"{len(f)} vertices exceed the flag-filtration limit of {MAX_FLAG_VERTICES}")
        np.fill_diagonal(E, np.inf)
        if np.any(E < np.maximum.outer(f, f)):
            raise FiltrationError("an edge enters before one of its vertices")
        self.vertex_values = f
        self.edge_values = E
        self.max_dim = int(max_dim)
        self.max_value = float(max_value)

    def __len__(self):
        return self.count_simplices()

    def _live(self):
        keep = np.flatnonzero(self.vertex_values <= self.max_value)
        E = self.edge_values[np.ix_(keep, keep)]
        return keep, self.vertex_values[keep], E

    def edges(self):
        """Edges ``(i, j, value)`` sorted by (value, i, j), over live vertices
        re-indexed from 0."""
        keep, f, E = self._live()
        i, j = np.triu_indices(len(keep), 1)
        v = E[i, j]
        sel = v <= self.max_value
        i, j, v = i[sel], j[sel], v[sel]
        order = np.lexsort((j, i, v))
        return keep, f, i[order], j[order], v[order]

    def count_simplices(self) -> int:
        keep, f, ei, ej, ev = self.edges()
        total = len(keep) + (len(ei) if self.max_dim >= 1 else 0)
        if self.max_dim >= 2 and len(ei):
            A = np.zeros((len(keep), len(keep)))
            A[ei, ej] = A[ej, ei] = 1
            total += int(round(np.trace(A @ A @ A) / 6))
        if self.max_dim >= 3:
            total += sum(1 for _ in self._cliques(4))
        return total

    def _cliques(self, size):
        keep, f, ei, ej, ev = self.edges()
        adj = [set() for _ in keep]
        for a, b in zip(ei, ej):
            adj[a].add(b)
            adj[b].add(a)

        def grow(clique, cand):
            if len(clique) == size:
                yield tuple(clique)
                return
            for v in sorted(cand):
                if v > clique[-1]:
                    yield from grow(clique + [v], cand & adj[v])

        for v in range(len(keep)):
            yield from grow([v], adj[v])

    def to_filtration(self) -> Filtration:
        """Materialise every simplex; vertex labels are the original indices."""
        n = self.count_simplices()
        if n > MAX_SIMPLICES:
            raise CapacityError(f"{n} simplices exceed the cap of {MAX_SIMPLICES}")
        keep, f, ei, ej, ev = self.edges()
        E = self.edge_values[np.ix_(keep, keep)]
        simp = [Simplex((int(keep[v]),), f[v]) for v in range(len(keep))]
        if self.max_dim >= 1:
            simp += [Simplex((int(keep[a]), int(keep[b])), w) for a, b, w in zip(ei, ej, ev)]
        for size in range(3, self.max_dim + 2):
            for c in self._cliques(size):
                val = max(E[a, b] for a, b in itertools.combinations(c, 2))
                simp.append(Simplex(tuple(int(keep[x]) for x in c), val))
        return Filtration(simp, self.max_dim)


def rips_filtration(points, max_dim: int = 2, max_value: float = np.inf) -> FlagFiltration:
    """Vietoris-Rips filtration: vertices at 0, edges at their length."""
    X = as_point_cloud(points)
    return FlagFiltration(np.zeros(len(X)), cdist(X, X), max_dim, max_value)


def dtm_filtration(points, f, max_dim: int = 2, max_value: float = np.inf) -> FlagFiltration:
    """Weighted Rips filtration with vertex values ``f`` (typically DTM values).

    Edge ``xy`` enters at ``max(f(x), f(y), (f(x) + f(y) + |x - y|) / 2)``.
    """
    X = as_point_cloud(points)
    f = np.asarray(f, dtype=float).reshape(-1)
    if len(f) != len(X):
        raise ValidationError("one vertex value per point is required")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ValidationError("vertex values must be finite and nonnegative")
    D = cdist(X, X)
    E = np.maximum(np.maximum.outer(f, f), (f[:, None] + f[None, :] + D) / 2)
    return FlagFiltration(f, E, max_dim, max_value)


@dataclass
class PersistenceDiagram:
    """Multiset of bars ``(dim, birth, death)``; ``death`` may be ``inf``."""

    dim: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    birth: np.ndarray = field(default_factory=lambda: np.zeros(0))
    death: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.dim = np.asarray(self.dim, dtype=int).reshape(-1)
        self.birth = np.asarray(self.birth, dtype=float).reshape(-1)
        self.death = np.asarray(self.death, dtype=float).reshape(-1)
        if not len(self.dim) == len(self.birth) == len(self.death):
            raise ValidationError("dim, birth and death must have equal lengths")
        if np.any(self.death < self.birth):
            raise ValidationError("death before birth")
        order = np.lexsort((self.death, self.birth, self.dim))
        self.dim, self.birth, self.death = self.dim[order], self.birth[order], self.death[order]

    @classmethod
    def from_triples(cls, triples) -> "PersistenceDiagram":
        T = list(triples)
        if not T:
            return cls()
        d, b, e = zip(*T)
        return cls(np.array(d), np.array(b), np.array(e))

    def __len__(self):
        return len(self.dim)

    def dims(self):
        return sorted(set(self.dim.tolist()))

    def pairs(self, dim: int) -> np.ndarray:
        sel = self.dim == dim
        return np.column_stack([self.birth[sel], self.death[sel]])

    def triples(self):
        return list(zip(self.dim.tolist(), self.birth.tolist(), self.death.tolist()))

    def betti(self, t: float, dim: int) -> int:
        """Number of ``dim`` bars alive at ``t`` (birth <= t < death)."""
        sel = (self.dim == dim) & (self.birth <= t) & (self.death > t)
        return int(sel.sum())

    def to_json(self) -> str:
        out = []
        for k in self.dims():
            P = self.pairs(k)
            out.append({"dim": int(k), "pairs": [[float(b), "inf" if np.isinf(d) else float(d)] for b, d in P]})
        return json.dumps({"dims": out})

    @classmethod
    def from_json(cls, text: str) -> "PersistenceDiagram":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"diagram JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")

        def num(x, where):
            if x == "inf":
                return np.inf
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ValidationError(f"{where}: expected a number or \"inf\", got {x!r}")
            return float(x)

        if not isinstance(obj, dict) or not isinstance(obj.get("dims"), list):
            raise ValidationError("diagram JSON must be an object with a \"dims\" list")
        triples = []
        for a, entry in enumerate(obj["dims"]):
            where = f"dims[{a}]"
            if not isinstance(entry, dict) or not isinstance(entry.get("dim"), int) or not isinstance(entry.get("pairs"), list):
                raise ValidationError(f"{where}: expected {{\"dim\": int, \"pairs\": list}}")
            for b, pair in enumerate(entry["pairs"]):
                w = f"{where}.pairs[{b}]"
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ValidationError(f"{w}: expected [birth, death]")
                birth, death = num(pair[0], w), num(pair[1], w)
                if np.isinf(birth):
                    raise ValidationError(f"{w}: birth must be finite")
                if death < birth:
                    raise ValidationError(f"{w}: death before birth")
                triples.append((entry["dim"], birth, death))
        return cls.from_triples(triples)

    def __eq__(self, other):
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return (np.array_equal(self.dim, other.dim) and np.array_equal(self.birth, other.birth)
                and np.array_equal(self.death, other.death))


def _reduce_explicit(filt: Filtration, dims):
    """Boundary-matrix reduction with clearing, highest dimension first."""
    simp = filt.simplices
    n = len(simp)
    cols = [None] * n
    paired_low = {}
    cleared = set()
    by_dim = {}
    for k, s in enumerate(simp):
        by_dim.setdefault(s.dim, []).append(k)
    triples = []
    for d in sorted(by_dim, reverse=True):
        if d == 0 or (d not in dims and d - 1 not in dims):
            continue
        for j in by_dim[d]:
            if j in cleared:
                continue
            col = {filt.index[f] for f in simp[j].faces()}
            while col:
                low = max(col)
                if low not in paired_low:
                    break
                col ^= cols[paired_low[low]]
            if col:
                low = max(col)
                paired_low[low] = j
                cols[j] = col
                cleared.add(low)
    for k, s in enumerate(simp):
        if s.dim not in dims:
            continue
        if k in paired_low:
            triples.append((s.dim, s.value, simp[paired_low[k]].value))
        elif cols[k] is None:
            triples.append((s.dim, s.value, np.inf))
    return triples


def _flag_triples(filt: FlagFiltration, dims):
    keep, f, ei, ej, ev = filt.edges()
    n = len(keep)
    triples = []
    if n == 0:
        return triples
    if filt.max_dim == 0:
        ei = ej = np.zeros(0, dtype=np.int64)
        ev = np.zeros(0)
    ei = ei.astype(np.int64)
    ej = ej.astype(np.int64)
    vrank = np.empty(n, dtype=np.int64)
    vrank[np.lexsort((np.arange(n), f))] = np.arange(n)
    young, killer, negative, roots = _flag.h0_pairs(n, vrank, ei, ej)
    if 0 in dims:
        triples += [(0, f[v], ev[r]) for v, r in zip(young, killer)]
        triples += [(0, f[v], np.inf) for v in roots]
    if 1 in dims and filt.max_dim >= 1:
        R = np.full((n, n), -1, dtype=np.int64)
        if filt.max_dim >= 2:
            R[ei, ej] = R[ej, ei] = np.arange(len(ei))
        src = np.concatenate([ei, ej])
        dst = np.concatenate([ej, ei])
        order = np.argsort(src, kind="stable")
        adj = dst[order]
        adj_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=adj_ptr[1:])
        b, d = _flag.h1_pairs(n, ei, ej, R, adj_ptr, adj, negative)
        triples += [(1, ev[x], ev[y] if y >= 0 else np.inf) for x, y in zip(b, d)]
    return triples


def persistence_diagram(filt, dims=None, engine: str = "auto") -> PersistenceDiagram:
    """Persistence diagram over Z/2 with zero-length bars removed.

    For a flag filtration truncated at simplex dimension ``max_dim``, only
    homology in degrees below ``max_dim`` is meaningful and is the default;
    an explicit filtration reports every degree up to its ``max_dim``.
    """
    flag = isinstance(filt, FlagFiltration)
    if dims is None:
        dims = range(filt.max_dim) if flag and filt.max_dim > 0 else range(filt.max_dim + 1)
    dims = set(int(k) for k in dims)
    if engine == "auto":
        engine = "flag" if flag and filt.max_dim <= 2 and dims <= {0, 1} else "explicit"
    if engine == "flag":
        if not flag:
            raise ValidationError("the flag engine needs a FlagFiltration")
        if not dims <= {0, 1} or filt.max_dim > 2:
            raise ValidationError("the flag engine covers degrees 0 and 1 with max_dim <= 2")
        triples = _flag_triples(filt, dims)
    elif engine == "explicit":
        if flag:
            filt = filt.to_filtration()
        elif not isinstance(filt, Filtration):
            filt = Filtration(filt)
        triples = _reduce_explicit(filt, dims)
    else:
        raise ValidationError(f"unknown engine {engine!r}")
    return PersistenceDiagram.from_triples([t for t in triples if t[2] > t[1]])


def prominent_bars(D: PersistenceDiagram, dim: int, min_length: float = 0.0):
    """Bars of degree ``dim`` at least ``min_length`` long, longest first;
    infinite bars are always kept."""
    P = D.pairs(dim)
    length = P[:, 1] - P[:, 0]
    sel = (length >= min_length) | np.isinf(length)
    P, length = P[sel], length[sel]
    order = np.lexsort((P[:, 0], -length))
    return [(float(b), float(d)) for b, d in P[order]]


def betti_at_scale(points, radius: float, max_dim: int = 1):
    """Betti numbers of degrees ``0..max_dim`` of the Rips complex at ``radius``."""
    filt = rips_filtration(points, max_dim + 1, radius)
    D = persistence_diagram(filt, dims=range(max_dim + 1))
    return [int(np.sum((D.dim == k) & np.isinf(D.death))) for k in range(max_dim + 1)]
