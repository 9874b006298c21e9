"""Denotations.

Classical values are plain Python data: ``()`` for Q1, ``0``/``1`` for Q2 and
2-tuples for tensors. Basis indices follow the same layout, with
``index(σ⊗τ, (a, b)) = index(σ, a)·dim(τ) + index(τ, b)``.

Two evaluators are provided and are deliberately built differently:

* :func:`eval_classical` composes the finite maps of the classical meaning
  function (``δ_{Γ,Δ}``, ``id*``, ``(f|g)``, ...) along the typing derivation
  and returns a lookup table;
* :func:`eval_quantum` interprets terms in the vector monad over environments
  (``return`` is a point mass, ``bind`` is linear extension) and returns a
  dense matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Hashable, Iterator

import numpy as np

from .errors import TypeMismatch
from .syntax import (
    Q1,
    Q2,
    Bool,
    Context,
    IfQ,
    Let,
    Pair,
    PPair,
    PVar,
    QType,
    Scale,
    Sup,
    Term,
    Unit,
    Var,
    ZeroVec,
    context_as_type,
    dim,
    merge_contexts,
    pretty_type,
)
from .typecheck import DEFAULT_TOL, Judgement

# ---------------------------------------------------------------------------
# basis


def index_of(t: QType, v) -> int:
    if t == Q1:
        return 0
    if t == Q2:
        return int(v)
    a, b = v
    return index_of(t.left, a) * dim(t.right) + index_of(t.right, b)


@lru_cache(maxsize=None)
def _index_table(t: QType) -> dict:
    return {v: i for i, v in enumerate(basis(t))}


def value_of(t: QType, i: int):
    if t == Q1:
        return ()
    if t == Q2:
        return i
    db = dim(t.right)
    return (value_of(t.left, i // db), value_of(t.right, i % db))


@lru_cache(maxsize=None)
def basis(t: QType) -> tuple:
    return tuple(value_of(t, i) for i in range(dim(t)))


def env_value(ctx: Context, env: dict):
    """Pack a name→value environment into a value of ``con(ctx)``."""
    v = ()
    for n, _ in ctx:
        v = (v, env[n])
    return v


def env_dict(ctx: Context, v) -> dict:
    out = {}
    for n, _ in reversed(ctx.entries):
        v, out[n] = v
    return out


@dataclass(frozen=True)
class BasisElem:
    index: int
    type: QType

    def __post_init__(self):
        if not 0 <= self.index < dim(self.type):
            raise ValueError(f"basis index {self.index} out of range for {pretty_type(self.type)}")

    @property
    def value(self):
        return value_of(self.type, self.index)


# ---------------------------------------------------------------------------
# vectors and linear maps


@dataclass(frozen=True, eq=False)
class Vector:
    type: QType
    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.shape != (dim(self.type),):
            raise ValueError(f"vector of length {a.shape} for type of dimension {dim(self.type)}")
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite amplitude")
        object.__setattr__(self, "amps", a)

    def __getitem__(self, v) -> complex:
        return complex(self.amps[index_of(self.type, v)])

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def __add__(self, other: "Vector") -> "Vector":
        return Vector(self.type, self.amps + other.amps)

    def __rmul__(self, k: complex) -> "Vector":
        return Vector(self.type, k * self.amps)

    def allclose(self, other: "Vector", tol: float = DEFAULT_TOL) -> bool:
        return self.type == other.type and bool(np.max(np.abs(self.amps - other.amps), initial=0.0) <= tol)

    @classmethod
    def basis_vector(cls, t: QType, v) -> "Vector":
        a = np.zeros(dim(t), dtype=complex)
        a[index_of(t, v)] = 1
        return cls(t, a)

    @classmethod
    def zero(cls, t: QType) -> "Vector":
        return cls(t, np.zeros(dim(t), dtype=complex))


@dataclass(frozen=True, eq=False)
class LinMap:
    """A matrix with one column per input basis element (rows = outputs)."""

    in_type: QType
    out_type: QType
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (dim(self.out_type), dim(self.in_type)):
            raise ValueError(f"matrix shape {m.shape} does not match types")
        object.__setattr__(self, "matrix", m)

    @property
    def columns(self) -> list[Vector]:
        return [Vector(self.out_type, self.matrix[:, j]) for j in range(self.matrix.shape[1])]

    def column(self, v) -> Vector:
        return Vector(self.out_type, self.matrix[:, index_of(self.in_type, v)])

    def apply(self, v: Vector) -> Vector:
        if v.type != self.in_type:
            raise TypeMismatch("vector type does not match map domain")
        return Vector(self.out_type, self.matrix @ v.amps)

    def allclose(self, other: "LinMap", tol: float = DEFAULT_TOL) -> bool:
        return (
            self.in_type == other.in_type
            and self.out_type == other.out_type
            and bool(np.max(np.abs(self.matrix - other.matrix), initial=0.0) <= tol)
        )


def vec_inner(v: Vector, w: Vector) -> complex:
    """``⟨v|w⟩``, conjugate-linear in ``v``."""
    if v.type != w.type:
        raise TypeMismatch(f"inner product of {pretty_type(v.type)} and {pretty_type(w.type)}")
    return complex(np.vdot(v.amps, w.amps))


def is_isometry(m: LinMap, tol: float = DEFAULT_TOL) -> bool:
    gram = m.matrix.conj().T @ m.matrix
    return bool(np.max(np.abs(gram - np.eye(gram.shape[0])), initial=0.0) <= tol)


def morphisms_orthogonal(f: LinMap, g: LinMap, tol: float = DEFAULT_TOL) -> bool:
    """``⟨f v|g v⟩ = 0`` for every ``v``; equivalently for every pair of basis inputs."""
    if f.in_type != g.in_type or f.out_type != g.out_type:
        raise TypeMismatch("morphisms of different types")
    cross = f.matrix.conj().T @ g.matrix
    return bool(np.max(np.abs(cross), initial=0.0) <= tol)


# ---------------------------------------------------------------------------
# the vector monad, sparse form used by the evaluator

SparseVec = dict  # classical value -> complex


def vreturn(a: Hashable) -> SparseVec:
    return {a: 1 + 0j}


def vbind(v: SparseVec, f: Callable[[Hashable], SparseVec]) -> SparseVec:
    out: SparseVec = {}
    for a, k in v.items():
        if k == 0:
            continue
        for b, w in f(a).items():
            out[b] = out.get(b, 0j) + k * w
    return out


def _vadd(v: SparseVec, w: SparseVec) -> SparseVec:
    out = dict(v)
    for b, k in w.items():
        out[b] = out.get(b, 0j) + k
    return out


def _vscale(k: complex, v: SparseVec) -> SparseVec:
    return {b: k * w for b, w in v.items()}


def to_dense(t: QType, v: SparseVec) -> Vector:
    a = np.zeros(dim(t), dtype=complex)
    for b, k in v.items():
        a[index_of(t, b)] += k
    return Vector(t, a)


def from_dense(v: Vector) -> SparseVec:
    return {value_of(v.type, i): complex(k) for i, k in enumerate(v.amps) if k != 0}


def evaluate(t: Term, env: dict) -> SparseVec:
    """Meaning of ``t`` at a classical environment, as a sparse vector."""
    match t:
        case Var(n):
            return vreturn(env[n])
        case Unit():
            return vreturn(())
        case Bool(b):
            return vreturn(int(b))
        case Pair(a, b):
            vb = evaluate(b, env)
            return vbind(evaluate(a, env), lambda x: vbind(vb, lambda y: vreturn((x, y))))
        case Let(PVar(x), a, b):
            return vbind(evaluate(a, env), lambda v: evaluate(b, {**env, x: v}))
        case Let(PPair(x, y), a, b):
            return vbind(evaluate(a, env), lambda v: evaluate(b, {**env, x: v[0], y: v[1]}))
        case IfQ(c, a, b):
            branches: dict[int, SparseVec] = {}

            def pick(bit):
                if bit not in branches:
                    branches[bit] = evaluate(a if bit == 1 else b, env)
                return branches[bit]

            return vbind(evaluate(c, env), pick)
        case ZeroVec():
            return {}
        case Scale(k, a):
            return _vscale(k, evaluate(a, env))
        case Sup(a, b):
            return _vadd(evaluate(a, env), evaluate(b, env))
    raise TypeMismatch(f"cannot evaluate {t!r}")


def eval_quantum(j: Judgement) -> LinMap:
    """``⟦Γ ⊢ t : σ⟧`` as a matrix from ``con(Γ)`` to ``σ``."""
    in_t = context_as_type(j.ctx)
    m = np.zeros((dim(j.type), dim(in_t)), dtype=complex)
    row = _index_table(j.type)
    for col, g in enumerate(basis(in_t)):
        for b, k in evaluate(j.term, env_dict(j.ctx, g)).items():
            m[row[b], col] += k
    return LinMap(in_t, j.type, m)


def eval_term(ctx: Context, t: Term, tol: float = DEFAULT_TOL) -> LinMap:
    """Typecheck (non-strictly) and evaluate."""
    from .typecheck import infer

    return eval_quantum(infer(ctx, t, strict=False, tol=tol))


# ---------------------------------------------------------------------------
# classical meaning function, built from the structural maps


def _reorder(src: Context, dst: Context) -> Callable:
    """Re-shuffle a value of ``con(src)`` into ``con(dst)`` (names of dst ⊆ src)."""
    return lambda v: env_value(dst, env_dict(src, v))


def delta_split(g: Context, d: Context) -> Callable[[int], tuple[int, int]]:
    """``δ_{Γ,Δ} : ⟦Γ⊗Δ⟧ → ⟦Γ⟧×⟦Δ⟧`` on basis indices.

    Follows the recursion on Γ: a shared last variable is duplicated (δ), an
    exclusive one is routed left (``× id``), and an empty Γ is ``id*``.
    """
    merged, _ = merge_contexts(g, d)
    fn = _delta_values(g, d)
    tg, td, tm = context_as_type(g), context_as_type(d), context_as_type(merged)

    def on_index(i: int) -> tuple[int, int]:
        vg, vd = fn(value_of(tm, i))
        return index_of(tg, vg), index_of(td, vd)

    return on_index


def _delta_values(g: Context, d: Context) -> Callable:
    merged, _ = merge_contexts(g, d)
    if not g.entries:
        # id*: the whole environment goes right
        return lambda v: ((), v)
    *rest, (x, s) = g.entries
    g2 = Context(tuple(rest))
    if x in d:
        d2 = Context(tuple(e for e in d.entries if e[0] != x))
        inner = _delta_values(g2, d2)
        inner_merged, _ = merge_contexts(g2, d2)

        def shared(v):
            env = env_dict(merged, v)
            a, b = inner(env_value(inner_merged, env))
            # δ on x, then the implicit swap putting x last in Δ
            db = env_dict(d2, b)
            db[x] = env[x]
            return (a, env[x]), env_value(d, db)

        return shared
    inner = _delta_values(g2, d)
    inner_merged, _ = merge_contexts(g2, d)

    def routed(v):
        env = env_dict(merged, v)
        a, b = inner(env_value(inner_merged, env))
        return (a, env[x]), b

    return routed


def _denote(j: Judgement) -> Callable:
    """Classical meaning of a derivation, as a function on ``con(ctx)`` values."""
    t = j.term
    core = j.ctx.restrict(j.used)
    weaken = _reorder(j.ctx, core)  # drops unused Q1 slots: repeated id*

    def via_split(body: Callable) -> Callable:
        sp = j.split
        to_merged = _reorder(j.ctx, sp.merged)
        delta = _delta_values(sp.left, sp.right)
        return lambda v: body(*delta(to_merged(v)))

    match t:
        case Var():
            return lambda v: weaken(v)[1]  # id_*
        case Unit():
            return lambda v: ()
        case Bool(b):
            return lambda v, b=int(b): b  # const
        case Pair():
            f, g = _denote(j.premises[0]), _denote(j.premises[1])
            return via_split(lambda a, b: (f(a), g(b)))  # (f × g) ∘ δ
        case Let():
            f, g = _denote(j.premises[0]), _denote(j.premises[1])
            inner = j.premises[1].ctx
            if isinstance(t.pat, PVar):
                return via_split(lambda a, b: g(_extend_1(inner, b, f(a))))
            return via_split(lambda a, b: g(_extend_2(inner, b, f(a))))
        case IfQ():
            f, g, h = (_denote(p) for p in j.premises)
            # (g|h) ∘ (f × id) ∘ δ
            return via_split(lambda a, b: g(b) if f(a) == 1 else h(b))
    raise TypeMismatch(f"not a classical term: {type(t).__name__}")


def _extend_1(ctx: Context, v, a):
    return (v, a)


def _extend_2(ctx: Context, v, ab):
    return ((v, ab[0]), ab[1])


def eval_classical(j: Judgement) -> dict[int, int]:
    """``⟦Γ ⊢ t : σ⟧`` as a table from input basis index to output basis index."""
    fn = _denote(j)
    in_t = context_as_type(j.ctx)
    return {i: index_of(j.type, fn(value_of(in_t, i))) for i in range(dim(in_t))}


def table_to_linmap(j: Judgement, table: dict[int, int]) -> LinMap:
    in_t = context_as_type(j.ctx)
    m = np.zeros((dim(j.type), dim(in_t)), dtype=complex)
    for i, o in table.items():
        m[o, i] = 1
    return LinMap(in_t, j.type, m)


def all_envs(ctx: Context) -> Iterator[dict]:
    names = ctx.names()
    for vals in product(*(basis(s) for _, s in ctx)):
        yield dict(zip(names, vals))
