"""Independent reference computations used as test oracles.

Nothing here imports the evaluator under test: closed value terms are turned
into numpy vectors with Kronecker products, and the gate matrices are written
out by hand.
"""

import math

import numpy as np

from qmlang.syntax import Bool, Pair, Scale, Sup, Unit, ZeroVec, dim

R = 1 / math.sqrt(2)
HADAMARD = np.array([[R, R], [R, -R]], dtype=complex)  # rows out (false, true), cols in
NOT = np.array([[0, 1], [1, 0]], dtype=complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
BELL = np.array([R, 0, 0, R], dtype=complex)


def closed_vector(t, ty=None) -> np.ndarray:
    """The vector of a closed term built from values, scalings, sums and zero."""
    match t:
        case Unit():
            return np.array([1], dtype=complex)
        case Bool(b):
            return np.array([0, 1] if b else [1, 0], dtype=complex)
        case Pair(a, b):
            return np.kron(closed_vector(a), closed_vector(b))
        case Scale(k, a):
            return k * closed_vector(a)
        case Sup(a, b):
            return closed_vector(a) + closed_vector(b)
        case ZeroVec(s):
            return np.zeros(dim(s), dtype=complex)
    raise ValueError(f"not a closed value tree: {t!r}")


def truth_table(f, n: int) -> list:
    """``f`` applied to every tuple of ``n`` bits, inputs in counting order."""
    return [f(*((i >> (n - 1 - k)) & 1 for k in range(n))) for i in range(2**n)]


def run_classical(t, env: dict):
    """Direct interpreter for the classical fragment: bits are 0/1, pairs are tuples."""
    from qmlang.syntax import IfQ, Let, PPair, PVar, Var

    match t:
        case Var(n):
            return env[n]
        case Unit():
            return ()
        case Bool(b):
            return int(b)
        case Pair(a, b):
            return (run_classical(a, env), run_classical(b, env))
        case Let(PVar(x), a, b):
            return run_classical(b, {**env, x: run_classical(a, env)})
        case Let(PPair(x, y), a, b):
            v = run_classical(a, env)
            return run_classical(b, {**env, x: v[0], y: v[1]})
        case IfQ(c, a, b):
            return run_classical(a if run_classical(c, env) else b, env)
    raise ValueError(f"not classical: {t!r}")


def flat_index(v) -> int:
    """Basis index of a nested value (left-nested tensor layout, bits and units)."""
    if v == ():
        return 0
    if isinstance(v, int):
        return v
    a, b = v
    return flat_index(a) * _card(b) + flat_index(b)


def _card(v) -> int:
    if v == ():
        return 1
    if isinstance(v, int):
        return 2
    return _card(v[0]) * _card(v[1])
