"""Threshold access trees, numeric attribute expansion, satisfaction and
secret sharing.

Canonical attribute string grammar (bit-exact; hashed by CP-ABE and
registered by KP-ABE):

    plain atom            name            or  name=token
    bit attribute         name#b<i>=<0|1>     (i = 0 is the LSB)
    exact-match flag      name#eq=<decimal>
    boundary flags        name#lt=2^<k>   /   name#ge=2^<k>
                          for k in {8,16,24,32,40,48,56,64}

'#' cannot occur in a parsed attribute name, so synthetic attributes can
never collide with plain atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import policy as policy_mod
from .policy import Atom, Gate, NumericCmp, PolicyAst
from .errors import UnsatisfiablePolicy

BYTE_WIDTHS = (8, 16, 24, 32, 40, 48, 56, 64)
MAX_WIDTH = 64


# ---------------------------------------------------------------------------
# Tree nodes

class Leaf:
    __slots__ = ("attr", "id")

    def __init__(self, attr: str):
        self.attr = attr
        self.id = -1

    def __repr__(self):
        return f"Leaf({self.attr!r})"


class Threshold:
    __slots__ = ("k", "children", "id")

    def __init__(self, k: int, children: list):
        if not 1 <= k <= len(children):
            raise ValueError(f"invalid gate {k} of {len(children)}")
        self.k = k
        self.children = list(children)
        self.id = -1

    @property
    def n(self) -> int:
        return len(self.children)

    def __repr__(self):
        return f"Threshold({self.k} of {self.n})"


_FALSE = object()  # internal pruning sentinel


class AccessTree:
    """Compiled policy: wrapper assigning stable preorder node ids.

    Child order is significant; the 1-based child position is the
    Lagrange x-coordinate used by secret sharing.
    """

    def __init__(self, root):
        self.root = root
        self._nodes = []
        self._index(root)

    def _index(self, node):
        node.id = len(self._nodes)
        self._nodes.append(node)
        if isinstance(node, Threshold):
            for child in node.children:
                self._index(child)

    def node(self, node_id: int):
        return self._nodes[node_id]

    def nodes(self):
        return list(self._nodes)

    def leaves(self) -> list[Leaf]:
        return [n for n in self._nodes if isinstance(n, Leaf)]

    @property
    def leaf_count(self) -> int:
        return sum(1 for n in self._nodes if isinstance(n, Leaf))

    def gate_counts(self) -> dict:
        """Counts of AND (k=n), OR (k=1) and general threshold gates."""
        counts = {"and": 0, "or": 0, "threshold": 0}
        for n in self._nodes:
            if isinstance(n, Threshold):
                if n.n > 1 and n.k == n.n:
                    counts["and"] += 1
                elif n.n > 1 and n.k == 1:
                    counts["or"] += 1
                else:
                    counts["threshold"] += 1
        return counts

    @property
    def depth(self) -> int:
        def height(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(height(c) for c in node.children)
        return height(self.root)

    def describe(self) -> str:
        lines = []

        def walk(node, depth):
            pad = "  " * depth
            if isinstance(node, Leaf):
                lines.append(f"{pad}leaf {node.attr}")
            else:
                lines.append(f"{pad}gate {node.k} of {node.n}")
                for child in node.children:
                    walk(child, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Numeric attribute expansion (bag of bits)

def min_width(value: int) -> int:
    """Minimal byte-width (in bits) whose range contains value."""
    for w in BYTE_WIDTHS:
        if value < (1 << w):
            return w
    raise ValueError(f"value {value} out of 64-bit range")


def expand_numeric(name: str, value: int) -> set[str]:
    if not 0 <= value < (1 << MAX_WIDTH):
        raise ValueError(f"numeric attribute value {value} out of range")
    w = min_width(value)
    attrs = {f"{name}#b{i}={(value >> i) & 1}" for i in range(w)}
    attrs.add(f"{name}#eq={value}")
    for k in BYTE_WIDTHS:
        if value < (1 << k):
            attrs.add(f"{name}#lt=2^{k}")
        else:
            attrs.add(f"{name}#ge=2^{k}")
    return attrs


@dataclass(frozen=True)
class AttributeBag:
    """Canonical attribute set: plain atoms plus numeric expansions."""

    attrs: frozenset
    numeric_assignments: tuple = ()

    @classmethod
    def build(cls, atoms=(), numeric=None) -> "AttributeBag":
        numeric = dict(numeric or {})
        attrs = set(atoms)
        assignments = []
        for name, value in sorted(numeric.items()):
            attrs |= expand_numeric(name, value)
            assignments.append((name, value, min_width(value)))
        return cls(frozenset(attrs), tuple(assignments))

    def __iter__(self):
        return iter(self.attrs)

    def __len__(self):
        return len(self.attrs)


# ---------------------------------------------------------------------------
# Compilation

def _flat_and(children):
    """AND combinator with FALSE propagation and same-gate flattening."""
    flat = []
    for child in children:
        if child is _FALSE:
            return _FALSE
        if isinstance(child, Threshold) and child.k == child.n:
            flat.extend(child.children)
        else:
            flat.append(child)
    if len(flat) == 1:
        return flat[0]
    return Threshold(len(flat), flat)


def _flat_or(children):
    """OR combinator: FALSE children dropped, same-gate flattening."""
    flat = []
    for child in children:
        if child is _FALSE:
            continue
        if isinstance(child, Threshold) and child.k == 1:
            flat.extend(child.children)
        else:
            flat.append(child)
    if not flat:
        return _FALSE
    if len(flat) == 1:
        return flat[0]
    return Threshold(1, flat)


def _bit_tree_lt(name: str, n: int, w: int):
    """Monotone circuit for v < n over bit attributes b(w-1)..b0."""
    acc = _FALSE
    for i in range(w):
        bit_leaf = Leaf(f"{name}#b{i}=0")
        if (n >> i) & 1:
            acc = _flat_or([bit_leaf, acc])
        else:
            acc = _flat_and([bit_leaf, acc])
    return acc


def _bit_tree_gt(name: str, n: int, w: int):
    """Monotone circuit for v > n over bit attributes."""
    acc = _FALSE
    for i in range(w):
        bit_leaf = Leaf(f"{name}#b{i}=1")
        if (n >> i) & 1:
            acc = _flat_and([bit_leaf, acc])
        else:
            acc = _flat_or([bit_leaf, acc])
    return acc


def _outer_and(children):
    if any(c is _FALSE for c in children):
        return _FALSE
    if len(children) == 1:
        return children[0]
    return Threshold(len(children), children)


def _outer_or(children):
    children = [c for c in children if c is not _FALSE]
    if not children:
        return _FALSE
    if len(children) == 1:
        return children[0]
    return Threshold(1, children)


def _cmp_node(name: str, op: str, n: int):
    """Subtree (or _FALSE) for a single numeric comparison."""
    if n < 0 or n >= (1 << MAX_WIDTH):
        if op in ("<", "<=") and n >= (1 << MAX_WIDTH):
            return Leaf(f"{name}#lt=2^64")  # always true for u64 values
        return _FALSE
    if op == "<=":
        return _cmp_node(name, "<", n + 1)
    if op == ">=":
        if n == 0:
            return Leaf(f"{name}#lt=2^64")  # tautology: every value holds it
        return _cmp_node(name, ">", n - 1)
    if op == "=":
        return Leaf(f"{name}#eq={n}")
    if op == "<":
        if n == 0:
            return _FALSE
        if n >= (1 << MAX_WIDTH):
            return Leaf(f"{name}#lt=2^64")
        w = min_width(n)
        bits = _bit_tree_lt(name, n, w)
        guarded = _outer_and([Leaf(f"{name}#lt=2^{w}"), bits])
        if w == 8:
            return guarded
        return _outer_or([Leaf(f"{name}#lt=2^{w - 8}"), guarded])
    if op == ">":
        if n >= (1 << MAX_WIDTH) - 1:
            return _FALSE
        w = min_width(n)
        bits = _bit_tree_gt(name, n, w)
        guarded = _outer_and([Leaf(f"{name}#lt=2^{w}"), bits])
        return _outer_or([Leaf(f"{name}#ge=2^{w}"), guarded])
    raise ValueError(f"unknown comparison operator {op!r}")


def compile_cmp(name: str, op: str, n: int) -> AccessTree:
    node = _cmp_node(name, op, n)
    if node is _FALSE:
        raise UnsatisfiablePolicy(f"{name} {op} {n} is never satisfied")
    return AccessTree(node)


def _compile_node(ast: PolicyAst):
    if isinstance(ast, Atom):
        return Leaf(ast.name)
    if isinstance(ast, NumericCmp):
        return _cmp_node(ast.name, ast.op, ast.value)
    if isinstance(ast, Gate):
        children = [_compile_node(c) for c in ast.children]
        kept = [c for c in children if c is not _FALSE]
        dropped = len(children) - len(kept)
        k = ast.k
        if k > len(kept):
            return _FALSE  # too many FALSE children to ever reach k
        if len(kept) == 1 and k == 1:
            return kept[0]
        return Threshold(k, kept)
    raise TypeError(f"not a policy node: {ast!r}")


def compile_policy(ast: PolicyAst) -> AccessTree:
    root = _compile_node(ast)
    if root is _FALSE:
        raise UnsatisfiablePolicy("policy reduces to constant FALSE")
    return AccessTree(root)


def compile_text(text: str) -> AccessTree:
    return compile_policy(policy_mod.parse_policy(text))


# ---------------------------------------------------------------------------
# Satisfaction

@dataclass(frozen=True)
class SatisfactionWitness:
    used_leaves: frozenset  # leaf node ids
    selected: dict          # threshold node id -> tuple of chosen child positions (1-based)

    @property
    def size(self) -> int:
        return len(self.used_leaves)


def satisfies(tree: AccessTree, bag) -> SatisfactionWitness | None:
    """Minimal-leaf witness, or None when the bag does not satisfy the tree.

    Ties between equally cheap children are broken by the lowest child
    index, which makes witnesses deterministic.
    """
    attrs = bag.attrs if isinstance(bag, AttributeBag) else frozenset(bag)

    def solve(node):
        # returns (cost, leaves, selected) or None
        if isinstance(node, Leaf):
            if node.attr in attrs:
                return 1, (node.id,), {}
            return None
        results = []
        for pos, child in enumerate(node.children, start=1):
            sub = solve(child)
            if sub is not None:
                results.append((sub[0], pos, sub))
        if len(results) < node.k:
            return None
        results.sort(key=lambda item: (item[0], item[1]))
        chosen = results[:node.k]
        cost = sum(item[0] for item in chosen)
        leaves = []
        selected = {node.id: tuple(item[1] for item in chosen)}
        for _, _, sub in chosen:
            leaves.extend(sub[1])
            selected.update(sub[2])
        return cost, tuple(leaves), selected

    result = solve(tree.root)
    if result is None:
        return None
    _, leaves, selected = result
    return SatisfactionWitness(frozenset(leaves), selected)


# ---------------------------------------------------------------------------
# Threshold secret sharing

def lagrange_coeff(i: int, S, p: int) -> int:
    """Lagrange basis polynomial for x-coordinate i over set S, at 0."""
    S = set(S)
    if i not in S:
        raise ValueError(f"index {i} not in interpolation set {sorted(S)}")
    num, den = 1, 1
    for j in S:
        if j == i:
            continue
        num = num * (-j) % p
        den = den * (i - j) % p
    return num * pow(den, -1, p) % p


def share_secret(suite, tree: AccessTree, s: int, rng) -> dict:
    """Map node id -> share; the root gets s, each gate shares its value
    among its children with a fresh degree (k-1) polynomial."""
    p = int(suite.p)
    shares = {}

    def assign(node, value):
        shares[node.id] = value
        if isinstance(node, Leaf):
            return
        coeffs = [value] + [suite.random_scalar(rng) for _ in range(node.k - 1)]
        for pos, child in enumerate(node.children, start=1):
            acc = 0
            for power, c in enumerate(coeffs):
                acc = (acc + c * pow(pos, power, p)) % p
            assign(child, acc)

    assign(tree.root, s % p)
    return shares


def witness_coefficients(tree: AccessTree, witness: SatisfactionWitness,
                         p: int) -> dict:
    """Per-used-leaf product of Lagrange coefficients down the witness.

    Folding leaf shares weighted by these coefficients reconstructs the
    root secret; the schemes use them as exponents.
    """
    coeffs = {}

    def walk(node, acc):
        if isinstance(node, Leaf):
            if node.id in witness.used_leaves:
                coeffs[node.id] = acc
            return
        chosen = witness.selected.get(node.id)
        if chosen is None:
            return
        for pos in chosen:
            child = node.children[pos - 1]
            walk(child, acc * lagrange_coeff(pos, chosen, p) % p)

    walk(tree.root, 1)
    return coeffs
