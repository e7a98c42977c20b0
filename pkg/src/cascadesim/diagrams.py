"""Counting and enumeration of two-molecule vacuum-exchange diagrams.

A diagram fixes the chronological order of the ``n`` external-field
interactions, which of them act on molecule ``b`` (the emitter), and where
the absorption of the exchanged photon falls among molecule ``a``'s later
interactions.  Every field that comes after the emission must act on ``a``
because the emission is ``b``'s final interaction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

MAX_TERM_ORDER = 3

LOCAL_FIELD = "local_field"
CASCADING = "cascading"
EQUAL_ORDER_CASCADING = "equal_order_cascading"


@dataclass(frozen=True)
class DiagramTerm:
    order: int
    permutation: tuple       # field labels in chronological order
    n_before_emission: int   # fields preceding b's vacuum interaction
    assignment: tuple        # ((field, molecule), ...) in chronological order
    vacuum_slot_a: int       # index of the absorption in a's interaction list

    @property
    def molecule_of(self) -> dict:
        return dict(self.assignment)

    @property
    def b_fields(self) -> tuple:
        return tuple(f for f, mol in self.assignment if mol == "b")

    @property
    def a_fields(self) -> tuple:
        return tuple(f for f, mol in self.assignment if mol == "a")

    @property
    def a_order(self) -> int:
        return len(self.a_fields) + 1

    @property
    def b_order(self) -> int:
        return len(self.b_fields)

    @property
    def classification(self) -> str:
        if self.a_order == 1 or self.b_order == 1:
            return LOCAL_FIELD
        if self.a_order == self.b_order:
            return EQUAL_ORDER_CASCADING
        return CASCADING

    @property
    def phase_spec(self) -> tuple:
        """(wavevector, sign, molecule) factors: sign multiplies zeta_i k_i, or k_s."""
        spec = [(f"k{f}", 1, mol) for f, mol in sorted(self.assignment)]
        return tuple(spec) + (("ks", -1, "a"),)

    def chronology(self) -> list:
        """Ordered events ``(label, molecule)``; 'v' is the exchanged photon."""
        events = [(f"E{f}", mol) for f, mol in self.assignment[:self.n_before_emission]]
        events.append(("v", "b"))
        later = [(f"E{f}", "a") for f, _ in self.assignment[self.n_before_emission:]]
        n_a_before = sum(1 for _, mol in self.assignment[:self.n_before_emission] if mol == "a")
        slot = self.vacuum_slot_a - n_a_before
        events.extend(later[:slot])
        events.append(("v", "a"))
        events.extend(later[slot:])
        events.append(("s", "a"))
        return events

    def check(self) -> None:
        """Assert the vacuum-ordering invariants on the event list."""
        ev = self.chronology()
        b_events = [e for e in ev if e[1] == "b"]
        if not b_events or b_events[-1][0] != "v":
            raise AssertionError("vacuum interaction must be b's final interaction")
        if ev.index(("v", "b")) > ev.index(("v", "a")):
            raise AssertionError("b's vacuum interaction must precede a's")
        if not self.b_fields:
            raise AssertionError("b must interact with at least one field")

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "permutation": list(self.permutation),
            "assignment": {str(f): mol for f, mol in self.assignment},
            "vacuum_slot_a": self.vacuum_slot_a,
            "classification": self.classification,
            "a_order": self.a_order,
            "b_order": self.b_order,
            "phase_spec": [list(p) for p in self.phase_spec],
            "chronology": [f"{lbl}@{mol}" for lbl, mol in self.chronology()],
        }


def count_total(n: int) -> int:
    """Number of diagrams at order ``n`` for a fixed chronological field order."""
    if n < 1:
        raise ValueError("order must be >= 1")
    return sum((2 ** m - 1) * (n - m + 1) for m in range(1, n + 1))


def count_equal_order_cascading(n: int) -> int:
    """Diagrams whose two hyperpolarizabilities have equal order (odd ``n`` only).

    At ``n = 1`` the only diagram is the linear local-field exchange, which
    is not cascading, so the count is 0.
    """
    if n < 1 or n % 2 == 0:
        raise ValueError("equal-order cascading diagrams exist at odd orders only")
    if n == 1:
        return 0
    k = (n + 1) // 2
    return sum(comb(m, k) * (n - m + 1) for m in range(1, n + 1))


def generate_diagrams(n: int, include_permutations: bool = False):
    """Yield every diagram at order ``n`` (no order cap; used for counting)."""
    fields = tuple(range(1, n + 1))
    orders = itertools.permutations(fields) if include_permutations else [fields]
    for perm in orders:
        for m in range(1, n + 1):
            for mols in itertools.product("ab", repeat=m):
                if "b" not in mols:
                    continue
                assignment = tuple(zip(perm[:m], mols)) + tuple((f, "a") for f in perm[m:])
                n_a_before = mols.count("a")
                for slot in range(n - m + 1):
                    yield DiagramTerm(n, perm, m, assignment, n_a_before + slot)


def enumerate_2vmi(n: int, include_permutations: bool = False,
                   kind: str | None = None) -> list:
    """All diagrams at order ``n <= 3``, optionally filtered by classification."""
    if not 1 <= n <= MAX_TERM_ORDER:
        raise ValueError(f"term enumeration supports orders 1..{MAX_TERM_ORDER}, got {n}")
    terms = list(generate_diagrams(n, include_permutations))
    if kind is not None:
        if kind == CASCADING:
            terms = [t for t in terms if t.classification != LOCAL_FIELD]
        else:
            terms = [t for t in terms if t.classification == kind]
    return terms
