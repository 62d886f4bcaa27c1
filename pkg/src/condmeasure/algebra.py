"""Finite measure algebras with exact rational weights.

The ambient object everywhere in this package is a finite probability
algebra: a fixed tuple of atoms, each carrying a positive rational
weight, with the weights summing to one.  Events are plain frozensets
of atom ids.  Numeric results are reported atom by atom as `Field`
vectors whose entries are exact rationals, optionally extended with a
single positive infinity for unbounded measures.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence


class _Infinity:
    """The single positive infinity used by extended-valued measures."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "inf"

    def __eq__(self, other: object) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("condmeasure-infinity")

    def __lt__(self, other: object) -> bool:
        if other is self or isinstance(other, (int, Fraction)):
            return False
        return NotImplemented

    def __le__(self, other: object) -> bool:
        if other is self:
            return True
        if isinstance(other, (int, Fraction)):
            return False
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if other is self:
            return False
        if isinstance(other, (int, Fraction)):
            return True
        return NotImplemented

    def __ge__(self, other: object) -> bool:
        if other is self or isinstance(other, (int, Fraction)):
            return True
        return NotImplemented


INF = _Infinity()

#: Values taken by extended nonnegative quantities: exact rationals or INF.
ExtValue = Fraction | _Infinity


def is_finite(v: ExtValue) -> bool:
    return v is not INF


def ext_add(a: ExtValue, b: ExtValue) -> ExtValue:
    if a is INF or b is INF:
        return INF
    return a + b


def ext_sub(a: ExtValue, b: ExtValue) -> ExtValue:
    """Subtraction with the usual guard: the subtrahend must be finite."""
    if b is INF:
        raise ValueError("undefined extended difference: subtrahend is infinite")
    if a is INF:
        return INF
    return a - b


def ext_mul(a: ExtValue, b: ExtValue) -> ExtValue:
    # Convention: zero absorbs infinity, so 0 * inf = 0.
    if a == 0 or b == 0:
        return Fraction(0)
    if a is INF or b is INF:
        if (a is not INF and a < 0) or (b is not INF and b < 0):
            raise ValueError("undefined extended product: negative times infinity")
        return INF
    return a * b


def ext_sum(values: Iterable[ExtValue]) -> ExtValue:
    total: ExtValue = Fraction(0)
    for v in values:
        total = ext_add(total, v)
    return total


def format_value(v: ExtValue) -> str:
    """Render a value the way scenario files spell it: 'p/q' or 'inf'."""
    if v is INF:
        return "inf"
    f = Fraction(v)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def parse_value(text: str) -> ExtValue:
    if text.strip() == "inf":
        return INF
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational literal {text!r}: {exc}") from None


Event = frozenset  # events are frozensets of atom ids


class MeasureAlgebra:
    """A finite probability algebra: ordered atoms with rational weights.

    The atom order is fixed at construction and drives every piece of
    deterministic output downstream (field rendering, reports, random
    case generation).
    """

    __slots__ = ("atoms", "weights", "_index")

    def __init__(self, weights: Mapping[str, Fraction] | Sequence[tuple[str, Fraction]]):
        items = list(weights.items()) if isinstance(weights, Mapping) else list(weights)
        if not items:
            raise ValueError("a measure algebra needs at least one atom")
        atoms = tuple(a for a, _ in items)
        if len(set(atoms)) != len(atoms):
            raise ValueError("duplicate atom ids")
        w = {}
        for a, p in items:
            p = Fraction(p)
            if p <= 0:
                raise ValueError(f"atom {a!r} has non-positive weight {p}")
            w[a] = p
        if sum(w.values()) != 1:
            raise ValueError("atom weights must sum to 1 exactly")
        self.atoms = atoms
        self.weights = w
        self._index = {a: i for i, a in enumerate(atoms)}

    @classmethod
    def uniform(cls, atoms: Sequence[str]) -> "MeasureAlgebra":
        n = len(atoms)
        return cls([(a, Fraction(1, n)) for a in atoms])

    def __repr__(self) -> str:
        parts = ", ".join(f"{a}:{format_value(self.weights[a])}" for a in self.atoms)
        return f"MeasureAlgebra({parts})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MeasureAlgebra):
            return NotImplemented
        return self.atoms == other.atoms and self.weights == other.weights

    def __hash__(self) -> int:
        return hash((self.atoms, tuple(self.weights[a] for a in self.atoms)))

    def index(self, atom: str) -> int:
        return self._index[atom]

    def event(self, atoms: Iterable[str]) -> Event:
        ev = frozenset(atoms)
        unknown = ev - set(self.atoms)
        if unknown:
            raise ValueError(f"unknown atoms in event: {sorted(unknown)}")
        return ev

    @property
    def top(self) -> Event:
        return frozenset(self.atoms)

    def complement_event(self, event: Event) -> Event:
        return self.top - self.event(event)

    def prob(self, event: Event) -> Fraction:
        return sum((self.weights[a] for a in self.event(event)), Fraction(0))

    def sup_event(self, family: Iterable[Event]) -> Event:
        out: set[str] = set()
        for ev in family:
            out |= self.event(ev)
        return frozenset(out)

    def inf_event(self, family: Iterable[Event]) -> Event:
        events = [self.event(ev) for ev in family]
        if not events:
            return self.top
        out = set(events[0])
        for ev in events[1:]:
            out &= ev
        return frozenset(out)

    def largest_event(self, pred: Callable[[Event], bool], *, verify: bool = False) -> Event:
        """Largest event satisfying an atom-local, union-closed predicate.

        In a finite atomic algebra the supremum of all satisfying events
        is the union of the satisfying singletons.  With verify=True the
        contract is checked by full enumeration of the 2^n events.
        """
        result = frozenset(a for a in self.atoms if pred(frozenset((a,))))
        if verify:
            if not pred(result) and result:
                raise ValueError("largest_event: union of satisfying atoms fails the predicate")
            for ev in self.all_events():
                if pred(ev) and not ev <= result:
                    raise ValueError(f"largest_event: satisfying event {sorted(ev)} escapes the result")
        return result

    def all_events(self) -> Iterator[Event]:
        n = len(self.atoms)
        for mask in range(1 << n):
            yield frozenset(a for i, a in enumerate(self.atoms) if mask >> i & 1)

    def is_partition(self, events: Sequence[Event]) -> bool:
        seen: set[str] = set()
        for ev in events:
            ev = self.event(ev)
            if seen & ev:
                return False
            seen |= ev
        return seen == set(self.atoms)

    def concatenate_field(self, fields: Sequence["Field"], partition: Sequence[Event]) -> "Field":
        """Paste one field value per partition block into a single field."""
        if len(fields) != len(partition):
            raise ValueError("concatenate_field: one field per partition block required")
        if not self.is_partition(partition):
            raise ValueError("not a partition")
        values: dict[str, ExtValue] = {}
        for f, ev in zip(fields, partition):
            if f.algebra is not self and f.algebra != self:
                raise ValueError("field belongs to a different algebra")
            for a in ev:
                values[a] = f[a]
        return Field(self, values)

    def format_event(self, event: Event) -> str:
        ev = self.event(event)
        return "{" + ",".join(a for a in self.atoms if a in ev) + "}"


class Field:
    """An atom-indexed vector of exact values.

    Finite instances play the role of scalar results (one rational per
    atom); measures and integrals of nonnegative integrands may also
    take the value INF on some atoms.
    """

    __slots__ = ("algebra", "_values")

    def __init__(self, algebra: MeasureAlgebra, values: Mapping[str, ExtValue]):
        if set(values) != set(algebra.atoms):
            raise ValueError("field must assign a value to every atom")
        self.algebra = algebra
        self._values = tuple(values[a] for a in algebra.atoms)

    @classmethod
    def constant(cls, algebra: MeasureAlgebra, v: ExtValue) -> "Field":
        return cls(algebra, {a: v for a in algebra.atoms})

    @classmethod
    def zero(cls, algebra: MeasureAlgebra) -> "Field":
        return cls.constant(algebra, Fraction(0))

    def __getitem__(self, atom: str) -> ExtValue:
        return self._values[self.algebra.index(atom)]

    def as_dict(self) -> dict[str, ExtValue]:
        return {a: v for a, v in zip(self.algebra.atoms, self._values)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Field):
            return NotImplemented
        return self.algebra.atoms == other.algebra.atoms and self._values == other._values

    def __hash__(self) -> int:
        return hash((self.algebra.atoms, self._values))

    def __repr__(self) -> str:
        inner = ", ".join(f"{a}={format_value(v)}" for a, v in zip(self.algebra.atoms, self._values))
        return f"Field({inner})"

    def map2(self, other: "Field", op: Callable[[ExtValue, ExtValue], ExtValue]) -> "Field":
        if self.algebra.atoms != other.algebra.atoms:
            raise ValueError("fields over different algebras")
        return Field(self.algebra, {a: op(x, y) for a, x, y in zip(self.algebra.atoms, self._values, other._values)})

    def __add__(self, other: "Field") -> "Field":
        return self.map2(other, ext_add)

    def __sub__(self, other: "Field") -> "Field":
        return self.map2(other, ext_sub)

    def __mul__(self, other: "Field | ExtValue | int") -> "Field":
        if isinstance(other, Field):
            return self.map2(other, ext_mul)
        scalar = Fraction(other) if isinstance(other, int) else other
        return Field(self.algebra, {a: ext_mul(v, scalar) for a, v in zip(self.algebra.atoms, self._values)})

    __rmul__ = __mul__

    def le(self, other: "Field") -> bool:
        """Pointwise comparison: self <= other at every atom."""
        if self.algebra.atoms != other.algebra.atoms:
            raise ValueError("fields over different algebras")
        return all(x <= y for x, y in zip(self._values, other._values))

    def is_finite(self) -> bool:
        return all(v is not INF for v in self._values)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self._values)

    def restrict(self, event: Event) -> "Field":
        """Keep the value on the event, zero elsewhere."""
        ev = self.algebra.event(event)
        return Field(self.algebra, {a: (v if a in ev else Fraction(0)) for a, v in zip(self.algebra.atoms, self._values)})

    def support(self) -> Event:
        return frozenset(a for a, v in zip(self.algebra.atoms, self._values) if v != 0)

    def total(self) -> ExtValue:
        return ext_sum(self._values)

    def format(self) -> str:
        return ", ".join(f"{a}={format_value(v)}" for a, v in zip(self.algebra.atoms, self._values))


def field_sup(fields: Sequence[Field]) -> Field:
    if not fields:
        raise ValueError("empty supremum")
    out = fields[0]
    for f in fields[1:]:
        out = out.map2(f, lambda x, y: x if y <= x else y)
    return out


def field_inf(fields: Sequence[Field]) -> Field:
    if not fields:
        raise ValueError("empty infimum")
    out = fields[0]
    for f in fields[1:]:
        out = out.map2(f, lambda x, y: y if y <= x else x)
    return out
