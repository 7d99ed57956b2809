"""Reverse-mode tape over numpy arrays.

A ``Tape`` records every primitive call as (primitive name, input slots, output slot,
attributes). Attributes hold constants such as noise increments or kernel weights; they
are not differentiated. A tape created with ``record=False`` runs the exact same forward
code without storing anything, which is how undifferentiated evaluations are done.
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from cavflow.exceptions import UnregisteredPrimitiveError

ForwardFn = Callable[..., np.ndarray]
VjpFn = Callable[..., tuple[Optional[np.ndarray], ...]]


@dataclass(frozen=True)
class Primitive:
    name: str
    forward: ForwardFn
    vjp: VjpFn


_REGISTRY: dict[str, Primitive] = {}


def register_primitive(name: str, forward: ForwardFn, vjp: VjpFn) -> Primitive:
    primitive = Primitive(name=name, forward=forward, vjp=vjp)
    _REGISTRY[name] = primitive
    return primitive


def lookup_primitive(name: str) -> Primitive:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnregisteredPrimitiveError(name) from None


def registered_primitives() -> list[str]:
    return sorted(_REGISTRY)


class Var:
    """A value produced on a tape."""

    __slots__ = ("value", "slot", "tape")

    def __init__(self, value: np.ndarray, slot: int, tape: "Tape"):
        self.value = value
        self.slot = slot
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.value.shape)

    def __repr__(self) -> str:
        return f"Var(shape={self.shape}, slot={self.slot})"


@dataclass(frozen=True)
class TapeEntry:
    primitive: str
    inputs: tuple[int, ...]
    output: int
    attrs: dict[str, Any] = field(default_factory=dict)


class Tape:
    def __init__(self, record: bool = True):
        self.record = record
        self.values: list[np.ndarray] = []
        self.entries: list[TapeEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def _store(self, value: np.ndarray) -> int:
        if not self.record:
            return -1
        self.values.append(value)
        return len(self.values) - 1

    def variable(self, value: Any) -> Var:
        """Register a leaf (a differentiable input)."""
        array = np.array(value, dtype=float)
        return Var(array, self._store(array), self)

    def apply(self, name: str, *inputs: Var, **attrs: Any) -> Var:
        primitive = lookup_primitive(name)
        for v in inputs:
            if v.tape is not self:
                raise ValueError(f"input of '{name}' belongs to another tape")
        out = primitive.forward(*(v.value for v in inputs), **attrs)
        slot = self._store(out)
        if self.record:
            self.entries.append(
                TapeEntry(primitive=name, inputs=tuple(v.slot for v in inputs), output=slot,
                          attrs=attrs)
            )
        return Var(out, slot, self)

    def backward(self, output: Var, wrt: Sequence[Var]) -> list[np.ndarray]:
        """Adjoints of ``output`` (summed if not scalar) with respect to ``wrt``."""
        if not self.record:
            raise RuntimeError("cannot differentiate through a non-recording tape")
        adjoints: dict[int, np.ndarray] = {output.slot: np.ones_like(output.value)}
        targets = {v.slot for v in wrt}

        for entry in reversed(self.entries):
            g = adjoints.get(entry.output)
            if g is None:
                continue
            if entry.output not in targets:
                del adjoints[entry.output]
            primitive = lookup_primitive(entry.primitive)
            input_values = [self.values[s] for s in entry.inputs]
            grads = primitive.vjp(g, self.values[entry.output], *input_values, **entry.attrs)
            for slot, gi in zip(entry.inputs, grads):
                if gi is None:
                    continue
                if slot in adjoints:
                    adjoints[slot] = adjoints[slot] + gi
                else:
                    adjoints[slot] = gi

        return [adjoints.get(v.slot, np.zeros_like(v.value)) for v in wrt]

    def replay(self) -> bool:
        """Recompute every entry from its recorded inputs; True if all outputs match exactly."""
        for entry in self.entries:
            primitive = lookup_primitive(entry.primitive)
            recomputed = primitive.forward(*(self.values[s] for s in entry.inputs), **entry.attrs)
            if not np.array_equal(recomputed, self.values[entry.output]):
                return False
        return True

    def release(self) -> None:
        self.values.clear()
        self.entries.clear()
