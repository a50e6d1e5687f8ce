"""Phase inference: how each kernel touches each field and global.

Every field ends up in one of three phases for a given kernel:

* ``ReadOnly``: only read.
* ``Exclusive``: read and/or written, but only through the kernel's own
  parameter key (the "centered" element), so writes never race.
* ``Reduce(op)``: only combined into with one reduction operator, from any
  element.

A reduction through the parameter key at the top level of the kernel body
races with nothing, so by itself it counts as an ``Exclusive`` update. When the
same field is also reduced from a loop or through another key, that site joins
the field's ``Reduce(op)`` phase instead.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import PhaseError
from .typecheck import Access, TypedKernel


@dataclass(frozen=True)
class Phase:
    kind: str  # "ReadOnly" | "Exclusive" | "Reduce"
    op: str | None = None

    def __str__(self) -> str:
        return f"Reduce({self.op})" if self.kind == "Reduce" else self.kind

    @property
    def is_reduce(self) -> bool:
        return self.kind == "Reduce"


READ_ONLY = Phase("ReadOnly")
EXCLUSIVE = Phase("Exclusive")


class PhaseMap:
    """Per-kernel phases keyed by qualified field name and by global name.

    Lookups also accept a bare field name when it is unambiguous.
    """

    def __init__(self, fields: dict[str, Phase], globals: dict[str, Phase], key_fields=()):
        self.fields = fields
        self.globals = globals
        self.key_fields = frozenset(key_fields)

    def __getitem__(self, name: str) -> Phase:
        if name in self.fields:
            return self.fields[name]
        if name in self.globals:
            return self.globals[name]
        hits = [q for q in self.fields if q.rsplit(".", 1)[-1] == name]
        if len(hits) == 1:
            return self.fields[hits[0]]
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        try:
            self[name]
        except KeyError:
            return False
        return True

    def data_fields(self) -> dict[str, str]:
        """Short field name -> phase string, omitting key (connectivity) fields."""
        return {q.rsplit(".", 1)[-1]: str(p) for q, p in self.fields.items()
                if q not in self.key_fields}

    def as_dict(self) -> dict[str, str]:
        out = {q: str(p) for q, p in self.fields.items()}
        out.update({g: str(p) for g, p in self.globals.items()})
        return out

    def __repr__(self) -> str:
        return "PhaseMap(" + ", ".join(f"{k}: {v}" for k, v in self.as_dict().items()) + ")"

    def format(self) -> str:
        rows = [f"  {k}: {v}" for k, v in self.as_dict().items()]
        return "\n".join(rows) if rows else "  (no field accesses)"


def _where(a: Access) -> str:
    return f"{a.span.line}:{a.span.col}" if a.span else "?"


def _label(a: Access) -> str:
    if a.kind == "reduce":
        return f"reduction {a.op}= at {_where(a)}"
    how = "" if a.centered else "non-centered "
    return f"{how}{a.kind} at {_where(a)}"


def _conflict(name: str, a: Access, b: Access, why: str) -> PhaseError:
    return PhaseError(f"phase conflict on {name}: {_label(a)} and {_label(b)}; {why}",
                      field=name, sites=tuple(x for x in (a.span, b.span) if x))


def is_flexible(a: Access) -> bool:
    """A top-level reduction through the parameter key."""
    return a.kind == "reduce" and a.centered and not a.in_loop and not a.is_global


def field_phase(name: str, sites: list[Access]) -> Phase:
    reads = [a for a in sites if a.kind == "read"]
    writes = [a for a in sites if a.kind == "write"]
    reduces = [a for a in sites if a.kind == "reduce"]
    for w in writes:
        if not w.centered:
            raise PhaseError(f"write to {name} at {_where(w)} does not go through the kernel "
                             f"parameter; only centered writes are allowed",
                             field=name, sites=(w.span,) if w.span else ())
    strict = [a for a in reduces if not is_flexible(a)]
    if strict:
        ops = {a.op for a in reduces}
        if len(ops) > 1:
            a = reduces[0]
            b = next(x for x in reduces if x.op != a.op)
            raise _conflict(name, a, b, "a field can be reduced with only one operator per kernel")
        other = reads + writes
        if other:
            raise _conflict(name, strict[0], other[0],
                            "a reduced field cannot also be read or written in the same kernel")
        return Phase("Reduce", strict[0].op)
    if writes or reduces:
        for r in reads:
            if not r.centered:
                w = (writes or reduces)[0]
                raise _conflict(name, w, r,
                                "a field updated by a kernel may only be read through its parameter")
        return EXCLUSIVE
    return READ_ONLY


def global_phase(name: str, sites: list[Access]) -> Phase:
    reads = [a for a in sites if a.kind == "read"]
    reduces = [a for a in sites if a.kind == "reduce"]
    if not reduces:
        return READ_ONLY
    ops = {a.op for a in reduces}
    if len(ops) > 1:
        a = reduces[0]
        b = next(x for x in reduces if x.op != a.op)
        raise _conflict(name, a, b, "a global can be reduced with only one operator per kernel")
    if reads:
        raise _conflict(name, reduces[0], reads[0],
                        "a global cannot be read in a kernel that reduces it")
    return Phase("Reduce", reduces[0].op)


def infer_phases(tk: TypedKernel) -> PhaseMap:
    by_field: dict[str, list[Access]] = {}
    by_global: dict[str, list[Access]] = {}
    for a in tk.accesses:
        (by_global if a.is_global else by_field).setdefault(a.name, []).append(a)
    # check every field before failing so the diagnostic names all conflicts
    errors: list[PhaseError] = []
    fields, globals_ = {}, {}
    for out, fn, group in ((fields, field_phase, by_field), (globals_, global_phase, by_global)):
        for n, s in group.items():
            try:
                out[n] = fn(n, s)
            except PhaseError as exc:
                errors.append(exc)
    if errors:
        raise PhaseError.combine(errors)
    keys = [q for q, f in tk.field_objs.items() if f.type.is_key]
    return PhaseMap(fields, globals_, keys)
