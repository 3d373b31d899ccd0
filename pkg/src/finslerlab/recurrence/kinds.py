"""Recurrence classes: which derivative is modelled by which basis tensors."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RecurrenceKind:
    tag: str
    derivative: str  # "R", "Ric", "C" or "CH"
    basis: tuple  # basis tensor ids, one per recurrence form
    formula: str

    @property
    def nforms(self) -> int:
        return len(self.basis)


KINDS = {
    k.tag: k
    for k in (
        RecurrenceKind("recurrent", "R", ("R",), "nabla R = A (x) R"),
        RecurrenceKind("generalized_recurrent", "R", ("R", "G"), "nabla R = A (x) R + B (x) G"),
        RecurrenceKind("ricci_recurrent", "Ric", ("Ric",), "nabla Ric = A (x) Ric"),
        RecurrenceKind("generalized_ricci_recurrent", "Ric", ("Ric", "g"), "nabla Ric = A (x) Ric + B (x) g"),
        RecurrenceKind("hyper_generalized", "R", ("R", "gRic"), "nabla R = A (x) R + B (x) (g ^ Ric)"),
        RecurrenceKind("concircular_recurrent", "C", ("C",), "nabla C = A (x) C"),
        RecurrenceKind("generalized_concircular", "C", ("C", "G"), "nabla C = A (x) C + B (x) G"),
        RecurrenceKind("conharmonic_recurrent", "CH", ("CH",), "nabla CH = A (x) CH"),
        RecurrenceKind("generalized_conharmonic", "CH", ("CH", "G"), "nabla CH = A (x) CH + B (x) G"),
        RecurrenceKind("conharmonic_symmetric", "CH", (), "nabla CH = 0"),
    )
}

KIND_TAGS = tuple(KINDS)


def get_kind(tag: str) -> RecurrenceKind:
    try:
        return KINDS[tag]
    except KeyError:
        raise ValueError(f"unknown recurrence kind {tag!r}; expected one of {KIND_TAGS}") from None
