"""Deterministic canonical atom ranking via iterative partition refinement.

Morgan-style: seed each atom with its local invariants, refine classes by the
sorted multiset of (bond order, neighbor class) signatures until a fixed
point, then break remaining ties by individualizing the lowest-index atom of
the lowest ambiguous class and re-refining. Refinement compares signatures
exactly (no hashing), so equal classes are structurally equal.
"""
from __future__ import annotations

from dataclasses import dataclass

from graphbpe.chem.mol import ORDER_X2, MolGraph


@dataclass(frozen=True)
class CanonicalRanking:
    """ranks: permutation of 0..n-1. symmetry_classes: pre-tie-break partition.

    Atoms sharing a symmetry class were indistinguishable by refinement alone;
    connection sites in one class are interchangeable attachment points.
    """

    ranks: tuple[int, ...]
    symmetry_classes: tuple[int, ...]


def _renumber(keys: list) -> list[int]:
    order = {key: idx for idx, key in enumerate(sorted(set(keys)))}
    return [order[key] for key in keys]


def _refine(mol: MolGraph, classes: list[int]) -> list[int]:
    n = len(classes)
    while True:
        signatures = []
        for i in range(n):
            nbr_sig = sorted(
                (ORDER_X2[mol.bonds[bidx].order], classes[nbr])
                for nbr, bidx in mol.neighbors(i)
            )
            signatures.append((classes[i], tuple(nbr_sig)))
        refined = _renumber(signatures)
        if len(set(refined)) == len(set(classes)):
            return refined
        classes = refined


def canonical_rank(mol: MolGraph) -> CanonicalRanking:
    n = len(mol.atoms)
    if n == 0:
        return CanonicalRanking((), ())
    seeds = [
        (a.element, a.formal_charge, a.aromatic, mol.degree(i), a.explicit_h)
        for i, a in enumerate(mol.atoms)
    ]
    classes = _refine(mol, _renumber(seeds))
    symmetry = tuple(classes)
    while len(set(classes)) < n:
        by_class: dict[int, list[int]] = {}
        for i, c in enumerate(classes):
            by_class.setdefault(c, []).append(i)
        target = min(c for c, members in by_class.items() if len(members) > 1)
        chosen = min(by_class[target])
        split = [(classes[i], 0 if i == chosen else 1) for i in range(n)]
        classes = _refine(mol, _renumber(split))
    return CanonicalRanking(tuple(classes), symmetry)
