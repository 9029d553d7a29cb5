"""Molecular graphs, SMILES subset parsing/writing, and canonical ranking."""

from graphbpe.chem.canon import CanonicalRanking, canonical_rank
from graphbpe.chem.mol import (
    AROMATIC,
    ATOMIC_WEIGHTS,
    BOND_ORDERS,
    DOUBLE,
    HALOGENS,
    ORDER_X2,
    SINGLE,
    STAR,
    TRIPLE,
    Atom,
    Bond,
    MolGraph,
    check_molecule,
    failing_aromatic_rings,
    implicit_hydrogens,
    make_bond,
    molecular_weight,
    ring_bonds,
    valence_check,
)
from graphbpe.chem.smiles import parse_smiles, write_smiles, write_smiles_with_order

__all__ = [
    "AROMATIC",
    "ATOMIC_WEIGHTS",
    "Atom",
    "BOND_ORDERS",
    "Bond",
    "CanonicalRanking",
    "DOUBLE",
    "HALOGENS",
    "MolGraph",
    "ORDER_X2",
    "SINGLE",
    "STAR",
    "TRIPLE",
    "canonical_rank",
    "check_molecule",
    "failing_aromatic_rings",
    "implicit_hydrogens",
    "make_bond",
    "molecular_weight",
    "parse_smiles",
    "ring_bonds",
    "valence_check",
    "write_smiles",
    "write_smiles_with_order",
]
