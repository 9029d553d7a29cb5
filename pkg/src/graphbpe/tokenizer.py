"""Fragmentize molecules with a learned operation list and extract trajectories.

Applying the operations sequentially reproduces the exact partition the miner
saw during vocabulary construction, so the operation list acts as a tokenizer
for arbitrary molecules. Trajectories replay a molecule's assembly through
the generator's queue discipline for roundtrip testing and policy fitting.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from graphbpe.chem import MolGraph
from graphbpe.merging import MergingGraph, MotifInstance, extract_motifs
from graphbpe.miner import MergeOperation, motif_site_meta


def apply_operations(mol: MolGraph, ops: list[MergeOperation]) -> MergingGraph:
    """Run every merge operation in rank order over a fresh merging graph."""
    state = MergingGraph(mol)
    for op in ops:
        state.apply_operation(op.pattern)
    return state


@dataclass(frozen=True)
class BrokenBondLink:
    """One broken bond as (motif index, star atom) on each side."""

    motif_a: int
    star_a: int
    motif_b: int
    star_b: int
    order: str


@dataclass(frozen=True)
class Fragmentation:
    """Connection-aware motifs of one molecule plus how they were joined."""

    motifs: tuple[MotifInstance, ...]
    broken_bonds: tuple[BrokenBondLink, ...]

    def motif_strings(self) -> list[str]:
        return [m.smiles for m in self.motifs]


def fragmentize(mol: MolGraph, ops: list[MergeOperation]) -> Fragmentation:
    state = apply_operations(mol, ops)
    instances, broken = extract_motifs(state)
    ordered = sorted(instances.values(), key=lambda inst: inst.parent_atoms)
    index_of = {inst.fid: i for i, inst in enumerate(ordered)}
    links = []
    for bb in sorted(broken, key=lambda b: b.bond_index):
        inst_a = instances[bb.fid_a]
        inst_b = instances[bb.fid_b]
        links.append(
            BrokenBondLink(
                motif_a=index_of[bb.fid_a],
                star_a=inst_a.star_for_bond[bb.bond_index],
                motif_b=index_of[bb.fid_b],
                star_b=inst_b.star_for_bond[bb.bond_index],
                order=bb.order,
            )
        )
    return Fragmentation(tuple(ordered), tuple(links))


@dataclass(frozen=True)
class TrajectoryStep:
    """attach: add ``motif`` merging its star ``site`` with the focus.
    cyclize: merge the focus with the open site at ``target`` in the queue."""

    kind: str
    motif: str | None = None
    site: int | None = None
    target: int | None = None


@dataclass(frozen=True)
class Trajectory:
    start_motif: str
    steps: tuple[TrajectoryStep, ...]


def extract_trajectory(mol: MolGraph, ops: list[MergeOperation]) -> Trajectory:
    """Ground-truth assembly order: largest motif first, then queue discipline.

    Each popped site either attaches the motif on the other side of its broken
    bond or, when that motif is already placed, records a cyclization against
    the partner's position in the open-site queue.
    """
    frag = fragmentize(mol, ops)
    partner: dict[tuple[int, int], tuple[int, int, str]] = {}
    for link in frag.broken_bonds:
        partner[(link.motif_a, link.star_a)] = (link.motif_b, link.star_b, link.order)
        partner[(link.motif_b, link.star_b)] = (link.motif_a, link.star_a, link.order)

    def ordered_sites(motif_index: int) -> list[tuple[int, int]]:
        smiles = frag.motifs[motif_index].smiles
        return [(motif_index, star) for star, _, _ in motif_site_meta(smiles)]

    start_index = min(
        range(len(frag.motifs)),
        key=lambda i: (
            -frag.motifs[i].atom_count,
            frag.motifs[i].smiles,
            frag.motifs[i].parent_atoms,
        ),
    )
    placed = {start_index}
    queue: deque[tuple[int, int]] = deque(ordered_sites(start_index))
    steps: list[TrajectoryStep] = []
    while queue:
        focus = queue.popleft()
        other_index, other_star, _ = partner[focus]
        if other_index not in placed:
            steps.append(
                TrajectoryStep(
                    kind="attach",
                    motif=frag.motifs[other_index].smiles,
                    site=other_star,
                )
            )
            placed.add(other_index)
            queue.extend(
                site for site in ordered_sites(other_index) if site[1] != other_star
            )
        else:
            target = queue.index((other_index, other_star))
            steps.append(TrajectoryStep(kind="cyclize", target=target))
            del queue[target]
    return Trajectory(frag.motifs[start_index].smiles, tuple(steps))
