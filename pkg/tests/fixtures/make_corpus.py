"""Deterministic fixture-corpus builder.

Grows random organic-like molecules (chains, branches, multiple bonds,
halogens, charged ammonium nitrogens, aromatic and aliphatic ring templates,
random ring closures) under the package's own valence model, then writes the
canonical string of each. Regenerate with:

    python tests/fixtures/make_corpus.py

The output ``corpus_1k.smi`` is committed; tests read the file, never this
script.
"""
from __future__ import annotations

import sys
from collections import deque
from pathlib import Path
from random import Random

from graphbpe.chem import parse_smiles, write_smiles
from graphbpe.chem.mol import Atom, MolGraph, check_molecule, implicit_hydrogens, make_bond

SEED = 20230811
COUNT = 1000

TEMPLATES = [
    "c1ccccc1",
    "c1ccncc1",
    "c1cc[nH]c1",
    "c1ccoc1",
    "c1ccsc1",
    "c1ccc2ccccc2c1",
    "C1CCCCC1",
    "C1CCCC1",
    "C1=CCCCC1",
]

# element -> maximum order sum in half-units for grown aliphatic atoms
MAX_X2 = {"C": 8, "N": 6, "O": 4, "S": 4, "F": 2, "Cl": 2, "Br": 2, "I": 2}


class Builder:
    def __init__(self, rng: Random):
        self.rng = rng
        self.atoms: list[dict] = []
        self.bonds: list[tuple[int, int, str]] = []
        self.order_x2: list[int] = []
        self.max_x2: list[int] = []
        self.adjacent: set[tuple[int, int]] = set()

    def add_atom(self, element, charge=0, aromatic=False, explicit_h=0, bracket=False,
                 max_x2=None) -> int:
        self.atoms.append(
            dict(element=element, charge=charge, aromatic=aromatic,
                 explicit_h=explicit_h, bracket=bracket)
        )
        self.order_x2.append(0)
        if max_x2 is None:
            max_x2 = 8 if charge else MAX_X2[element]
        self.max_x2.append(max_x2)
        return len(self.atoms) - 1

    def add_bond(self, a: int, b: int, order: str) -> None:
        x2 = {"single": 2, "double": 4, "triple": 6, "aromatic": 3}[order]
        self.bonds.append((a, b, order))
        self.order_x2[a] += x2
        self.order_x2[b] += x2
        self.adjacent.add((min(a, b), max(a, b)))

    def free_x2(self, i: int) -> int:
        return self.max_x2[i] - self.order_x2[i]

    def open_atoms(self, need_x2: int) -> list[int]:
        return [i for i in range(len(self.atoms)) if self.free_x2(i) >= need_x2]

    def import_template(self, smiles: str) -> list[int]:
        mol = parse_smiles(smiles)
        offset = len(self.atoms)
        for i, atom in enumerate(mol.atoms):
            # aromatic/ring atoms may only spend their implicit hydrogens
            self.add_atom(
                atom.element,
                charge=atom.formal_charge,
                aromatic=atom.aromatic,
                explicit_h=atom.explicit_h,
                bracket=atom.bracket,
                max_x2=mol.order_sum_x2(i) + 2 * atom.implicit_h,
            )
        for bond in mol.bonds:
            self.add_bond(offset + bond.a, offset + bond.b, bond.order)
        return list(range(offset, len(self.atoms)))

    def distance(self, a: int, b: int) -> int:
        seen = {a: 0}
        todo = deque([a])
        neighbors: dict[int, list[int]] = {}
        for x, y, _ in self.bonds:
            neighbors.setdefault(x, []).append(y)
            neighbors.setdefault(y, []).append(x)
        while todo:
            cur = todo.popleft()
            if cur == b:
                return seen[cur]
            for nxt in neighbors.get(cur, ()):
                if nxt not in seen:
                    seen[nxt] = seen[cur] + 1
                    todo.append(nxt)
        return 10**9

    def heavy_atoms(self) -> int:
        return len(self.atoms)

    def build(self) -> MolGraph:
        final_atoms = []
        for i, spec in enumerate(self.atoms):
            implicit = 0
            if not spec["bracket"]:
                implicit = implicit_hydrogens(
                    spec["element"], spec["charge"], self.order_x2[i]
                )
            final_atoms.append(
                Atom(
                    element=spec["element"],
                    formal_charge=spec["charge"],
                    aromatic=spec["aromatic"],
                    explicit_h=spec["explicit_h"],
                    implicit_h=implicit,
                    bracket=spec["bracket"],
                )
            )
        bonds = tuple(make_bond(a, b, order) for a, b, order in self.bonds)
        return MolGraph(tuple(final_atoms), bonds)


def grow_molecule(rng: Random) -> MolGraph | None:
    builder = Builder(rng)
    target = rng.randint(8, 26)
    if rng.random() < 0.55:
        builder.import_template(rng.choice(TEMPLATES))
    else:
        builder.add_atom("C")
    guard = 0
    while builder.heavy_atoms() < target and guard < 200:
        guard += 1
        roll = rng.random()
        if roll < 0.55:  # grow a single-bonded atom
            element = rng.choice(["C"] * 14 + ["N"] * 3 + ["O"] * 3 + ["S"])
            hosts = builder.open_atoms(2)
            if not hosts:
                break
            host = rng.choice(hosts)
            new = builder.add_atom(element)
            builder.add_bond(host, new, "single")
        elif roll < 0.65:  # double bond to a fresh atom
            hosts = [i for i in builder.open_atoms(4) if not builder.atoms[i]["aromatic"]]
            if hosts:
                host = rng.choice(hosts)
                new = builder.add_atom(rng.choice(["C", "C", "O", "N"]))
                builder.add_bond(host, new, "double")
        elif roll < 0.67:  # triple bond to a fresh atom
            hosts = [
                i
                for i in builder.open_atoms(6)
                if builder.atoms[i]["element"] == "C" and not builder.atoms[i]["aromatic"]
            ]
            if hosts:
                host = rng.choice(hosts)
                new = builder.add_atom(rng.choice(["C", "N"]))
                builder.add_bond(host, new, "triple")
        elif roll < 0.73:  # halogen
            hosts = builder.open_atoms(2)
            if hosts:
                host = rng.choice(hosts)
                new = builder.add_atom(rng.choice(["F", "Cl", "Cl", "Br"]))
                builder.add_bond(host, new, "single")
        elif roll < 0.85 and builder.heavy_atoms() + 5 <= target:  # ring template
            hosts = builder.open_atoms(2)
            if hosts:
                host = rng.choice(hosts)
                new_atoms = builder.import_template(rng.choice(TEMPLATES))
                anchors = [i for i in new_atoms if builder.free_x2(i) >= 2]
                if anchors:
                    builder.add_bond(host, rng.choice(anchors), "single")
        elif roll < 0.93:  # close a ring
            candidates = builder.open_atoms(2)
            rng.shuffle(candidates)
            closed = False
            for a in candidates[:6]:
                partners = [
                    b
                    for b in candidates
                    if b != a
                    and (min(a, b), max(a, b)) not in builder.adjacent
                    and 2 <= builder.distance(a, b) <= 6
                ]
                if partners:
                    builder.add_bond(a, rng.choice(partners), "single")
                    closed = True
                    break
            if not closed:
                continue
        elif roll < 0.955:  # charged ammonium nitrogen, at most one per molecule
            if any(a["charge"] for a in builder.atoms):
                continue
            hosts = [
                i
                for i in builder.open_atoms(2)
                if builder.atoms[i]["element"] == "C" and not builder.atoms[i]["aromatic"]
            ]
            if hosts:
                host = rng.choice(hosts)
                n = builder.add_atom("N", charge=1, bracket=True, max_x2=8)
                builder.add_bond(host, n, "single")
                for _ in range(rng.randint(0, 3)):
                    if builder.free_x2(n) >= 2:
                        c = builder.add_atom("C")
                        builder.add_bond(n, c, "single")
                if builder.free_x2(n) > 0:
                    builder.atoms[n]["explicit_h"] = builder.free_x2(n) // 2
                    builder.order_x2[n] += 2 * builder.atoms[n]["explicit_h"]
        else:  # plain chain growth
            hosts = builder.open_atoms(2)
            if not hosts:
                break
            new = builder.add_atom("C")
            builder.add_bond(rng.choice(hosts), new, "single")
    if builder.heavy_atoms() < 4:
        return None
    mol = builder.build()
    try:
        check_molecule(mol)
    except Exception:
        return None
    return mol


def main(out_path: Path) -> None:
    rng = Random(SEED)
    seen: set[str] = set()
    lines: list[str] = []
    while len(lines) < COUNT:
        mol = grow_molecule(rng)
        if mol is None:
            continue
        smiles = write_smiles(mol)
        if smiles in seen:
            continue
        reparsed = parse_smiles(smiles)
        assert write_smiles(reparsed) == smiles, smiles
        seen.add(smiles)
        lines.append(f"{smiles}\tfx{len(lines):04d}")
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} molecules to {out_path}")


if __name__ == "__main__":
    target = Path(__file__).parent / "corpus_1k.smi"
    if len(sys.argv) > 1:
        target = Path(sys.argv[1])
    main(target)
