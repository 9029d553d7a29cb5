"""Command-line interface: mine, fragmentize, generate, eval, inspect-vocab.

Exit codes: 0 success, 2 usage error, 3 input parse error, 4 artifact
format/version error. All outputs are deterministic under fixed flags and
seed, independent of the thread count.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from graphbpe import __version__
from graphbpe.chem import parse_smiles, write_smiles
from graphbpe.chem.mol import Atom, MolGraph
from graphbpe.errors import (
    CorpusError,
    FileFormatError,
    FormatVersionError,
    GraphBpeError,
    SmilesSyntaxError,
    ValenceError,
)
from graphbpe.fileio import (
    load_corpus,
    read_operations,
    read_smiles_lines,
    read_vocabulary,
    write_attachments,
    write_molecules,
    write_operations,
    write_trajectories,
    write_vocabulary,
)
from graphbpe.generator import DISTRIBUTIONAL, GREEDY, FrequencyPolicy, generate
from graphbpe.metrics import evaluate, format_report
from graphbpe.miner import mine_corpus
from graphbpe.tokenizer import extract_trajectory, fragmentize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_FORMAT = 4

SMILES_SUBSET_NOTE = (
    "SMILES subset: organic-subset atoms B C N O P S F Cl Br I, aromatic "
    "b c n o p s, '*' sites, bracket atoms with H count and charge in "
    "[-2,+2], bonds - = # :, branches, ring-closure digits and %nn. "
    "Stereo, isotopes, and multi-component dots are rejected."
)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one invocation; input paths checked up front."""

    subcommand: str
    corpus: Path | None = None
    ops: Path | None = None
    vocab: Path | None = None
    attach: Path | None = None
    generated: Path | None = None
    train: Path | None = None
    report: Path | None = None
    trajectories: Path | None = None
    out: Path | None = None
    num_ops: int = 0
    num: int = 0
    seed: int = 0
    mode: str = GREEDY
    top_k: int | None = None
    temperature: float = 1.0
    cyclize_weight: float = 1.0
    threads: int = 1
    max_steps: int = 100


def _input_path(value: str | None, flag: str) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    if not path.is_file():
        raise UsageError(f"{flag}: no such file: {path}")
    return path


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    sub = args.subcommand
    num_ops = getattr(args, "num_ops", 0)
    threads = getattr(args, "threads", 1)
    num = getattr(args, "num", 0)
    temperature = getattr(args, "temperature", 1.0)
    cyclize_weight = getattr(args, "cyclize_weight", 1.0)
    top_k = getattr(args, "top_k", None)
    max_steps = getattr(args, "max_steps", 100)
    if num_ops < 0:
        raise UsageError("--num-ops must be >= 0")
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    if num < 0:
        raise UsageError("--num must be >= 0")
    if temperature <= 0:
        raise UsageError("--temperature must be > 0")
    if cyclize_weight < 0:
        raise UsageError("--cyclize-weight must be >= 0")
    if top_k is not None and top_k < 1:
        raise UsageError("--top-k must be >= 1")
    if max_steps < 1:
        raise UsageError("--max-steps must be >= 1")
    vocab = _input_path(getattr(args, "vocab", None), "--vocab")
    attach = None
    if sub == "generate":
        attach_arg = getattr(args, "attach", None)
        attach = Path(attach_arg) if attach_arg else vocab.parent / "attach.txt"
        if not attach.is_file():
            raise UsageError(f"attachment table not found: {attach}")
    mode_arg = getattr(args, "mode", "greedy")
    return RunConfig(
        subcommand=sub,
        corpus=_input_path(getattr(args, "corpus", None), "--corpus"),
        ops=_input_path(getattr(args, "ops", None), "--ops"),
        vocab=vocab,
        attach=attach,
        generated=_input_path(getattr(args, "generated", None), "--generated"),
        train=_input_path(getattr(args, "train", None), "--train"),
        report=Path(args.report) if getattr(args, "report", None) else None,
        trajectories=Path(args.trajectories) if getattr(args, "trajectories", None) else None,
        out=Path(args.out) if getattr(args, "out", None) else None,
        num_ops=num_ops,
        num=num,
        seed=getattr(args, "seed", 0),
        mode=GREEDY if mode_arg == "greedy" else DISTRIBUTIONAL,
        top_k=top_k,
        temperature=temperature,
        cyclize_weight=cyclize_weight,
        threads=threads,
        max_steps=max_steps,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphbpe",
        description="Connection-aware motif mining and molecule generation.",
        epilog=SMILES_SUBSET_NOTE,
    )
    parser.add_argument("--version", action="version", version=f"graphbpe {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    mine = sub.add_parser("mine", help="learn merge operations and build the vocabulary")
    mine.add_argument("--corpus", required=True, help="training corpus (.smi)")
    mine.add_argument("--num-ops", type=int, required=True, metavar="K",
                      help="number of merge operations to learn")
    mine.add_argument("--out", required=True, help="output directory for the artifacts")
    mine.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                      help="worker processes for counting (default: CPU count)")

    frag = sub.add_parser("fragmentize", help="tokenize molecules with learned operations")
    frag.add_argument("--corpus", required=True)
    frag.add_argument("--ops", required=True, help="operations file from 'mine'")
    frag.add_argument("--out", help="output path (default: stdout)")
    frag.add_argument("--trajectories", help="also write assembly trajectories (JSONL)")

    gen = sub.add_parser("generate", help="generate molecules with the frequency policy")
    gen.add_argument("--vocab", required=True, help="vocabulary file from 'mine'")
    gen.add_argument("--attach", help="attachment table (default: attach.txt next to --vocab)")
    gen.add_argument("--ops", help="operations file; validated if given")
    gen.add_argument("--num", type=int, required=True, help="number of molecules")
    gen.add_argument("--mode", choices=["greedy", "sample"], default="sample")
    gen.add_argument("--top-k", type=int, default=None,
                     help="sample from the k best candidates only")
    gen.add_argument("--temperature", type=float, default=1.0)
    gen.add_argument("--cyclize-weight", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--max-steps", type=int, default=100)
    gen.add_argument("--out", required=True, help="output .smi path")

    ev = sub.add_parser("eval", help="distribution-learning metrics")
    ev.add_argument("--generated", required=True)
    ev.add_argument("--train", required=True)
    ev.add_argument("--report", required=True, help="report output path")

    insp = sub.add_parser("inspect-vocab", help="list motifs sorted by frequency")
    insp.add_argument("--vocab", required=True)
    return parser


def _cmd_mine(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    _, mols = load_corpus(cfg.corpus)
    result = mine_corpus(mols, cfg.num_ops, threads=cfg.threads)
    write_operations(cfg.out / "ops.txt", result.operations)
    write_vocabulary(cfg.out / "vocab.txt", result.vocabulary)
    write_attachments(cfg.out / "attach.txt", result.vocabulary)
    print(f"molecules={len(mols)}")
    print(f"operations={len(result.operations)}")
    print(f"motifs={len(result.vocabulary)}")
    print(f"mean_fragments_per_molecule={result.mean_fragments_per_molecule:.3f}")
    return EXIT_OK


def _cmd_fragmentize(cfg: RunConfig) -> int:
    ops = read_operations(cfg.ops)
    ids, mols = load_corpus(cfg.corpus)
    lines = []
    trajectories = []
    for mol_id, mol in zip(ids, mols):
        frag = fragmentize(mol, ops)
        lines.append(f"{mol_id}\t" + "|".join(frag.motif_strings()))
        if cfg.trajectories:
            trajectories.append(extract_trajectory(mol, ops))
    text = "".join(line + "\n" for line in lines)
    if cfg.out:
        cfg.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if cfg.trajectories:
        write_trajectories(cfg.trajectories, trajectories)
    return EXIT_OK


def _cmd_generate(cfg: RunConfig) -> int:
    if cfg.ops:
        read_operations(cfg.ops)
    vocab = read_vocabulary(cfg.vocab, cfg.attach)
    policy = FrequencyPolicy(
        vocab, cyclize_weight=cfg.cyclize_weight, temperature=cfg.temperature
    )
    molecules, report = generate(
        vocab,
        policy,
        cfg.num,
        mode=cfg.mode,
        seed=cfg.seed,
        top_k=cfg.top_k,
        max_steps=cfg.max_steps,
    )
    write_molecules(cfg.out, [write_smiles(m) for m in molecules])
    failures = ",".join(f"{k}={v}" for k, v in sorted(report.failures.items())) or "none"
    print(
        f"requested={report.requested} emitted={report.emitted} "
        f"aborted={report.aborted} failures={failures}",
        file=sys.stderr,
    )
    return EXIT_OK


def _parse_molecules_lenient(path: Path) -> list[MolGraph]:
    """Parse for evaluation: structurally bad lines count as invalid."""
    molecules = []
    for _, smiles, _ in read_smiles_lines(path):
        try:
            molecules.append(parse_smiles(smiles, validate=False))
        except GraphBpeError:
            # placeholder that can never pass the valence check
            molecules.append(MolGraph((Atom("C", formal_charge=2),), ()))
    return molecules


def _cmd_eval(cfg: RunConfig) -> int:
    generated = _parse_molecules_lenient(cfg.generated)
    _, training = load_corpus(cfg.train)
    report = evaluate(generated, training)
    text = format_report(report)
    cfg.report.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_inspect_vocab(cfg: RunConfig) -> int:
    vocab = read_vocabulary(cfg.vocab)
    motifs = sorted(vocab.ordered_motifs(), key=lambda m: (-m.frequency, m.smiles))
    print(f"{len(motifs)} motifs")
    for motif in motifs:
        sites = ",".join(f"{star}:{cls}:{order}" for star, order, cls in motif.sites) or "-"
        print(f"{motif.frequency}\t{motif.smiles}\t{sites}")
    return EXIT_OK


_COMMANDS = {
    "mine": _cmd_mine,
    "fragmentize": _cmd_fragmentize,
    "generate": _cmd_generate,
    "eval": _cmd_eval,
    "inspect-vocab": _cmd_inspect_vocab,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatVersionError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (CorpusError, FileFormatError, SmilesSyntaxError, ValenceError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GraphBpeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
