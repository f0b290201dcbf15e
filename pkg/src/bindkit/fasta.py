"""Minimal FASTA reading and writing for protein sequences."""
from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "ProteinSequence",
    "FastaError",
    "NoHeaderError",
    "EmptyRecordError",
    "IllegalResidueError",
    "RESIDUE_ALPHABET",
    "parse_fasta",
    "format_fasta",
]

# 20 standard residues plus ambiguity codes X, B, Z and selenocysteine U.
STANDARD_RESIDUES = "ACDEFGHIKLMNPQRSTVWY"
RESIDUE_ALPHABET = frozenset(STANDARD_RESIDUES + "XBZU")


class FastaError(ValueError):
    pass


class NoHeaderError(FastaError):
    pass


class EmptyRecordError(FastaError):
    pass


class IllegalResidueError(FastaError):
    """Carries the record id and the 1-based residue position."""

    def __init__(self, record_id: str, position: int, residue: str):
        super().__init__(
            f"illegal residue {residue!r} at position {position} in {record_id!r}")
        self.record_id = record_id
        self.position = position
        self.residue = residue


@dataclass(frozen=True)
class ProteinSequence:
    id: str
    residues: str

    def __post_init__(self):
        if not self.id:
            raise EmptyRecordError("sequence id must be non-empty")
        if not self.residues:
            raise EmptyRecordError(f"record {self.id!r} has no residues")
        for pos, ch in enumerate(self.residues, start=1):
            if ch not in RESIDUE_ALPHABET:
                raise IllegalResidueError(self.id, pos, ch)

    @property
    def length(self) -> int:
        return len(self.residues)


def _finish_record(record_id: str, chunks: list[str], warnings: list[str]) -> ProteinSequence:
    residues = "".join(chunks).upper()
    if residues.endswith("*"):
        residues = residues[:-1]
        warnings.append(f"stripped terminal '*' from {record_id!r}")
    if not residues:
        raise EmptyRecordError(f"record {record_id!r} has no residues")
    return ProteinSequence(id=record_id, residues=residues)


def parse_fasta(text: str, warnings: list[str] | None = None) -> list[ProteinSequence]:
    """Parse a FASTA document into ProteinSequence records.

    Headers are '>' lines; the id is the token up to the first whitespace.
    Sequence lines are concatenated and upper-cased.  A single terminal '*'
    is stripped with a warning (collected into the optional warnings list).
    Residues outside the 24-letter alphabet raise IllegalResidueError with a
    1-based position; a record with no residues raises EmptyRecordError; data
    before the first header raises NoHeaderError.  A blank document yields
    an empty list.
    """
    if warnings is None:
        warnings = []
    record_id: str | None = None
    chunks: list[str] = []
    records: list[ProteinSequence] = []
    saw_header = False
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        if line.startswith(">"):
            if record_id is not None:
                records.append(_finish_record(record_id, chunks, warnings))
            saw_header = True
            record_id = line[1:].split(None, 1)[0] if line[1:].strip() else ""
            if not record_id:
                raise EmptyRecordError("header with empty id")
            chunks = []
        else:
            if not saw_header:
                raise NoHeaderError("sequence data before any '>' header")
            chunks.append(line)
    if not saw_header:
        # blank documents are empty, not malformed
        return records
    records.append(_finish_record(record_id, chunks, warnings))
    return records


def format_fasta(records: list[ProteinSequence], width: int = 60) -> str:
    """Serialize records back to FASTA text (round-trips with parse_fasta)."""
    if width < 1:
        raise ValueError("width must be at least 1")
    lines: list[str] = []
    for rec in records:
        lines.append(f">{rec.id}")
        for start in range(0, rec.length, width):
            lines.append(rec.residues[start:start + width])
    return "\n".join(lines) + "\n"
