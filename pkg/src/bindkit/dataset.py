"""Affinity dataset curation: ingest, dedup, split, featurize.

Affinities enter as inhibition constants in nanomoles and are converted to
decimal log units (10000 nM becomes exactly 4.0).  Records outside the
physically plausible window are dropped and tallied, duplicated
receptor-ligand pairs are merged to their median log-affinity, and the
deterministic shuffle-split assigns train/valid/test subsets with
largest-remainder rounding.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import statistics
from dataclasses import dataclass, replace

import numpy as np

from .fasta import FastaError, ProteinSequence, parse_fasta
from .ligand_features import ecfp, full_refinement_ids
from .protein_features import (
    DESCRIPTOR_LAYOUT,
    ResiduePropertyTable,
    default_table,
    receptor_descriptor,
)
from .smiles import Molecule, ParseError, ValenceError, from_smiles

__all__ = [
    "KiBounds",
    "RawRecord",
    "AffinityRecord",
    "Dataset",
    "DatasetError",
    "DatasetFormatError",
    "EmptyAfterFilteringError",
    "TooFewRecordsError",
    "DEFAULT_BOUNDS",
    "pair_key",
    "ingest",
    "split",
    "featurize_pairs",
    "affinity_histogram",
    "read_raw_tsv",
    "build_fasta_index",
    "write_dataset",
    "load_dataset",
    "file_digest",
]


class DatasetError(ValueError):
    pass


class DatasetFormatError(DatasetError):
    pass


class EmptyAfterFilteringError(DatasetError):
    pass


class TooFewRecordsError(DatasetError):
    pass


@dataclass(frozen=True)
class KiBounds:
    """Plausibility window for inhibition constants, in nM."""
    min_nm: float = 1e-3
    max_nm: float = 1e10

    def __post_init__(self):
        if not (self.min_nm > 0 and self.max_nm > self.min_nm):
            raise ValueError("need 0 < min_nm < max_nm")


DEFAULT_BOUNDS = KiBounds()

SPLIT_NAMES = ("train", "valid", "test")


@dataclass(frozen=True)
class RawRecord:
    receptor: str        # inline residue string, or "@file:ID" into a FASTA index
    ligand: str          # SMILES
    ki_nm: float


@dataclass(frozen=True)
class AffinityRecord:
    receptor: ProteinSequence
    ligand: Molecule
    log_ki: float
    pair_key: str
    split: str = "unassigned"


@dataclass(frozen=True)
class Dataset:
    records: tuple[AffinityRecord, ...]
    provenance: dict

    def subset(self, name: str) -> tuple[AffinityRecord, ...]:
        if name == "all":
            return self.records
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown subset {name!r}")
        return tuple(r for r in self.records if r.split == name)


def pair_key(receptor: ProteinSequence, ligand: Molecule) -> str:
    """Stable key for a receptor-ligand pair.

    The ligand contributes its refined atom-identifier multiset, so the key
    is invariant under atom reordering of the input SMILES; the receptor
    contributes its residue string.
    """
    ids = full_refinement_ids(ligand)
    payload = receptor.residues + "|" + ",".join(str(i) for i in ids)
    return hashlib.sha256(payload.encode("ascii")).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_fasta_index(text: str) -> dict[str, ProteinSequence]:
    return {rec.id: rec for rec in parse_fasta(text)}


def read_raw_tsv(path):
    """Read a raw affinity TSV (receptor_fasta, ligand_smiles, ki_nm).

    Structurally broken rows are dropped and tallied rather than fatal;
    a missing or wrong header is fatal (DatasetFormatError).
    Returns (records, drop tally, sha256 of the file).
    """
    drops = {"bad_row": 0, "bad_number": 0}
    records: list[RawRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header.split("\t") != ["receptor_fasta", "ligand_smiles", "ki_nm"]:
            raise DatasetFormatError(
                "expected header receptor_fasta<TAB>ligand_smiles<TAB>ki_nm")
        for raw in fh:
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != 3 or not cells[0] or not cells[1]:
                drops["bad_row"] += 1
                continue
            try:
                ki = float(cells[2])
            except ValueError:
                drops["bad_number"] += 1
                continue
            records.append(RawRecord(receptor=cells[0], ligand=cells[1], ki_nm=ki))
    return records, drops, file_digest(path)


def _inline_receptor(residues: str) -> ProteinSequence:
    rid = "seq-" + hashlib.sha256(residues.encode("ascii", "replace")).hexdigest()[:10]
    return ProteinSequence(id=rid, residues=residues)


def ingest(
    rows,
    bounds: KiBounds = DEFAULT_BOUNDS,
    fasta_index: dict[str, ProteinSequence] | None = None,
    source_digest: str = "",
    initial_drops: dict | None = None,
) -> Dataset:
    """Validate, convert and deduplicate raw affinity rows into a Dataset.

    Per-row failures are tallied by reason, never fatal.  Surviving rows are
    converted to log10 Ki and duplicate pairs (same pair_key) are merged to
    the median log value, keeping first-occurrence order.  An empty result
    raises EmptyAfterFilteringError.
    """
    drops = {
        "bad_row": 0, "bad_number": 0, "bad_receptor": 0,
        "unknown_receptor_ref": 0, "bad_smiles": 0,
        "nonpositive_ki": 0, "ki_out_of_bounds": 0,
    }
    if initial_drops:
        for k, v in initial_drops.items():
            drops[k] = drops.get(k, 0) + v

    n_input = 0
    stereo_total = 0
    groups: dict[str, list[float]] = {}
    heads: dict[str, tuple[ProteinSequence, Molecule]] = {}
    seq_cache: dict[str, ProteinSequence] = {}
    mol_cache: dict[str, Molecule] = {}
    key_cache: dict[tuple[str, str], str] = {}

    for row in rows:
        n_input += 1
        if not math.isfinite(row.ki_nm):
            drops["bad_number"] += 1
            continue
        if row.ki_nm <= 0:
            drops["nonpositive_ki"] += 1
            continue
        if not (bounds.min_nm <= row.ki_nm <= bounds.max_nm):
            drops["ki_out_of_bounds"] += 1
            continue
        if row.receptor.startswith("@file:"):
            ref = row.receptor[len("@file:"):]
            if fasta_index is None or ref not in fasta_index:
                drops["unknown_receptor_ref"] += 1
                continue
            seq = fasta_index[ref]
        else:
            residues = row.receptor.upper()
            seq = seq_cache.get(residues)
            if seq is None:
                try:
                    seq = _inline_receptor(residues)
                    receptor_descriptor(seq)   # validates the alphabet
                except (FastaError, KeyError):
                    drops["bad_receptor"] += 1
                    continue
                seq_cache[residues] = seq
        mol = mol_cache.get(row.ligand)
        if mol is None:
            try:
                mol = from_smiles(row.ligand)
            except (ParseError, ValenceError):
                drops["bad_smiles"] += 1
                continue
            mol_cache[row.ligand] = mol
        stereo_total += mol.stereo_warnings
        ck = (seq.residues, row.ligand)
        key = key_cache.get(ck)
        if key is None:
            key = pair_key(seq, mol)
            key_cache[ck] = key
        if key not in groups:
            groups[key] = []
            heads[key] = (seq, mol)
        groups[key].append(math.log10(row.ki_nm))

    if not groups:
        raise EmptyAfterFilteringError(
            f"no records survived filtering (drops: {drops})")

    records = []
    merged = 0
    for key, logs in groups.items():
        seq, mol = heads[key]
        merged += len(logs) - 1
        records.append(AffinityRecord(
            receptor=seq, ligand=mol,
            log_ki=logs[0] if len(logs) == 1 else float(statistics.median(logs)),
            pair_key=key))
    provenance = {
        "source_digest": source_digest,
        "n_input_rows": n_input,
        "drops": drops,
        "duplicates_merged": merged,
        "n_records": len(records),
        "ki_bounds_nm": [bounds.min_nm, bounds.max_nm],
        "stereo_warnings_total": stereo_total,
    }
    return Dataset(records=tuple(records), provenance=provenance)


def _largest_remainder(n: int, ratios) -> list[int]:
    raw = [n * r for r in ratios]
    base = [int(math.floor(x)) for x in raw]
    short = n - sum(base)
    order = sorted(range(len(ratios)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def split(dataset: Dataset, seed: int, ratios=(0.8, 0.1, 0.1)) -> Dataset:
    """Assign train/valid/test subsets by a seeded shuffle.

    Subset sizes come from largest-remainder rounding of the ratios (ties go
    to the earlier subset), so 1000 records at 80:10:10 give exactly
    800/100/100 and 999 give 799/100/100.  The permutation is drawn from
    PCG64 seeded as given; record order in the returned dataset is unchanged,
    only the split labels differ.
    """
    if len(ratios) != 3:
        raise ValueError("need exactly three ratios")
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be positive and sum to 1")
    n = len(dataset.records)
    if n < 3:
        raise TooFewRecordsError(f"cannot split {n} records three ways")
    sizes = _largest_remainder(n, ratios)
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    assignment = [""] * n
    start = 0
    for name, size in zip(SPLIT_NAMES, sizes):
        for i in perm[start:start + size]:
            assignment[i] = name
        start += size
    records = tuple(replace(r, split=assignment[i])
                    for i, r in enumerate(dataset.records))
    provenance = dict(dataset.provenance)
    provenance.update({
        "seed": seed,
        "ratios": list(ratios),
        "split_sizes": dict(zip(SPLIT_NAMES, sizes)),
        "prng": "pcg64-permutation",
    })
    return Dataset(records=records, provenance=provenance)


def _fingerprint_worker(job):
    source, radius, nbits = job
    return ecfp(from_smiles(source), radius=radius, nbits=nbits).bits


def featurize_pairs(
    dataset: Dataset,
    which: str = "all",
    radius: int = 2,
    nbits: int = 2048,
    table: ResiduePropertyTable | None = None,
    workers: int = 1,
):
    """Assemble the model matrix for a subset.

    Returns (X, y, columns, ids): X is float64 with the 78 receptor
    descriptor columns followed by nbits fingerprint columns, y is log10 Ki,
    ids are pair keys.  Featurization is cached per unique receptor and
    ligand, and row order follows dataset record order.  workers > 1 farms
    the unique-ligand fingerprints out to a process pool; results are
    identical to the serial path since assembly order never changes.
    """
    table = table or default_table()
    records = dataset.subset(which)
    if not records:
        raise EmptyAfterFilteringError(f"subset {which!r} is empty")
    desc_cache: dict[str, np.ndarray] = {}
    fp_cache: dict[str, np.ndarray] = {}
    if workers > 1:
        unique: list[str] = []
        seen = set()
        for rec in records:
            if rec.ligand.source not in seen:
                seen.add(rec.ligand.source)
                unique.append(rec.ligand.source)
        import multiprocessing
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            jobs = [(src, radius, nbits) for src in unique]
            for src, bits in zip(unique, pool.map(_fingerprint_worker, jobs)):
                fp_cache[src] = bits.astype(np.float64)
    n_desc = len(DESCRIPTOR_LAYOUT)
    X = np.empty((len(records), n_desc + nbits), dtype=np.float64)
    y = np.empty(len(records), dtype=np.float64)
    ids = []
    for i, rec in enumerate(records):
        d = desc_cache.get(rec.receptor.residues)
        if d is None:
            d = receptor_descriptor(rec.receptor, table).vector
            desc_cache[rec.receptor.residues] = d
        f = fp_cache.get(rec.ligand.source)
        if f is None:
            f = ecfp(rec.ligand, radius=radius, nbits=nbits).bits.astype(np.float64)
            fp_cache[rec.ligand.source] = f
        X[i, :n_desc] = d
        X[i, n_desc:] = f
        y[i] = rec.log_ki
        ids.append(rec.pair_key)
    columns = tuple(DESCRIPTOR_LAYOUT) + tuple(f"fp_{j}" for j in range(nbits))
    return X, y, columns, tuple(ids)


def affinity_histogram(dataset: Dataset, bin_width: float = 0.5):
    """Counts of records per log-affinity bin.

    Bins are [k*w, (k+1)*w) by floor division; returns (bin_lefts, counts)
    covering the occupied range, counts summing to the record count.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    logs = np.array([r.log_ki for r in dataset.records])
    idx = np.floor(logs / bin_width).astype(int)
    lo, hi = idx.min(), idx.max()
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    lefts = (np.arange(lo, hi + 1)) * bin_width
    return lefts, counts


# --- on-disk curated dataset -------------------------------------------------

_TSV_COLUMNS = ("pair_key", "split", "receptor_id", "receptor_fasta",
                "ligand_smiles", "ki_nm", "log_ki")


def write_dataset(dataset: Dataset, outdir) -> None:
    """Write dataset.tsv and provenance.json into a directory.

    Floats are serialized with repr (shortest round-trip), keys are sorted,
    nothing time-dependent is recorded: identical datasets produce
    byte-identical files.
    """
    os.makedirs(outdir, exist_ok=True)
    rows = [_TSV_COLUMNS]
    for rec in dataset.records:
        cells = (rec.pair_key, rec.split, rec.receptor.id, rec.receptor.residues,
                 rec.ligand.source, repr(10.0 ** rec.log_ki), repr(rec.log_ki))
        for cell in cells:
            if "\t" in cell or "\n" in cell:
                raise DatasetFormatError(f"field contains separator: {cell!r}")
        rows.append(cells)
    with open(os.path.join(outdir, "dataset.tsv"), "w", encoding="utf-8",
              newline="\n") as fh:
        for cells in rows:
            fh.write("\t".join(cells) + "\n")
    with open(os.path.join(outdir, "provenance.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(dataset.provenance, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_dataset(outdir) -> Dataset:
    """Reload a curated dataset directory written by write_dataset."""
    tsv = os.path.join(outdir, "dataset.tsv")
    with open(tsv, "r", encoding="utf-8") as fh:
        header = tuple(fh.readline().rstrip("\n").split("\t"))
        if header != _TSV_COLUMNS:
            raise DatasetFormatError(f"unexpected dataset columns {header}")
        records = []
        for line_no, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != len(_TSV_COLUMNS):
                raise DatasetFormatError(f"bad row at line {line_no}")
            key, split_name, rid, residues, smiles, _ki, log_ki = cells
            if split_name not in SPLIT_NAMES + ("unassigned",):
                raise DatasetFormatError(f"bad split {split_name!r} at line {line_no}")
            records.append(AffinityRecord(
                receptor=ProteinSequence(id=rid, residues=residues),
                ligand=from_smiles(smiles),
                log_ki=float(log_ki),
                pair_key=key,
                split=split_name,
            ))
    prov_path = os.path.join(outdir, "provenance.json")
    provenance = {}
    if os.path.exists(prov_path):
        with open(prov_path, "r", encoding="utf-8") as fh:
            provenance = json.load(fh)
    if not records:
        raise EmptyAfterFilteringError("dataset file holds no records")
    return Dataset(records=tuple(records), provenance=provenance)
