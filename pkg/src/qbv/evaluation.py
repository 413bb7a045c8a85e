"""Retrieval metrics, the coarse- and fine-grained evaluation protocols,
manifest ingestion, and a synthetic paired-audio generator that makes the
whole pipeline verifiable at desk scale.

A "system" under evaluation is any object with

    fit(pairs)                      pairs: [(ref_id, ref_clip, [imit_clip, ...])]
    rank(imitation_clip, candidate_ids) -> ids ordered best first

Systems that need no training (signal-processing baselines, oracles) may
make fit a no-op.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioClip, conform_length, load_audio, write_wav


def mrr(ranks) -> float:
    """Mean reciprocal rank: mean of 1/rank over the query set."""
    ranks = list(ranks)
    if not ranks:
        raise ValueError("empty rank list")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks must be >= 1")
    return float(np.mean([1.0 / r for r in ranks]))


def recall_at_k(ranks, k: int) -> float:
    """Fraction of queries whose target landed within the top k."""
    ranks = list(ranks)
    if not ranks:
        raise ValueError("empty rank list")
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(np.mean([1.0 if r <= k else 0.0 for r in ranks]))


@dataclass
class EvalReport:
    mrr: float
    mr_at: dict
    per_query_ranks: list           # [(imitation id, rank)]
    protocol: str

    @classmethod
    def from_ranks(cls, labelled_ranks: list, protocol: str, ks=(1, 2)) -> "EvalReport":
        ranks = [r for _, r in labelled_ranks]
        return cls(mrr=mrr(ranks),
                   mr_at={k: recall_at_k(ranks, k) for k in ks},
                   per_query_ranks=labelled_ranks,
                   protocol=protocol)

    def to_dict(self) -> dict:
        return {"protocol": self.protocol, "mrr": self.mrr,
                "mr_at": {str(k): v for k, v in self.mr_at.items()},
                "per_query_ranks": self.per_query_ranks}


@dataclass
class CoarseResult:
    folds: list                     # per-fold EvalReports

    def summary(self) -> dict:
        out = {"protocol": "coarse", "n_folds": len(self.folds)}
        vals = {"mrr": [f.mrr for f in self.folds]}
        for k in self.folds[0].mr_at:
            vals[f"mr_at_{k}"] = [f.mr_at[k] for f in self.folds]
        for name, xs in vals.items():
            out[f"mean_{name}"] = float(np.mean(xs))
            out[f"std_{name}"] = float(np.std(xs))
        return out


# --- manifests ---------------------------------------------------------------

@dataclass
class Manifest:
    """Dataset description: references, imitations pointing at their
    reference, optional fold assignments and hard-negative lists."""

    references: list = field(default_factory=list)   # {id, path, class?, fold?, hard_negatives?}
    imitations: list = field(default_factory=list)   # {id, path, ref_id}

    def validate(self) -> None:
        ref_ids = [r["id"] for r in self.references]
        if len(set(ref_ids)) != len(ref_ids):
            raise ValueError("duplicate reference id in manifest")
        known = set(ref_ids)
        for im in self.imitations:
            if im["ref_id"] not in known:
                raise ValueError(f"imitation {im['id']!r} points at unknown reference {im['ref_id']!r}")
        with_fold = [r for r in self.references if r.get("fold") is not None]
        if with_fold and len(with_fold) != len(self.references):
            raise ValueError("folds must cover every reference or none")
        for r in self.references:
            for neg in r.get("hard_negatives") or []:
                if neg not in known:
                    raise ValueError(f"hard negative {neg!r} of {r['id']!r} is unknown")
                if neg == r["id"]:
                    raise ValueError(f"reference {r['id']!r} lists itself as a hard negative")

    @property
    def folds(self) -> dict | None:
        if not self.references or self.references[0].get("fold") is None:
            return None
        return {r["id"]: r["fold"] for r in self.references}

    @property
    def hard_negatives(self) -> dict | None:
        out = {r["id"]: r["hard_negatives"] for r in self.references
               if r.get("hard_negatives")}
        return out or None

    def imitations_of(self, ref_id: str) -> list:
        return [im for im in self.imitations if im["ref_id"] == ref_id]


def write_manifest(path, manifest: Manifest) -> None:
    """JSON-lines, one record per entity, record["type"] in
    {"reference", "imitation"}."""
    manifest.validate()
    with open(path, "w") as fh:
        for r in manifest.references:
            fh.write(json.dumps({"type": "reference", **r}) + "\n")
        for im in manifest.imitations:
            fh.write(json.dumps({"type": "imitation", **im}) + "\n")


def read_manifest(path) -> Manifest:
    refs, imits = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            kind = rec.pop("type", None)
            if kind == "reference":
                refs.append(rec)
            elif kind == "imitation":
                imits.append(rec)
            else:
                raise ValueError(f"{path}:{lineno}: unknown record type {kind!r}")
    m = Manifest(references=refs, imitations=imits)
    m.validate()
    return m


class ClipStore:
    """id -> conformed AudioClip, from memory or lazily from manifest paths."""

    def __init__(self, sample_rate: int, duration: float,
                 clips: dict | None = None, paths: dict | None = None, root: str = "."):
        self.sample_rate = sample_rate
        self.duration = duration
        self._cache = dict(clips or {})
        self._paths = dict(paths or {})
        self._root = root

    @classmethod
    def from_manifest(cls, manifest: Manifest, sample_rate: int, duration: float,
                      root: str = ".") -> "ClipStore":
        paths = {r["id"]: r["path"] for r in manifest.references}
        paths.update({im["id"]: im["path"] for im in manifest.imitations})
        return cls(sample_rate, duration, paths=paths, root=root)

    def get(self, clip_id: str) -> AudioClip:
        if clip_id not in self._cache:
            if clip_id not in self._paths:
                raise KeyError(f"unknown clip id {clip_id!r}")
            clip = load_audio(os.path.join(self._root, self._paths[clip_id]),
                              target_rate=self.sample_rate, clip_id=clip_id)
            self._cache[clip_id] = conform_length(clip, self.duration)
        return self._cache[clip_id]


# --- protocols ---------------------------------------------------------------

def _pairs_for(manifest: Manifest, store: ClipStore, ref_ids) -> list:
    pairs = []
    for rid in ref_ids:
        imits = manifest.imitations_of(rid)
        if imits:
            pairs.append((rid, store.get(rid), [store.get(im["id"]) for im in imits]))
    return pairs


def run_coarse(manifest: Manifest, store: ClipStore, system_factory,
               candidates: str = "fold") -> CoarseResult:
    """10-fold cross-validated coarse retrieval.

    For each fold: a fresh system is trained on the other folds' pairs,
    then every imitation of the fold's references queries against the
    fold's references (or all references with candidates="all")."""
    folds = manifest.folds
    if folds is None:
        raise ValueError("manifest has no fold assignments")
    if candidates not in ("fold", "all"):
        raise ValueError("candidates must be 'fold' or 'all'")
    fold_ids = sorted(set(folds.values()))
    all_refs = [r["id"] for r in manifest.references]

    reports = []
    for f in fold_ids:
        eval_refs = sorted(rid for rid, fi in folds.items() if fi == f)
        if len(eval_refs) < 2:
            raise ValueError(f"fold {f} has fewer than 2 references")
        train_refs = [rid for rid in all_refs if folds[rid] != f]
        train_pairs = _pairs_for(manifest, store, train_refs)

        eval_imits = [im for im in manifest.imitations if im["ref_id"] in set(eval_refs)]
        train_imit_ids = {im["id"] for rid in train_refs for im in manifest.imitations_of(rid)}
        leaked = {im["id"] for im in eval_imits} & train_imit_ids
        if leaked:
            raise AssertionError(f"evaluation imitations leaked into training: {sorted(leaked)[:5]}")

        system = system_factory()
        system.fit(train_pairs)
        candidate_ids = eval_refs if candidates == "fold" else sorted(all_refs)
        labelled = []
        for im in eval_imits:
            ranked = system.rank(store.get(im["id"]), candidate_ids)
            labelled.append((im["id"], ranked.index(im["ref_id"]) + 1))
        reports.append(EvalReport.from_ranks(labelled, protocol="coarse"))
    return CoarseResult(folds=reports)


def split_by_reference(manifest: Manifest, fraction: float, seed: int):
    """Seeded split of reference ids into (train, eval) halves."""
    ref_ids = sorted(r["id"] for r in manifest.references)
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(ref_ids)))
    n_train = int(round(fraction * len(ref_ids)))
    train = sorted(ref_ids[i] for i in order[:n_train])
    evaluate = sorted(ref_ids[i] for i in order[n_train:])
    return train, evaluate


def run_fine(manifest: Manifest, store: ClipStore, system_factory,
             train_fraction: float = 0.5, seed: int = 0) -> EvalReport:
    """Hard-negative retrieval: each imitation ranks its exact target among
    the target plus its hard negatives (about ten candidates).

    The system is trained on a seeded split of the references; the
    remaining references' imitations are evaluated."""
    negatives = manifest.hard_negatives
    if negatives is None:
        raise ValueError("manifest has no hard negatives")
    train_refs, eval_refs = split_by_reference(manifest, train_fraction, seed)
    system = system_factory()
    system.fit(_pairs_for(manifest, store, train_refs))

    labelled = []
    for rid in eval_refs:
        if rid not in negatives:
            continue
        candidate_ids = sorted({rid, *negatives[rid]})
        if rid not in candidate_ids:
            raise AssertionError(f"target {rid!r} missing from its candidate set")
        for im in manifest.imitations_of(rid):
            ranked = system.rank(store.get(im["id"]), candidate_ids)
            labelled.append((im["id"], ranked.index(rid) + 1))
    if not labelled:
        raise ValueError("no evaluable imitations (no hard negatives on eval references)")
    return EvalReport.from_ranks(labelled, protocol="fine")


# --- synthetic data ----------------------------------------------------------

_FAMILIES = ("tone", "am", "noise")


def _render_class(family: str, params: dict, n: int, sample_rate: int,
                  rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / sample_rate
    rate = params["mod_rate"]
    if family == "tone":
        x = np.zeros(n)
        for p in range(1, params["partials"] + 1):
            fp = params["f0"] * p
            if fp > 0.45 * sample_rate:
                break
            x += np.sin(2 * np.pi * fp * t + params["phases"][p - 1]) / p
        x *= 1.0 - 0.4 + 0.4 * np.sin(2 * np.pi * rate * t)
    elif family == "am":
        x = np.sin(2 * np.pi * params["f0"] * t) * (0.5 + 0.5 * np.cos(2 * np.pi * rate * t))
    else:
        spectrum = np.fft.rfft(rng.standard_normal(n))
        freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
        half_bw = 2.0 ** (params["bandwidth_oct"] / 2.0)
        band = (freqs >= params["f0"] / half_bw) & (freqs <= params["f0"] * half_bw)
        x = np.fft.irfft(spectrum * band, n)
        x *= 1.0 - 0.4 + 0.4 * np.sin(2 * np.pi * rate * t)
    peak = np.max(np.abs(x))
    return 0.5 * x / peak if peak > 0 else x


def _imitation_color(x: np.ndarray, sample_rate: int) -> np.ndarray:
    """Fixed voice-like coloration applied to every imitation: soft
    saturation (adds harmonics) plus a broad log-frequency emphasis around
    800 Hz.  This creates the systematic reference/imitation domain gap
    that motivates separate encoder towers."""
    y = np.tanh(2.5 * x)
    spectrum = np.fft.rfft(y)
    freqs = np.fft.rfftfreq(len(y), d=1.0 / sample_rate)
    weight = 0.3 + 0.7 * np.exp(-0.5 * (np.log(np.maximum(freqs, 1e-6) / 800.0) / 0.9) ** 2)
    return np.fft.irfft(spectrum * weight, len(y))


def _class_recipe(i: int, rng: np.random.Generator) -> dict:
    family = _FAMILIES[i % 3]
    grid = i // 3
    f0 = 150.0 * (2400.0 / 150.0) ** ((grid % 11) / 10.0) * (1.0 + 0.01 * rng.standard_normal())
    return {
        "family": family,
        "f0": f0,
        "mod_rate": 1.0 + 0.7 * i,
        "partials": 2 + (grid % 3),
        "bandwidth_oct": 0.3 + 0.15 * grid,
        "phases": rng.uniform(0, 2 * np.pi, size=8),
    }


def gen_synthetic(n_classes: int, imitations_per_class: int, seed: int,
                  sample_rate: int = 8000, duration: float = 2.0,
                  n_folds: int = 10, out_dir: str | None = None):
    """Deterministic paired dataset: one clean reference per class plus
    pitch-jittered, time-shifted, noise-added imitations.

    Each class is a tone / AM-tone / noise-band recipe with a distinct
    temporal modulation rate, so classes stay separable both for the
    spectral encoders and for the shift-invariant 2DFT baseline.  Returns
    (manifest, store); with out_dir set, WAV files and manifest.jsonl are
    also written there.
    """
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if imitations_per_class < 1:
        raise ValueError("need at least 1 imitation per class")
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))

    refs, imits, clips = [], [], {}
    for i in range(n_classes):
        recipe = _class_recipe(i, rng)
        rid = f"r{i:03d}"
        clips[rid] = AudioClip(_render_class(recipe["family"], recipe, n, sample_rate, rng),
                               sample_rate, id=rid)
        refs.append({"id": rid, "path": f"audio/{rid}.wav", "class": recipe["family"],
                     "fold": i % n_folds})
        for j in range(imitations_per_class):
            jittered = dict(recipe)
            jittered["f0"] = recipe["f0"] * (1.0 + rng.uniform(-0.03, 0.03))
            jittered["mod_rate"] = recipe["mod_rate"] * (1.0 + rng.uniform(-0.015, 0.015))
            x = _render_class(recipe["family"], jittered, n, sample_rate, rng)
            x = _imitation_color(x, sample_rate)
            peak = np.max(np.abs(x))
            if peak > 0:
                x = 0.5 * x / peak
            x = np.roll(x, int(rng.integers(-n // 8, n // 8 + 1)))
            snr_db = rng.uniform(10.0, 20.0)
            noise = rng.standard_normal(n)
            noise *= np.sqrt(np.mean(x ** 2) / 10 ** (snr_db / 10.0)) / np.sqrt(np.mean(noise ** 2))
            x = np.clip(x + noise, -1.0, 1.0)
            iid = f"{rid}_i{j}"
            clips[iid] = AudioClip(x, sample_rate, id=iid)
            imits.append({"id": iid, "path": f"audio/{iid}.wav", "ref_id": rid})

    # hard negatives: same family, closest modulation rates
    by_family = {}
    for i, r in enumerate(refs):
        by_family.setdefault(r["class"], []).append(i)
    for i, r in enumerate(refs):
        same = [j for j in by_family[r["class"]] if j != i]
        same.sort(key=lambda j: abs(0.7 * j - 0.7 * i))
        r["hard_negatives"] = [refs[j]["id"] for j in same[:9]]

    manifest = Manifest(references=refs, imitations=imits)
    manifest.validate()
    store = ClipStore(sample_rate, duration, clips=clips)

    if out_dir is not None:
        os.makedirs(os.path.join(out_dir, "audio"), exist_ok=True)
        for cid, clip in clips.items():
            write_wav(os.path.join(out_dir, "audio", f"{cid}.wav"), clip)
        write_manifest(os.path.join(out_dir, "manifest.jsonl"), manifest)
    return manifest, store
