"""Concrete retrieval systems wiring features, encoders and the index
together, shared by the evaluation protocols, the CLI and the HTTP
service."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import contrastive, encoder as enc, retrieval
from .audio_io import AudioClip
from .dsp import CqtConfig, LogMelConfig, log_mel, twodft_feature
from .exceptions import DegenerateInputError


def twodft_featurizer(config: CqtConfig):
    def featurize(clip: AudioClip) -> np.ndarray:
        return twodft_feature(clip, config).values
    return featurize


def encoder_featurizer(params: enc.EncoderParams, mel_cfg: LogMelConfig):
    """Standardized log-mel -> encoder embedding; silent audio is rejected
    so the service can answer 422 instead of returning noise scores."""
    def featurize(clip: AudioClip) -> np.ndarray:
        if not np.any(clip.samples):
            raise DegenerateInputError("all-zero waveform")
        spec = log_mel(clip, mel_cfg)
        values = contrastive.standardize(spec)
        emb, _ = enc.forward_batch(params, values[None], normalize=True)
        return emb[0]
    return featurize


class TwoDftSystem:
    """Training-free signal-processing baseline with per-clip feature cache."""

    def __init__(self, store, config: CqtConfig = CqtConfig()):
        self.store = store
        self.config = config
        self._features = {}

    def fit(self, pairs) -> None:
        pass

    def _feature(self, clip: AudioClip) -> np.ndarray:
        key = clip.id
        if key not in self._features:
            self._features[key] = twodft_feature(clip, self.config).values
        return self._features[key]

    def rank(self, imitation: AudioClip, candidate_ids) -> list:
        index = retrieval.build_index(
            list(candidate_ids),
            embeddings=np.stack([self._feature(self.store.get(c)) for c in candidate_ids]),
            backend="twodft")
        return retrieval.query_vector(index, twodft_feature(imitation, self.config).values,
                                      k=len(candidate_ids)).ids()


@dataclass
class EncoderSystemConfig:
    train_cfg: contrastive.TrainConfig
    loss_cfg: contrastive.LossConfig
    augment_cfg: object
    mel_cfg: LogMelConfig
    encoder_cfg: enc.EncoderConfig = field(default_factory=enc.EncoderConfig)
    dual: bool = True
    val_holdout: int = 0            # imitations per reference held out during fit


class EncoderSystem:
    """Contrastively trained dual (or shared) encoder system."""

    def __init__(self, store, config: EncoderSystemConfig):
        self.store = store
        self.config = config
        self.result = None

    def fit(self, pairs) -> None:
        cfg = self.config
        refs, imit_groups, val = {}, {}, []
        rng = np.random.default_rng(cfg.train_cfg.seed + 7)
        for rid, ref_clip, imit_clips in pairs:
            refs[rid] = ref_clip
            imit_clips = list(imit_clips)
            held = []
            if cfg.val_holdout and len(imit_clips) > cfg.val_holdout:
                pick = rng.permutation(len(imit_clips))[: cfg.val_holdout]
                held = [imit_clips[i] for i in sorted(pick)]
                imit_clips = [c for i, c in enumerate(imit_clips) if i not in set(pick)]
            imit_groups[rid] = imit_clips
            val.extend((c, rid) for c in held)
        dataset = contrastive.PairedDataset(refs=refs, imitations=imit_groups, val_queries=val)
        ref_encoder = enc.init_encoder(cfg.train_cfg.seed, cfg.encoder_cfg)
        imit_encoder = enc.init_encoder(cfg.train_cfg.seed + 1, cfg.encoder_cfg) if cfg.dual else None
        self.result = contrastive.train(dataset, cfg.train_cfg, cfg.loss_cfg,
                                        cfg.augment_cfg, cfg.mel_cfg,
                                        ref_encoder, imit_encoder)

    def _embed(self, params, clip: AudioClip, normalize: bool) -> np.ndarray:
        values = contrastive.standardize(log_mel(clip, self.config.mel_cfg))
        emb, _ = enc.forward_batch(params, values[None], normalize=normalize)
        return emb[0]

    def rank(self, imitation: AudioClip, candidate_ids) -> list:
        if self.result is None:
            raise RuntimeError("EncoderSystem.rank called before fit")
        candidate_ids = list(candidate_ids)
        if self.config.loss_cfg.head == "fnn":
            # the FNN similarity head scores raw (unnormalized) embeddings
            ref_raw = np.stack([self._embed(self.result.ref_encoder, self.store.get(c), False)
                                for c in candidate_ids])
            q = self._embed(self.result.imit_encoder, imitation, False)
            scores = contrastive.fnn_scores(self.result.fnn, ref_raw, q)
            order = sorted(range(len(candidate_ids)),
                           key=lambda i: (-scores[i], candidate_ids[i]))
            return [candidate_ids[i] for i in order]
        index = self.build_index(candidate_ids)
        q = self._embed(self.result.imit_encoder, imitation, True)
        return retrieval.query_vector(index, q, k=len(candidate_ids)).ids()

    def build_index(self, candidate_ids) -> retrieval.EmbeddingIndex:
        feats = np.stack([self._embed(self.result.ref_encoder, self.store.get(c), True)
                          for c in candidate_ids])
        return retrieval.build_index(list(candidate_ids), embeddings=feats, backend="encoder")


class ImportedSystem:
    """Ranks with externally computed reference embeddings; imitations must
    also come precomputed (keyed by clip id)."""

    def __init__(self, embeddings: dict):
        self.embeddings = embeddings

    def fit(self, pairs) -> None:
        pass

    def rank(self, imitation: AudioClip, candidate_ids) -> list:
        candidate_ids = list(candidate_ids)
        index = retrieval.build_index(
            candidate_ids,
            embeddings=np.stack([self.embeddings[c] for c in candidate_ids]),
            backend="imported")
        return retrieval.query_vector(index, self.embeddings[imitation.id],
                                      k=len(candidate_ids)).ids()
