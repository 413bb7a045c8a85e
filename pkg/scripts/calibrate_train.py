"""Desk-scale training calibration: explores learning rates and loss
configurations on the synthetic benchmark before the acceptance thresholds
are frozen."""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from qbv import contrastive, encoder as enc
from qbv.augment import AugmentConfig
from qbv.dsp import LogMelConfig
from qbv.evaluation import gen_synthetic

MEL = LogMelConfig(window=512, hop=256, n_mels=32, f_min=0.0, f_max=4000.0)
AUG = AugmentConfig(max_shift=800, max_time_mask=8, max_freq_mask=4, seed=0)


def build_dataset(n_classes, imits, seed):
    manifest, store = gen_synthetic(n_classes, imits, seed=seed)
    refs, groups, val = {}, {}, []
    for r in manifest.references:
        rid = r["id"]
        clips = [store.get(im["id"]) for im in manifest.imitations_of(rid)]
        refs[rid] = store.get(rid)
        groups[rid] = clips[:-1]
        val.append((clips[-1], rid))
    return contrastive.PairedDataset(refs=refs, imitations=groups, val_queries=val)


def run(dataset, seed, peak_lr, epochs, objective="nt_xent", head="cosine",
        dual=True, variant="exclusive_diag", emb=128):
    train_cfg = contrastive.TrainConfig(peak_lr=peak_lr, seed=seed).scaled_to(epochs) \
        if epochs != 30 else contrastive.TrainConfig(peak_lr=peak_lr, seed=seed)
    loss_cfg = contrastive.LossConfig(objective=objective, head=head, variant=variant)
    cfg = enc.EncoderConfig(embedding_dim=emb)
    ref = enc.init_encoder(seed, cfg)
    imit = enc.init_encoder(seed + 1, cfg) if dual else None
    t0 = time.time()
    result = contrastive.train(dataset, train_cfg, loss_cfg, AUG, MEL, ref, imit)
    dt = time.time() - t0
    return result, dt


if __name__ == "__main__":
    dataset = build_dataset(32, 4, seed=0)
    for lr in (5e-4, 1e-3, 2e-3):
        result, dt = run(dataset, seed=0, peak_lr=lr, epochs=30)
        curve = [f"{r['val_mrr']:.3f}" for r in result.history[::5]]
        print(f"lr={lr:g}: final_mrr={result.history[-1]['val_mrr']:.4f} "
              f"loss={result.history[-1]['loss']:.4f} time={dt:.1f}s curve={curve}")
