"""Contrastive training engine: cosine similarity matrix, the adapted
NT-Xent loss in both diagonal-handling variants, the BCE heads used by the
ablations, Adam with the four-phase learning-rate schedule, and the epoch
loop that ties encoders, augmentations and losses together.

The adapted NT-Xent treats each imitation (column j of the similarity
matrix) as a query whose positive is the matching reference on the
diagonal.  The "exclusive_diag" variant excludes the positive from the
softmax normalizer, exactly as the loss is defined here; "inclusive_diag"
is the standard form with the positive included.  Both are shift-invariant
in the similarity matrix and are shipped because the exclusive form can go
negative, which some callers may not expect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import augment as aug
from . import encoder as enc
from .audio_io import AudioClip
from .dsp import LogMelConfig, Spectrogram, log_mel
from .evaluation import mrr
from .exceptions import DegenerateInputError


@dataclass(frozen=True)
class LossConfig:
    tau: float = 0.07
    variant: str = "exclusive_diag"      # or "inclusive_diag"
    head: str = "cosine"                 # or "fnn"
    objective: str = "nt_xent"           # or "bce"

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.variant not in ("exclusive_diag", "inclusive_diag"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.head not in ("cosine", "fnn"):
            raise ValueError(f"unknown head {self.head!r}")
        if self.objective not in ("nt_xent", "bce"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.objective == "nt_xent" and self.head == "fnn":
            raise ValueError("nt_xent objective requires the cosine head")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    epochs: float = 30.0
    peak_lr: float = 5e-4                # 7e-5 for the fine-grained setup
    warmup_epochs: float = 4.0
    constant_epochs: float = 4.0
    decay_epochs: float = 14.0
    finetune_epochs: float = 8.0
    warmup_floor: float = 0.01           # lr(0) = warmup_floor * peak
    decay_floor: float = 0.01            # finetune lr = decay_floor * peak
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        total = (self.warmup_epochs + self.constant_epochs
                 + self.decay_epochs + self.finetune_epochs)
        if abs(total - self.epochs) > 1e-9:
            raise ValueError(f"phase lengths sum to {total}, expected epochs = {self.epochs}")
        if min(self.peak_lr, self.warmup_floor, self.decay_floor) <= 0:
            raise ValueError("rates must be > 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")

    def scaled_to(self, epochs: float) -> "TrainConfig":
        """Same schedule shape compressed or stretched to a new epoch count."""
        r = epochs / self.epochs
        return replace(self, epochs=epochs,
                       warmup_epochs=self.warmup_epochs * r,
                       constant_epochs=self.constant_epochs * r,
                       decay_epochs=self.decay_epochs * r,
                       finetune_epochs=self.finetune_epochs * r)


def similarity_matrix(ref_embs: np.ndarray, imit_embs: np.ndarray) -> np.ndarray:
    """S[i, j] = cosine(ref_i, imit_j), clamped to [-1, 1] against rounding."""
    refs = np.asarray(ref_embs, dtype=np.float64)
    imits = np.asarray(imit_embs, dtype=np.float64)
    if refs.shape != imits.shape:
        raise ValueError("reference and imitation embedding counts/dims differ")
    rn = np.linalg.norm(refs, axis=1)
    vn = np.linalg.norm(imits, axis=1)
    if np.any(rn == 0.0) or np.any(vn == 0.0):
        raise DegenerateInputError("zero-norm embedding")
    return np.clip((refs / rn[:, None]) @ (imits / vn[:, None]).T, -1.0, 1.0)


def similarity_backward(ref_embs: np.ndarray, imit_embs: np.ndarray, d_s: np.ndarray):
    """Gradients of sum(dS * S) through the cosine, w.r.t. raw embeddings."""
    refs = np.asarray(ref_embs, dtype=np.float64)
    imits = np.asarray(imit_embs, dtype=np.float64)
    rn = np.linalg.norm(refs, axis=1, keepdims=True)
    vn = np.linalg.norm(imits, axis=1, keepdims=True)
    rhat, vhat = refs / rn, imits / vn
    d_rhat = d_s @ vhat
    d_vhat = d_s.T @ rhat
    d_ref = (d_rhat - (d_rhat * rhat).sum(axis=1, keepdims=True) * rhat) / rn
    d_imit = (d_vhat - (d_vhat * vhat).sum(axis=1, keepdims=True) * vhat) / vn
    return d_ref, d_imit


def nt_xent_loss(s: np.ndarray, config: LossConfig = LossConfig()):
    """Temperature-scaled contrastive loss over an N x N similarity matrix.

    Returns (loss, dS) with the analytic gradient w.r.t. every entry.
    Column j is a softmax over reference candidates for imitation j; the
    exclusive_diag variant drops the positive from the normalizer.
    """
    s = np.asarray(s, dtype=np.float64)
    n = s.shape[0]
    if s.shape != (n, n):
        raise ValueError("similarity matrix must be square")
    z = s / config.tau
    if config.variant == "exclusive_diag":
        if n < 2:
            raise ValueError("exclusive_diag needs N >= 2 (empty normalizer otherwise)")
        off = z.copy()
        np.fill_diagonal(off, -np.inf)
        col_max = off.max(axis=0)
        expz = np.exp(off - col_max)
        denom = expz.sum(axis=0)
        loss = float(np.mean(-np.diag(z) + col_max + np.log(denom)))
        d_z = expz / denom / n
        d_z[np.diag_indices(n)] = -1.0 / n
    else:
        col_max = z.max(axis=0)
        expz = np.exp(z - col_max)
        denom = expz.sum(axis=0)
        loss = float(np.mean(-np.diag(z) + col_max + np.log(denom)))
        d_z = expz / denom / n
        d_z[np.diag_indices(n)] -= 1.0 / n
    return loss, d_z / config.tau


def _bce_from_logits(logits: np.ndarray, labels: np.ndarray):
    """Stable binary cross entropy; returns (mean loss, dlogits)."""
    loss = np.mean(labels * np.logaddexp(0.0, -logits)
                   + (1.0 - labels) * np.logaddexp(0.0, logits))
    probs = 1.0 / (1.0 + np.exp(-logits))
    return float(loss), (probs - labels) / len(logits)


def sample_pairing(n: int, rng: np.random.Generator) -> list:
    """N matched pairs plus N uniformly sampled mismatched pairs."""
    if n < 2:
        raise ValueError("need at least 2 pairs to sample mismatches")
    pairing = [(i, i, 1) for i in range(n)]
    for _ in range(n):
        i = int(rng.integers(n))
        j = int((i + 1 + rng.integers(n - 1)) % n)
        pairing.append((i, j, 0))
    return pairing


def cosine_bce_loss(s: np.ndarray, pairing: list, tau: float = 0.07):
    """BCE on sigmoid(S_ij / tau) over labelled (i, j, match) pairs.

    The cosine score scaled by the temperature acts as the logit.
    Returns (loss, dS)."""
    s = np.asarray(s, dtype=np.float64)
    idx_i = np.array([p[0] for p in pairing])
    idx_j = np.array([p[1] for p in pairing])
    labels = np.array([p[2] for p in pairing], dtype=np.float64)
    loss, d_logits = _bce_from_logits(s[idx_i, idx_j] / tau, labels)
    d_s = np.zeros_like(s)
    np.add.at(d_s, (idx_i, idx_j), d_logits / tau)
    return loss, d_s


def init_fnn(seed: int, embedding_dim: int, hidden: int = 64) -> dict:
    """Similarity head: concat(ref, imit) -> hidden ReLU -> 1 logit."""
    rng = np.random.default_rng(seed)
    d_in = 2 * embedding_dim
    return {
        "w1": rng.uniform(-1, 1, size=(hidden, d_in)) / np.sqrt(d_in),
        "b1": np.zeros(hidden),
        "w2": rng.uniform(-1, 1, size=(1, hidden)) / np.sqrt(hidden),
        "b2": np.zeros(1),
    }


def fnn_forward(fnn: dict, ref_embs: np.ndarray, imit_embs: np.ndarray,
                idx_i: np.ndarray, idx_j: np.ndarray):
    x = np.concatenate([ref_embs[idx_i], imit_embs[idx_j]], axis=1)
    z1 = x @ fnn["w1"].T + fnn["b1"]
    h = np.maximum(z1, 0.0)
    logits = (h @ fnn["w2"].T + fnn["b2"]).ravel()
    return logits, (x, z1, h)


def fnn_scores(fnn: dict, ref_embs: np.ndarray, imit_emb: np.ndarray) -> np.ndarray:
    """Sigmoid match scores of one imitation embedding against many refs."""
    n = len(ref_embs)
    idx = np.arange(n)
    logits, _ = fnn_forward(fnn, ref_embs, np.tile(imit_emb, (n, 1)), idx, idx)
    return 1.0 / (1.0 + np.exp(-logits))


def fnn_bce_loss(ref_embs: np.ndarray, imit_embs: np.ndarray, fnn: dict, pairing: list):
    """BCE through the FNN similarity head on concatenated raw embeddings.

    Returns (loss, grads) where grads carries the head gradients plus
    d_ref / d_imit accumulated back onto the embeddings."""
    ref_embs = np.asarray(ref_embs, dtype=np.float64)
    imit_embs = np.asarray(imit_embs, dtype=np.float64)
    if ref_embs.shape[1] != imit_embs.shape[1]:
        raise ValueError("embedding dims differ")
    if 2 * ref_embs.shape[1] != fnn["w1"].shape[1]:
        raise ValueError("FNN input dim must be twice the embedding dim")
    idx_i = np.array([p[0] for p in pairing])
    idx_j = np.array([p[1] for p in pairing])
    labels = np.array([p[2] for p in pairing], dtype=np.float64)

    logits, (x, z1, h) = fnn_forward(fnn, ref_embs, imit_embs, idx_i, idx_j)
    loss, d_logits = _bce_from_logits(logits, labels)

    d_h = d_logits[:, None] @ fnn["w2"]
    d_z1 = d_h * (z1 > 0.0)
    d_x = d_z1 @ fnn["w1"]
    d = ref_embs.shape[1]
    d_ref = np.zeros_like(ref_embs)
    d_imit = np.zeros_like(imit_embs)
    np.add.at(d_ref, idx_i, d_x[:, :d])
    np.add.at(d_imit, idx_j, d_x[:, d:])
    grads = {
        "w1": d_z1.T @ x,
        "b1": d_z1.sum(axis=0),
        "w2": d_logits[None, :] @ h,
        "b2": np.array([d_logits.sum()]),
        "d_ref": d_ref,
        "d_imit": d_imit,
    }
    return loss, grads


def lr_at(epoch: float, config: TrainConfig = TrainConfig()) -> float:
    """Learning rate at a fractional epoch position.

    Exponential warmup from warmup_floor*peak to peak, a constant phase,
    a linear decrease to decay_floor*peak, then a constant fine-tuning
    phase."""
    w, c, d = config.warmup_epochs, config.constant_epochs, config.decay_epochs
    total = w + c + d + config.finetune_epochs
    if total < epoch <= total + 1e-9:    # scaled phases can round slightly short
        epoch = total
    if not 0.0 <= epoch <= total:
        raise ValueError(f"epoch {epoch} outside [0, {total}]")
    peak = config.peak_lr
    if epoch < w:
        return peak * config.warmup_floor ** (1.0 - epoch / w)
    if epoch < w + c:
        return peak
    if epoch < w + c + d:
        frac = (epoch - w - c) / d
        return peak * (1.0 - (1.0 - config.decay_floor) * frac)
    return peak * config.decay_floor


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, params: dict) -> "AdamState":
        return cls(m={k: np.zeros_like(a) for k, a in params.items()},
                   v={k: np.zeros_like(a) for k, a in params.items()})


def adam_step(params: dict, grads: dict, state: AdamState, lr: float,
              betas=(0.9, 0.999), eps: float = 1e-8):
    """One bias-corrected Adam update; returns (new params, state)."""
    b1, b2 = betas
    state.t += 1
    t = state.t
    new_params = {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {k!r}")
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = state.m[k] / (1.0 - b1 ** t)
        v_hat = state.v[k] / (1.0 - b2 ** t)
        new_params[k] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, state


# --- training loop ----------------------------------------------------------

def standardize(spec: Spectrogram) -> np.ndarray:
    """Zero-mean unit-variance encoder input (guarded against flat specs)."""
    v = spec.values
    return (v - v.mean()) / max(v.std(), 1e-6)


@dataclass
class PairedDataset:
    """Conformed training material: references, their imitations, and
    held-out validation queries ranked against all references."""

    refs: dict                      # ref_id -> AudioClip
    imitations: dict                # ref_id -> [AudioClip, ...]
    val_queries: list = field(default_factory=list)   # [(AudioClip, target ref_id)]

    def __post_init__(self):
        missing = set(self.imitations) - set(self.refs)
        if missing:
            raise ValueError(f"imitations reference unknown ids: {sorted(missing)[:5]}")


@dataclass
class TrainResult:
    ref_encoder: enc.EncoderParams
    imit_encoder: enc.EncoderParams
    fnn: dict | None
    history: list                   # rows of {epoch, loss, val_mrr, lr}
    shared: bool

    def checkpoint_arrays(self) -> dict:
        out = {f"ref/{k}": v for k, v in self.ref_encoder.arrays.items()}
        if not self.shared:
            out.update({f"imit/{k}": v for k, v in self.imit_encoder.arrays.items()})
        if self.fnn is not None:
            out.update({f"fnn/{k}": v for k, v in self.fnn.items()})
        return out


def split_checkpoint(arrays: dict):
    """Inverse of TrainResult.checkpoint_arrays: returns
    (ref_params, imit_params, fnn); imit aliases ref when the checkpoint
    came from a shared-encoder run."""
    groups = {"ref": {}, "imit": {}, "fnn": {}}
    for name, arr in arrays.items():
        prefix, _, key = name.partition("/")
        if prefix not in groups or not key:
            raise ValueError(f"unexpected checkpoint array {name!r}")
        groups[prefix][key] = arr
    ref_params = enc.params_from_arrays(groups["ref"])
    imit_params = enc.params_from_arrays(groups["imit"]) if groups["imit"] else ref_params
    return ref_params, imit_params, groups["fnn"] or None


def _featurize(clip: AudioClip, mel_cfg: LogMelConfig) -> Spectrogram:
    return log_mel(clip, mel_cfg)


def _val_mrr(ref_ids: list, ref_specs: np.ndarray, query_specs: np.ndarray,
             targets: list, ref_params: enc.EncoderParams, imit_params: enc.EncoderParams,
             loss_cfg: LossConfig, fnn: dict | None) -> float:
    if len(targets) == 0:
        return float("nan")
    ref_raw, _ = enc.forward_batch(ref_params, ref_specs, normalize=False)
    q_raw, _ = enc.forward_batch(imit_params, query_specs, normalize=False)
    ranks = []
    for q, target in zip(q_raw, targets):
        if loss_cfg.head == "fnn":
            scores = fnn_scores(fnn, ref_raw, q)
        else:
            ref_unit = ref_raw / np.linalg.norm(ref_raw, axis=1, keepdims=True)
            scores = ref_unit @ (q / np.linalg.norm(q))
        order = sorted(range(len(ref_ids)), key=lambda i: (-scores[i], ref_ids[i]))
        ranks.append(order.index(ref_ids.index(target)) + 1)
    return mrr(ranks)


def train(dataset: PairedDataset, train_cfg: TrainConfig, loss_cfg: LossConfig,
          augment_cfg: aug.AugmentConfig, mel_cfg: LogMelConfig,
          ref_encoder: enc.EncoderParams, imit_encoder: enc.EncoderParams | None = None,
          ) -> TrainResult:
    """Epoch loop: seeded shuffle, one imitation per reference per epoch,
    augment both towers, encode, loss, backprop, Adam with the scheduled
    learning rate.  Passing imit_encoder=None aliases one parameter set for
    both towers (the shared-encoder ablation)."""
    shared = imit_encoder is None
    ref_params = ref_encoder.copy()
    imit_params = ref_params if shared else imit_encoder.copy()

    ref_ids = sorted(dataset.imitations)
    if len(ref_ids) < 2:
        raise ValueError("need at least 2 paired references to train")

    fnn = init_fnn(train_cfg.seed + 1, ref_params.config.embedding_dim) \
        if loss_cfg.head == "fnn" else None

    ref_state = AdamState.zeros_like(ref_params.arrays)
    imit_state = None if shared else AdamState.zeros_like(imit_params.arrays)
    fnn_state = AdamState.zeros_like(fnn) if fnn is not None else None
    betas = (train_cfg.beta1, train_cfg.beta2)

    # validation features are augmentation-free, so compute them once
    all_ref_ids = sorted(dataset.refs)
    val_ref_specs = np.stack([standardize(_featurize(dataset.refs[r], mel_cfg))
                              for r in all_ref_ids])
    val_targets = [t for _, t in dataset.val_queries]
    val_query_specs = (np.stack([standardize(_featurize(c, mel_cfg))
                                 for c, _ in dataset.val_queries])
                       if dataset.val_queries else np.zeros((0, 1, 1)))

    n_epochs = int(round(train_cfg.epochs))
    history = []
    for epoch in range(n_epochs):
        rng = np.random.default_rng([train_cfg.seed, epoch])
        # one pass over every (reference, imitation) pair per epoch, arranged
        # in per-round blocks so a reference never repeats inside a batch
        # (off-diagonal similarity entries must be true negatives)
        per_ref = {rid: [dataset.imitations[rid][k]
                         for k in rng.permutation(len(dataset.imitations[rid]))]
                   for rid in ref_ids}
        max_imits = max(len(v) for v in per_ref.values())
        batches = []
        for round_i in range(max_imits):
            order = rng.permutation(len(ref_ids))
            block = [(ref_ids[i], per_ref[ref_ids[i]][round_i])
                     for i in order if round_i < len(per_ref[ref_ids[i]])]
            for b in range(0, len(block), train_cfg.batch_size):
                chunk = block[b : b + train_cfg.batch_size]
                if len(chunk) >= 2:
                    batches.append(chunk)

        losses = []
        n_batches = len(batches)
        for batch_i, batch in enumerate(batches):
            batch_ids = [rid for rid, _ in batch]
            if len(set(batch_ids)) != len(batch_ids):
                raise ValueError("duplicate reference within a batch")

            def tower_inputs(clips):
                shifted = [aug.random_time_shift(c, augment_cfg, rng) for c in clips]
                specs = [aug.random_masks(_featurize(c, mel_cfg), augment_cfg, rng)
                         for c in shifted]
                specs = aug.random_mixstyle(specs, augment_cfg, rng)
                return np.stack([standardize(s) for s in specs])

            x_ref = tower_inputs([dataset.refs[rid] for rid, _ in batch])
            x_imit = tower_inputs([imit for _, imit in batch])

            ref_raw, ref_cache = enc.forward_batch(ref_params, x_ref, normalize=False)
            imit_raw, imit_cache = enc.forward_batch(imit_params, x_imit, normalize=False)

            fnn_grads = None
            if loss_cfg.objective == "nt_xent":
                s = similarity_matrix(ref_raw, imit_raw)
                loss, d_s = nt_xent_loss(s, loss_cfg)
                d_ref, d_imit = similarity_backward(ref_raw, imit_raw, d_s)
            elif loss_cfg.head == "cosine":
                s = similarity_matrix(ref_raw, imit_raw)
                pairing = sample_pairing(len(batch), rng)
                loss, d_s = cosine_bce_loss(s, pairing, loss_cfg.tau)
                d_ref, d_imit = similarity_backward(ref_raw, imit_raw, d_s)
            else:
                pairing = sample_pairing(len(batch), rng)
                loss, grads = fnn_bce_loss(ref_raw, imit_raw, fnn, pairing)
                d_ref, d_imit = grads["d_ref"], grads["d_imit"]
                fnn_grads = {k: grads[k] for k in ("w1", "b1", "w2", "b2")}

            if not math.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {batch_i}")
            losses.append(loss)

            ref_grads = enc.backward_batch(ref_params, ref_cache, d_ref, normalize=False)
            imit_grads = enc.backward_batch(imit_params, imit_cache, d_imit, normalize=False)

            lr = lr_at(epoch + batch_i / n_batches, train_cfg)
            if shared:
                combined = {k: ref_grads[k] + imit_grads[k] for k in ref_grads}
                new_arrays, ref_state = adam_step(ref_params.arrays, combined, ref_state,
                                                  lr, betas, train_cfg.eps)
                ref_params.arrays = new_arrays
                imit_params = ref_params
            else:
                ref_params.arrays, ref_state = adam_step(ref_params.arrays, ref_grads,
                                                         ref_state, lr, betas, train_cfg.eps)
                imit_params.arrays, imit_state = adam_step(imit_params.arrays, imit_grads,
                                                           imit_state, lr, betas, train_cfg.eps)
            if fnn_grads is not None:
                fnn, fnn_state = adam_step(fnn, fnn_grads, fnn_state, lr, betas, train_cfg.eps)

        val = _val_mrr(all_ref_ids, val_ref_specs, val_query_specs, val_targets,
                       ref_params, imit_params, loss_cfg, fnn)
        history.append({
            "epoch": epoch + 1,
            "loss": float(np.mean(losses)) if losses else float("nan"),
            "val_mrr": val,
            "lr": lr_at(float(min(epoch + 1, train_cfg.epochs)), train_cfg),
        })

    return TrainResult(ref_encoder=ref_params, imit_encoder=imit_params,
                       fnn=fnn, history=history, shared=shared)


def write_metrics_csv(path, history: list) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss,val_mrr,lr\n")
        for row in history:
            fh.write(f"{row['epoch']},{row['loss']:.6f},{row['val_mrr']:.6f},{row['lr']:.8g}\n")


# --- config file ------------------------------------------------------------

def parse_config_file(path) -> dict:
    """Key-value text format: one `key = value` per line, '#' comments."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


_TRAIN_KEYS = {
    "batch_size": int, "epochs": float, "peak_lr": float,
    "warmup_epochs": float, "constant_epochs": float, "decay_epochs": float,
    "finetune_epochs": float, "warmup_floor": float, "decay_floor": float,
    "beta1": float, "beta2": float, "eps": float, "seed": int,
}
_LOSS_KEYS = {"tau": float, "variant": str, "head": str, "objective": str}
_AUG_KEYS = {
    "max_shift": int, "max_time_mask": int, "max_freq_mask": int,
    "mixstyle_p": float, "mixstyle_alpha": float,
}
_MEL_KEYS = {
    "window": int, "hop": int, "n_mels": int,
    "f_min": float, "f_max": float, "log_offset": float,
}


def configs_from_mapping(mapping: dict):
    """Split a flat key-value mapping into the typed config objects.

    Returns (TrainConfig, LossConfig, AugmentConfig, LogMelConfig, extras)
    where extras holds the remaining pipeline keys (sample_rate, duration,
    embedding_dim, dual, val_holdout)."""
    def pick(keys):
        return {k: keys[k](mapping[k]) for k in keys if k in mapping}

    train_cfg = TrainConfig(**pick(_TRAIN_KEYS))
    loss_cfg = LossConfig(**pick(_LOSS_KEYS))
    aug_kwargs = pick(_AUG_KEYS)
    aug_kwargs["seed"] = train_cfg.seed
    augment_cfg = aug.AugmentConfig(**aug_kwargs)
    mel_cfg = LogMelConfig(**pick(_MEL_KEYS))
    extras = {
        "sample_rate": int(mapping.get("sample_rate", 32000)),
        "duration": float(mapping.get("duration", 10.0)),
        "embedding_dim": int(mapping.get("embedding_dim", 128)),
        "dual": mapping.get("dual", "true").lower() in ("true", "1", "yes"),
        "val_holdout": int(mapping.get("val_holdout", 1)),
    }
    known = set(_TRAIN_KEYS) | set(_LOSS_KEYS) | set(_AUG_KEYS) | set(_MEL_KEYS) | set(extras)
    unknown = set(mapping) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return train_cfg, loss_cfg, augment_cfg, mel_cfg, extras
