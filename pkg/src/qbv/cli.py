"""Umbrella command line: qbv features|train|index|query|eval|serve|synth."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import contrastive, encoder as enc, reporting, retrieval, systems
from .audio_io import conform_length, load_audio
from .augment import AugmentConfig
from .dsp import CqtConfig, LogMelConfig, cqt, log_mel, twodft_feature
from .evaluation import ClipStore, gen_synthetic, read_manifest, run_coarse, run_fine


def _load_pipeline_config(path):
    if path is None:
        return (contrastive.TrainConfig(), contrastive.LossConfig(), AugmentConfig(),
                LogMelConfig(), {"sample_rate": 32000, "duration": 10.0,
                                 "embedding_dim": 128, "dual": True, "val_holdout": 1})
    return contrastive.configs_from_mapping(contrastive.parse_config_file(path))


def _cqt_config(args) -> CqtConfig:
    return CqtConfig(f_min=args.cqt_fmin, bins_per_octave=args.cqt_bins_per_octave,
                     n_octaves=args.cqt_octaves, hop=args.cqt_hop,
                     log_compress=not args.no_log_compress)


def _add_cqt_args(p):
    p.add_argument("--cqt-fmin", type=float, default=32.70)
    p.add_argument("--cqt-bins-per-octave", type=int, default=12)
    p.add_argument("--cqt-octaves", type=int, default=8)
    p.add_argument("--cqt-hop", type=int, default=640)
    p.add_argument("--no-log-compress", action="store_true",
                   help="feed raw CQT magnitudes to the 2DFT")


def cmd_features(args):
    clip = conform_length(load_audio(args.input, target_rate=args.sample_rate),
                          target_seconds=args.duration)
    name = os.path.splitext(os.path.basename(args.input))[0]
    if args.kind == "2dft":
        feat = twodft_feature(clip, _cqt_config(args))
        retrieval.write_embeddings(args.out, [name], feat.values[None].astype(np.float32))
    elif args.kind == "logmel":
        spec = log_mel(clip, LogMelConfig())
        retrieval.write_named_arrays(args.out, {f"logmel:{name}": spec.values})
    else:
        spec = cqt(clip, _cqt_config(args))
        retrieval.write_named_arrays(args.out, {f"cqt:{name}": spec.values})
    print(f"wrote {args.kind} features for {name} to {args.out}")


def _dataset_from_manifest(manifest, store, val_holdout, seed):
    rng = np.random.default_rng(seed + 7)
    refs, groups, val = {}, {}, []
    for r in manifest.references:
        imits = manifest.imitations_of(r["id"])
        if not imits:
            continue
        clips = [store.get(im["id"]) for im in imits]
        held = []
        if val_holdout and len(clips) > val_holdout:
            pick = set(rng.permutation(len(clips))[:val_holdout].tolist())
            held = [c for i, c in enumerate(clips) if i in pick]
            clips = [c for i, c in enumerate(clips) if i not in pick]
        refs[r["id"]] = store.get(r["id"])
        groups[r["id"]] = clips
        val.extend((c, r["id"]) for c in held)
    return contrastive.PairedDataset(refs=refs, imitations=groups, val_queries=val)


def cmd_train(args):
    train_cfg, loss_cfg, augment_cfg, mel_cfg, extras = _load_pipeline_config(args.config)
    manifest = read_manifest(args.manifest)
    store = ClipStore.from_manifest(manifest, extras["sample_rate"], extras["duration"],
                                    root=args.root)
    dataset = _dataset_from_manifest(manifest, store, extras["val_holdout"], train_cfg.seed)
    enc_cfg = enc.EncoderConfig(embedding_dim=extras["embedding_dim"])
    ref_encoder = enc.init_encoder(train_cfg.seed, enc_cfg)
    imit_encoder = enc.init_encoder(train_cfg.seed + 1, enc_cfg) if extras["dual"] else None
    result = contrastive.train(dataset, train_cfg, loss_cfg, augment_cfg, mel_cfg,
                               ref_encoder, imit_encoder)
    retrieval.write_named_arrays(args.out, result.checkpoint_arrays())
    contrastive.write_metrics_csv(args.metrics, result.history)
    reporting.write_training_curves(args.curves, result.history)
    final = result.history[-1]
    print(f"trained {len(result.history)} epochs; final loss {final['loss']:.4f}, "
          f"val MRR {final['val_mrr']:.4f}")
    print(f"checkpoint: {args.out}; metrics: {args.metrics}; curves: {args.curves}")


def _encoder_featurizer_from(args, mel_cfg):
    arrays = retrieval.read_named_arrays(args.checkpoint)
    ref_params, imit_params, _ = contrastive.split_checkpoint(arrays)
    return (systems.encoder_featurizer(ref_params, mel_cfg),
            systems.encoder_featurizer(imit_params, mel_cfg))


def cmd_index(args):
    _, _, _, mel_cfg, extras = _load_pipeline_config(args.config)
    manifest = read_manifest(args.manifest)
    store = ClipStore.from_manifest(manifest, extras["sample_rate"], extras["duration"],
                                    root=args.root)
    ref_ids = [r["id"] for r in manifest.references]
    if args.backend == "encoder":
        if not args.checkpoint:
            sys.exit("--checkpoint is required for the encoder backend")
        ref_feat, _ = _encoder_featurizer_from(args, mel_cfg)
        featurizer = ref_feat
    else:
        featurizer = systems.twodft_featurizer(_cqt_config(args))
    index = retrieval.build_index(ref_ids, clips=[store.get(r) for r in ref_ids],
                                  featurizer=featurizer, backend=args.backend)
    retrieval.write_embeddings(args.out, index.ids, index.matrix.astype(np.float32))
    print(f"indexed {len(ref_ids)} references ({args.backend}) -> {args.out}")


def cmd_query(args):
    _, _, _, mel_cfg, extras = _load_pipeline_config(args.config)
    ids, matrix = retrieval.read_embeddings(args.index)
    index = retrieval.EmbeddingIndex(ids=ids, matrix=matrix, backend=args.backend)
    if args.backend == "encoder":
        if not args.checkpoint:
            sys.exit("--checkpoint is required for the encoder backend")
        _, imit_feat = _encoder_featurizer_from(args, mel_cfg)
        featurizer = imit_feat
    else:
        featurizer = systems.twodft_featurizer(_cqt_config(args))
    clip = conform_length(load_audio(args.imitation, target_rate=extras["sample_rate"]),
                          target_seconds=extras["duration"])
    result = retrieval.query(index, clip, min(args.k, len(ids)), featurizer)
    for rid, score in result.entries:
        print(f"{rid}\t{score:.6f}")


def cmd_eval(args):
    train_cfg, loss_cfg, augment_cfg, mel_cfg, extras = _load_pipeline_config(args.config)
    manifest = read_manifest(args.manifest)
    store = ClipStore.from_manifest(manifest, extras["sample_rate"], extras["duration"],
                                    root=args.root)

    if args.backend == "twodft":
        factory = lambda: systems.TwoDftSystem(store, _cqt_config(args))
    elif args.backend == "imported":
        if not args.embeddings:
            sys.exit("--embeddings is required for the imported backend")
        ids, matrix = retrieval.read_embeddings(args.embeddings)
        table = {i: matrix[j] for j, i in enumerate(ids)}
        factory = lambda: systems.ImportedSystem(table)
    else:
        cfg = systems.EncoderSystemConfig(
            train_cfg=train_cfg, loss_cfg=loss_cfg, augment_cfg=augment_cfg,
            mel_cfg=mel_cfg, encoder_cfg=enc.EncoderConfig(embedding_dim=extras["embedding_dim"]),
            dual=extras["dual"])
        factory = lambda: systems.EncoderSystem(store, cfg)

    if args.protocol == "coarse":
        result = run_coarse(manifest, store, factory, candidates=args.candidates)
        paths = reporting.write_coarse_report(args.out_dir, result, args.backend)
        s = result.summary()
        print(reporting.eval_table([{
            "model": args.backend, "mrr": s["mean_mrr"], "std_mrr": s["std_mrr"],
            "mr_at_1": s["mean_mr_at_1"], "std_mr_at_1": s["std_mr_at_1"],
            "mr_at_2": s["mean_mr_at_2"], "std_mr_at_2": s["std_mr_at_2"]}]))
    else:
        report = run_fine(manifest, store, factory, seed=args.seed)
        paths = reporting.write_fine_report(args.out_dir, report, args.backend)
        print(reporting.eval_table([{"model": args.backend, "mrr": report.mrr,
                                     "mr_at_1": report.mr_at[1], "mr_at_2": report.mr_at[2]}]))
    print(f"report written to {paths['json']}, {paths['table']}, {paths['figure']}")


def cmd_serve(args):
    import uvicorn

    from .service import create_app, mount_ui

    _, _, _, mel_cfg, extras = _load_pipeline_config(args.config)
    manifest = read_manifest(args.manifest)
    store = ClipStore.from_manifest(manifest, extras["sample_rate"], extras["duration"],
                                    root=args.root)
    ref_ids = [r["id"] for r in manifest.references]
    backends = {}
    for name in args.backends.split(","):
        name = name.strip()
        if name == "encoder":
            if not args.checkpoint:
                sys.exit("--checkpoint is required to serve the encoder backend")
            ref_feat, imit_feat = _encoder_featurizer_from(args, mel_cfg)
            if args.index:
                ids, matrix = retrieval.read_embeddings(args.index)
                index = retrieval.EmbeddingIndex(ids=ids, matrix=matrix, backend="encoder")
            else:
                index = retrieval.build_index(ref_ids, clips=[store.get(r) for r in ref_ids],
                                              featurizer=ref_feat, backend="encoder")
            backends[name] = _served(index, imit_feat, extras)
        elif name == "twodft":
            featurizer = systems.twodft_featurizer(_cqt_config(args))
            index = retrieval.build_index(ref_ids, clips=[store.get(r) for r in ref_ids],
                                          featurizer=featurizer, backend="twodft")
            backends[name] = _served(index, featurizer, extras)
        else:
            sys.exit(f"unknown backend {name!r}")
    app = create_app(backends, store)
    if args.ui_dir:
        mount_ui(app, args.ui_dir)
    port = int(os.environ.get("QBV_PORT", args.port))
    uvicorn.run(app, host=args.host, port=port)


def _served(index, featurizer, extras):
    from .service import ServedBackend

    return ServedBackend(index=index, featurizer=featurizer,
                         sample_rate=extras["sample_rate"], duration=extras["duration"])


def cmd_synth(args):
    manifest, _ = gen_synthetic(args.classes, args.imitations, args.seed,
                                sample_rate=args.sample_rate, duration=args.duration,
                                out_dir=args.out_dir)
    print(f"wrote {len(manifest.references)} references and "
          f"{len(manifest.imitations)} imitations to {args.out_dir}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbv",
                                     description="query-by-vocal-imitation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="dump log-mel / CQT / 2DFT features")
    p.add_argument("input")
    p.add_argument("--kind", choices=("logmel", "cqt", "2dft"), default="logmel")
    p.add_argument("--out", required=True)
    p.add_argument("--sample-rate", type=int, default=32000)
    p.add_argument("--duration", type=float, default=10.0)
    _add_cqt_args(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="contrastive dual-encoder training")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--metrics", default="metrics.csv")
    p.add_argument("--curves", default="training_curves.png")
    p.add_argument("--root", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("index", help="build a reference embedding index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--backend", choices=("encoder", "twodft"), default="encoder")
    p.add_argument("--checkpoint")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--root", default=".")
    _add_cqt_args(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="rank references for one imitation")
    p.add_argument("imitation")
    p.add_argument("--index", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--backend", choices=("encoder", "twodft"), default="encoder")
    p.add_argument("--checkpoint")
    p.add_argument("--config")
    _add_cqt_args(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="run a retrieval protocol")
    p.add_argument("protocol", choices=("coarse", "fine"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--backend", choices=("encoder", "twodft", "imported"), default="twodft")
    p.add_argument("--config")
    p.add_argument("--embeddings")
    p.add_argument("--candidates", choices=("fold", "all"), default="fold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="eval_out")
    p.add_argument("--root", default=".")
    _add_cqt_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP search service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--index")
    p.add_argument("--checkpoint")
    p.add_argument("--config")
    p.add_argument("--backends", default="twodft")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir")
    p.add_argument("--root", default=".")
    _add_cqt_args(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate a synthetic paired dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", type=int, default=32)
    p.add_argument("--imitations", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=int, default=8000)
    p.add_argument("--duration", type=float, default=2.0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
