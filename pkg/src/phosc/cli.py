"""Command-line interface.

Subcommands: synth (build a corpus), encode (export signatures), train,
eval, decode, gradcheck. Exit codes: 0 on success, 1 when an operation
fails at runtime, 2 on usage or configuration errors (bad flags, invalid
config, missing input files, words outside the alphabet).

Configuration comes from --config (JSON, schema-validated); the run seed
resolves as --seed flag, then the PHOSC_SEED environment variable, then
the config file. Artifacts land under --workdir.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config, resolve_seed
from .ctc import (
    CtcAlphabet,
    beam_search_decode,
    best_path_decode,
    brute_force_label_posterior,
    load_prob_matrix,
)
from .errors import ConfigError, PhoscError, UnknownCharacter
from .matcher import build_lexicon, save_split
from .metrics import format_table
from .model import (
    ArchParams,
    TrainParams,
    build_ctc_net,
    build_phoscnet,
    ctc_loss_closure,
    evaluate_ctc,
    evaluate_phoscnet,
    phoscnet_loss_closure,
    predict_strings,
    train_ctc,
    train_phoscnet,
)
from .netcore import grad_check, load_checkpoint, networks_from_checkpoint
from .signature import DEFAULT_ALPHABET, PhocConfig, PhosConfig, write_signatures
from .synthdata import (
    build_corpus,
    default_wordlist,
    load_pgm,
    load_wordlist,
    split_words,
)


def _signature_configs(cfg: dict) -> tuple[PhocConfig, PhosConfig]:
    sig = cfg["signature"]
    return (
        PhocConfig(
            levels=tuple(sig["phoc_levels"]),
            occupancy_threshold=sig["occupancy_threshold"],
        ),
        PhosConfig(levels=tuple(sig["phos_levels"])),
    )


def _arch_params(cfg: dict) -> ArchParams:
    a = cfg["arch"]
    return ArchParams(
        conv_channels=tuple(a["conv_channels"]),
        spp_levels=tuple(a["spp_levels"]),
        head_hidden=a["head_hidden"],
        lstm_hidden=a["lstm_hidden"],
        lstm_layers=a["lstm_layers"],
    )


def _train_params(cfg: dict, variant: str, seed: int, epochs: int | None) -> TrainParams:
    t = cfg["train"]
    return TrainParams(
        lr=t["lr"] if variant == "phoscnet" else t["ctc_lr"],
        weight_decay=t["weight_decay"],
        batch_size=t["batch_size"],
        max_epochs=epochs or t["max_epochs"],
        lambda_c=t["lambda_c"],
        lambda_s=t["lambda_s"],
        patience=t["patience"],
        lr_factor=t["lr_factor"],
        max_lr_reductions=t["max_lr_reductions"],
        seed=seed,
    )


def cmd_synth(args, cfg, seed, workdir) -> int:
    c = cfg["corpus"]
    wordlist_path = args.wordlist or c["wordlist"]
    words = load_wordlist(wordlist_path) if wordlist_path else default_wordlist()
    seen, unseen = split_words(
        words, args.num_seen or c["num_seen"], args.num_unseen or c["num_unseen"], seed
    )
    out = Path(args.out) if args.out else workdir / "corpus"
    summary = build_corpus(
        out,
        seen,
        unseen,
        seed=seed,
        num_styles=args.styles or c["num_styles"],
        train_copies=args.train_copies or c["train_copies"],
    )
    save_split(out / "split.tsv", seen, unseen)
    print(
        json.dumps(
            {
                "corpus": str(out),
                "seed": seed,
                "counts": summary.counts,
                "seen_words": len(seen),
                "unseen_words": len(unseen),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def cmd_encode(args, cfg, seed, workdir) -> int:
    if args.words:
        words = [w for w in args.words.split(",") if w]
    elif args.wordlist:
        words = load_wordlist(args.wordlist)
    else:
        raise ConfigError("encode needs --words or --wordlist")
    phoc_cfg, phos_cfg = _signature_configs(cfg)
    if args.out:
        with Path(args.out).open("w", encoding="utf-8", newline="\n") as f:
            write_signatures(words, phos_cfg, phoc_cfg, f, mode=args.mode)
    else:
        write_signatures(words, phos_cfg, phoc_cfg, sys.stdout, mode=args.mode)
    return 0


def cmd_train(args, cfg, seed, workdir) -> int:
    corpus = Path(args.corpus) if args.corpus else workdir / "corpus"
    arch = _arch_params(cfg)
    params = _train_params(cfg, args.variant, seed, args.epochs)
    phoc_cfg, phos_cfg = _signature_configs(cfg)
    if args.variant == "phoscnet":
        summary = train_phoscnet(corpus, workdir, arch, params, phoc_cfg, phos_cfg)
    else:
        init_from = None
        if args.variant == "ctc_p":
            init_from = Path(args.init_from) if args.init_from else workdir / "phoscnet.ckpt"
            if not init_from.exists():
                raise ConfigError(f"ctc_p needs a phoscnet checkpoint at {init_from}")
        summary = train_ctc(
            corpus,
            workdir,
            arch,
            params,
            alphabet=CtcAlphabet(tuple(DEFAULT_ALPHABET)),
            init_from=init_from,
        )
    print(json.dumps(summary.to_json_dict(), indent=2, sort_keys=True))
    return 0


def cmd_eval(args, cfg, seed, workdir) -> int:
    corpus = Path(args.corpus) if args.corpus else workdir / "corpus"
    ckpt_path = Path(args.checkpoint) if args.checkpoint else workdir / f"{args.variant}.ckpt"
    ckpt = load_checkpoint(ckpt_path)
    nets = networks_from_checkpoint(ckpt)
    reports = []
    if args.variant == "phoscnet":
        meta = json.loads((corpus / "corpus.json").read_text("utf-8"))
        extra = ckpt.extra
        phoc_cfg = PhocConfig(
            levels=tuple(extra.get("phoc_levels", cfg["signature"]["phoc_levels"])),
            occupancy_threshold=extra.get(
                "occupancy_threshold", cfg["signature"]["occupancy_threshold"]
            ),
        )
        phos_cfg = PhosConfig(
            levels=tuple(extra.get("phos_levels", cfg["signature"]["phos_levels"]))
        )
        lexicon = build_lexicon(
            meta["seen_words"], meta["unseen_words"], phoc_cfg, phos_cfg
        )
        protocols = ("zsl", "gzsl") if args.protocol == "both" else (args.protocol,)
        for protocol in protocols:
            reports.append(evaluate_phoscnet(nets, corpus, lexicon, protocol))
    else:
        alphabet = CtcAlphabet(tuple(ckpt.alphabet or DEFAULT_ALPHABET))
        reports.append(
            evaluate_ctc(
                nets,
                corpus,
                alphabet,
                variant=ckpt.extra.get("variant", args.variant),
                decoder=args.decoder or cfg["decode"]["decoder"],
                beam_width=args.beam_width or cfg["decode"]["beam_width"],
            )
        )
    out_path = Path(args.out) if args.out else workdir / f"eval_{args.variant}.json"
    out_path.write_text(
        json.dumps([r.to_json_dict() for r in reports], indent=2, sort_keys=True) + "\n",
        "utf-8",
    )
    sys.stdout.write(format_table(reports))
    print(f"report: {out_path}")
    return 0


def cmd_decode(args, cfg, seed, workdir) -> int:
    decoder = args.decoder or cfg["decode"]["decoder"]
    beam_width = args.beam_width or cfg["decode"]["beam_width"]
    if args.image:
        if not args.checkpoint:
            raise ConfigError("decoding an image needs --checkpoint")
        ckpt = load_checkpoint(args.checkpoint)
        if ckpt.extra.get("variant") not in ("ctc", "ctc_p"):
            raise ConfigError("--image decoding needs a ctc or ctc_p checkpoint")
        nets = networks_from_checkpoint(ckpt)
        alphabet = CtcAlphabet(tuple(ckpt.alphabet or DEFAULT_ALPHABET))
        img = load_pgm(args.image)[None, None, :, :]
        decoder = "beam" if decoder == "beam" else "best_path"
        print(predict_strings(nets, img, alphabet, decoder, beam_width)[0])
        return 0
    if not args.probs:
        raise ConfigError("decode needs --probs or --image")
    probs, alphabet = load_prob_matrix(args.probs)
    if decoder == "best_path":
        print(best_path_decode(probs, alphabet))
    elif decoder == "beam":
        result = beam_search_decode(probs, alphabet, beam_width)
        print(result.best)
        for label, p in result.beams:
            sys.stdout.write(f"{label}\t{p:.6g}\n")
    else:  # oracle
        posterior = brute_force_label_posterior(probs, alphabet)
        ranked = sorted(posterior.items(), key=lambda kv: (-kv[1], kv[0]))
        print(ranked[0][0])
        for label, p in ranked[:beam_width]:
            sys.stdout.write(f"{label}\t{p:.6g}\n")
    return 0


def cmd_gradcheck(args, cfg, seed, workdir) -> int:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0DE]))
    arch = ArchParams(conv_channels=(2, 3, 4), spp_levels=(1, 2), head_hidden=8, lstm_hidden=5)
    shape = (1, 12, 20)
    xb = rng.uniform(0.0, 1.0, size=(2,) + shape)

    nets = build_phoscnet(arch, phoc_dim=10, phos_dim=6, input_shape=shape, seed=seed)
    phoc_t = (rng.uniform(size=(2, 10)) > 0.5).astype(np.float64)
    phos_t = rng.uniform(0.0, 3.0, size=(2, 6))
    report_a = grad_check(
        phoscnet_loss_closure(nets, xb, phoc_t, phos_t),
        {f"{n}:{k}": v for n, net in nets.items() for k, v in net.params.items()},
        tolerance=args.tolerance,
        num_coords=args.coords,
        seed=seed,
    )
    print("phoscnet loss:")
    print(report_a.summary())

    alphabet = CtcAlphabet(("a", "b", "c"))
    nets_c = build_ctc_net(arch, alphabet.num_classes, input_shape=shape, seed=seed)
    report_b = grad_check(
        ctc_loss_closure(nets_c, xb, ["ab", "ca"], alphabet),
        {f"{n}:{k}": v for n, net in nets_c.items() for k, v in net.params.items()},
        tolerance=args.tolerance,
        num_coords=args.coords,
        seed=seed,
    )
    print("ctc loss:")
    print(report_b.summary())
    return 0 if (report_a.passed and report_b.passed) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phosc",
        description="Zero-shot word-image recognition on synthetic data: "
        "attribute signatures (PHOC/PHOS), a CTC recognizer, and their "
        "pretraining combination.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (schema-validated)")
    common.add_argument(
        "--workdir", default="phosc_work", help="artifact directory (default: phosc_work)"
    )
    common.add_argument("--seed", type=int, help="run seed (overrides PHOSC_SEED and config)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="build a synthetic corpus")
    p.add_argument("--out", help="corpus directory (default: <workdir>/corpus)")
    p.add_argument("--num-seen", type=int, dest="num_seen")
    p.add_argument("--num-unseen", type=int, dest="num_unseen")
    p.add_argument("--styles", type=int)
    p.add_argument("--train-copies", type=int, dest="train_copies")
    p.add_argument("--wordlist", help="word list file (default: bundled list)")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("encode", parents=[common], help="export word signatures as TSV")
    p.add_argument("--words", help="comma-separated words")
    p.add_argument("--wordlist", help="word list file")
    p.add_argument("--mode", choices=("phos", "phoc", "phosc"), default="phosc")
    p.add_argument("--out", help="output TSV (default: stdout)")
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("train", parents=[common], help="train a model variant")
    p.add_argument("--variant", choices=("phoscnet", "ctc", "ctc_p"), required=True)
    p.add_argument("--corpus", help="corpus directory (default: <workdir>/corpus)")
    p.add_argument("--epochs", type=int, help="override train.max_epochs")
    p.add_argument(
        "--init-from",
        dest="init_from",
        help="phoscnet checkpoint for ctc_p (default: <workdir>/phoscnet.ckpt)",
    )
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    p.add_argument("--variant", choices=("phoscnet", "ctc", "ctc_p"), required=True)
    p.add_argument("--checkpoint", help="default: <workdir>/<variant>.ckpt")
    p.add_argument("--corpus", help="corpus directory (default: <workdir>/corpus)")
    p.add_argument("--protocol", choices=("zsl", "gzsl", "both"), default="both")
    p.add_argument("--decoder", choices=("best_path", "beam"))
    p.add_argument("--beam-width", type=int, dest="beam_width")
    p.add_argument("--out", help="report JSON path (default: <workdir>/eval_<variant>.json)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("decode", parents=[common], help="decode a probability matrix or image")
    p.add_argument("--probs", help="probability-matrix TSV")
    p.add_argument("--image", help="PGM word image (needs --checkpoint)")
    p.add_argument("--checkpoint")
    p.add_argument("--decoder", choices=("best_path", "beam", "oracle"))
    p.add_argument("--beam-width", type=int, dest="beam_width")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser(
        "gradcheck", parents=[common], help="finite-difference check of both model losses"
    )
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--coords", type=int, default=200)
    p.set_defaults(fn=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = resolve_seed(cfg, args.seed)
        workdir = Path(args.workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        return args.fn(args, cfg, seed, workdir)
    except (ConfigError, UnknownCharacter) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except PhoscError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
